"""Raster WUI fuel landscape, weather series and fuel parameters."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .network import ConfigurationError


class LandscapeError(ConfigurationError):
    pass


class UnknownFuelClass(LandscapeError):
    pass


class DimensionMismatch(LandscapeError):
    pass


class FuelClass(enum.IntEnum):
    NONBURNABLE = 0
    GRASS = 1
    SHRUB = 2
    TIMBER = 3
    URBAN_WUI = 4


@dataclass(frozen=True)
class FuelParams:
    fuel_class: FuelClass
    base_ros: float  # m/min
    wind_c: float
    wind_b: float
    heat_per_area: float  # kJ/m^2
    residence_time: float  # min

    @property
    def burnable(self) -> bool:
        return self.base_ros > 0


@dataclass(frozen=True)
class MoistureTable:
    """Piecewise-linear damping factor in (0, 1] as a function of relative humidity."""

    rh: tuple[float, ...]
    damping: tuple[float, ...]

    def __call__(self, rh_pct: float) -> float:
        return float(np.interp(rh_pct, self.rh, self.damping))


def _data_text(name: str) -> str:
    return resources.files("pyrogrid.data").joinpath(name).read_text()


def load_fuel_table(path=None) -> dict[FuelClass, FuelParams]:
    text = Path(path).read_text() if path else _data_text("fuels.csv")
    out = {}
    for r in csv.DictReader(io.StringIO(text)):
        fc = FuelClass(int(r["code"]))
        fp = FuelParams(
            fc, float(r["base_ros_m_min"]), float(r["wind_c"]), float(r["wind_b"]),
            float(r["heat_per_area_kj_m2"]), float(r["residence_min"]),
        )
        if fp.base_ros < 0 or (fc == FuelClass.NONBURNABLE and fp.base_ros != 0):
            raise LandscapeError(f"invalid base rate of spread for {fc.name}")
        out[fc] = fp
    return out


def load_moisture_table(path=None) -> MoistureTable:
    text = Path(path).read_text() if path else _data_text("moisture.csv")
    rows = list(csv.DictReader(io.StringIO(text)))
    table = MoistureTable(tuple(float(r["rh_pct"]) for r in rows), tuple(float(r["damping"]) for r in rows))
    if not all(0 < d <= 1 for d in table.damping):
        raise LandscapeError("moisture damping must lie in (0, 1]")
    return table


@dataclass
class Landscape:
    """Row-major raster; row 0 is the northern edge, as in ESRI ASCII grids."""

    fuel: np.ndarray
    cell_size: float
    slope: np.ndarray | None = None
    elevation: np.ndarray | None = None
    origin: tuple[float, float] = (0.0, 0.0)
    fuels: dict[FuelClass, FuelParams] = field(default_factory=load_fuel_table)
    moisture: MoistureTable = field(default_factory=load_moisture_table)

    def __post_init__(self):
        if self.cell_size <= 0:
            raise LandscapeError("cell_size must be positive")
        self.fuel = np.asarray(self.fuel, dtype=np.int8)
        codes = set(np.unique(self.fuel).tolist())
        bad = codes - {int(f) for f in FuelClass}
        if bad:
            raise UnknownFuelClass(f"unknown fuel class code(s) {sorted(bad)}")
        if self.slope is None:
            self.slope = np.zeros(self.fuel.shape)
        if self.elevation is None:
            self.elevation = np.zeros(self.fuel.shape)
        self.slope = np.asarray(self.slope, dtype=float)
        self.elevation = np.asarray(self.elevation, dtype=float)
        if self.slope.shape != self.fuel.shape or self.elevation.shape != self.fuel.shape:
            raise DimensionMismatch("slope/elevation grids must match the fuel grid")

    @property
    def nrows(self) -> int:
        return self.fuel.shape[0]

    @property
    def ncols(self) -> int:
        return self.fuel.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.fuel.shape

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return x0, y0, x0 + self.ncols * self.cell_size, y0 + self.nrows * self.cell_size

    def burnable_mask(self) -> np.ndarray:
        lut = np.array([self.fuels[FuelClass(c)].burnable for c in range(len(FuelClass))])
        return lut[self.fuel]

    def cell_of(self, x: float, y: float) -> tuple[int, int] | None:
        x0, y0, x1, y1 = self.extent
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            return None
        col = min(int((x - x0) // self.cell_size), self.ncols - 1)
        row = min(int((y1 - y) // self.cell_size), self.nrows - 1)
        return row, col

    def cell_center(self, row, col):
        x0, _, _, y1 = self.extent
        return x0 + (np.asarray(col) + 0.5) * self.cell_size, y1 - (np.asarray(row) + 0.5) * self.cell_size

    def fuel_at(self, x: float, y: float) -> FuelClass:
        cell = self.cell_of(x, y)
        return FuelClass.NONBURNABLE if cell is None else FuelClass(int(self.fuel[cell]))

    def check_covers(self, net) -> None:
        bx0, by0, bx1, by1 = net.bounding_box()
        x0, y0, x1, y1 = self.extent
        if bx0 < x0 or by0 < y0 or bx1 > x1 or by1 > y1:
            raise DimensionMismatch(
                f"landscape extent {self.extent} does not cover network bounds {(bx0, by0, bx1, by1)}"
            )


# ---------------------------------------------------------------------------
# ESRI ASCII grid I/O


def read_ascii_grid(path) -> tuple[dict, np.ndarray]:
    try:
        lines = Path(path).read_text().split("\n")
    except OSError as exc:
        raise LandscapeError(f"cannot read grid {path}: {exc}") from exc
    header = {}
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) == 2 and parts[0][0].isalpha():
            header[parts[0].lower()] = parts[1]
            i += 1
        else:
            break
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        cellsize = float(header["cellsize"])
        xll = float(header.get("xllcorner", 0.0))
        yll = float(header.get("yllcorner", 0.0))
        nodata = float(header.get("nodata_value", -9999))
    except (KeyError, ValueError) as exc:
        raise LandscapeError(f"{path}: bad grid header ({exc})") from exc
    rows = [ln.split() for ln in lines[i:] if ln.strip()]
    if len(rows) != nrows or any(len(r) != ncols for r in rows):
        raise DimensionMismatch(f"{path}: header says {nrows}x{ncols} but data disagrees")
    try:
        data = np.array(rows, dtype=float)
    except ValueError as exc:
        raise LandscapeError(f"{path}: non-numeric grid value") from exc
    meta = {"ncols": ncols, "nrows": nrows, "cellsize": cellsize, "xllcorner": xll, "yllcorner": yll, "nodata": nodata}
    return meta, data


def write_ascii_grid(path, data: np.ndarray, cell_size: float, origin=(0.0, 0.0), fmt="%d", nodata=-9999) -> None:
    nrows, ncols = data.shape
    with open(path, "w") as fh:
        fh.write(f"ncols {ncols}\nnrows {nrows}\nxllcorner {origin[0]:g}\nyllcorner {origin[1]:g}\n")
        fh.write(f"cellsize {cell_size:g}\nNODATA_value {nodata}\n")
        np.savetxt(fh, data, fmt=fmt)


def _sibling(path: Path, suffix: str) -> Path | None:
    cand = path.with_name(path.stem + suffix + path.suffix)
    return cand if cand.exists() else None


def load_landscape(path, slope_path=None, elevation_path=None, network=None, fuels_path=None) -> Landscape:
    """Read a fuel-code grid plus optional slope/elevation grids.

    Slope and elevation default to siblings named ``<stem>_slope.asc`` and
    ``<stem>_elev.asc``.  NODATA fuel cells become nonburnable.
    """
    path = Path(path)
    meta, codes = read_ascii_grid(path)
    codes = np.where(codes == meta["nodata"], FuelClass.NONBURNABLE, codes)
    if np.any(codes != np.round(codes)):
        raise UnknownFuelClass(f"{path}: fuel codes must be integers")
    valid = {int(f) for f in FuelClass}
    bad = set(np.unique(codes).astype(int).tolist()) - valid
    if bad:
        raise UnknownFuelClass(f"{path}: unknown fuel class code(s) {sorted(bad)}")
    grids = {}
    for key, given, suffix in (("slope", slope_path, "_slope"), ("elevation", elevation_path, "_elev")):
        p = Path(given) if given else _sibling(path, suffix)
        if p is None:
            continue
        m, g = read_ascii_grid(p)
        if g.shape != codes.shape or m["cellsize"] != meta["cellsize"]:
            raise DimensionMismatch(f"{p}: grid does not match fuel grid {codes.shape}")
        grids[key] = np.where(g == m["nodata"], 0.0, g)
    kw = {}
    if fuels_path:
        kw["fuels"] = load_fuel_table(fuels_path)
    land = Landscape(
        codes.astype(np.int8), meta["cellsize"], grids.get("slope"), grids.get("elevation"),
        (meta["xllcorner"], meta["yllcorner"]), **kw,
    )
    if network is not None:
        land.check_covers(network)
    return land


def save_landscape(land: Landscape, path) -> None:
    path = Path(path)
    write_ascii_grid(path, land.fuel, land.cell_size, land.origin)
    write_ascii_grid(path.with_name(path.stem + "_slope" + path.suffix), land.slope, land.cell_size, land.origin, fmt="%.4f")
    write_ascii_grid(path.with_name(path.stem + "_elev" + path.suffix), land.elevation, land.cell_size, land.origin, fmt="%.2f")


# ---------------------------------------------------------------------------
# weather


class WeatherError(ConfigurationError):
    pass


@dataclass(frozen=True)
class WeatherSample:
    wind_speed: float
    wind_direction: float  # degrees from north, direction the wind blows from
    relative_humidity: float
    temperature: float
    precipitation: float = 0.0


@dataclass(frozen=True)
class WeatherSeries:
    samples: tuple[WeatherSample, ...]
    timestep: float = 30.0

    def __post_init__(self):
        if not self.samples:
            raise WeatherError("weather series is empty")
        for s in self.samples:
            if s.wind_speed < 0:
                raise WeatherError("wind speed must be non-negative")
            if not 0 <= s.relative_humidity <= 100:
                raise WeatherError("relative humidity must lie in [0, 100]")

    @property
    def horizon(self) -> float:
        return len(self.samples) * self.timestep

    @classmethod
    def constant(cls, sample: WeatherSample, steps: int, timestep: float = 30.0) -> "WeatherSeries":
        return cls((sample,) * steps, timestep)


def weather_at(series: WeatherSeries, t: float) -> WeatherSample:
    """Zero-order hold: the sample whose step contains ``t``."""
    if t < 0 or t > series.horizon:
        raise WeatherError(f"t={t} min outside weather horizon [0, {series.horizon}]")
    k = min(int(t // series.timestep), len(series.samples) - 1)
    return series.samples[k]


WEATHER_COLUMNS = ("t_min", "wind_ms", "dir_deg", "rh_pct", "temp_c", "precip_mm")


def load_weather(path) -> WeatherSeries:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise WeatherError(f"cannot read weather file {path}: {exc}") from exc
    if not rows:
        raise WeatherError(f"{path}: no weather rows")
    missing = set(WEATHER_COLUMNS) - set(rows[0])
    if missing:
        raise WeatherError(f"{path}: missing columns {sorted(missing)}")
    try:
        times = [float(r["t_min"]) for r in rows]
        samples = tuple(
            WeatherSample(float(r["wind_ms"]), float(r["dir_deg"]), float(r["rh_pct"]), float(r["temp_c"]), float(r["precip_mm"]))
            for r in rows
        )
    except ValueError as exc:
        raise WeatherError(f"{path}: non-numeric weather value") from exc
    if times[0] != 0:
        raise WeatherError(f"{path}: weather must start at t_min=0")
    steps = np.diff(times)
    if len(steps) and not np.allclose(steps, steps[0]):
        raise WeatherError(f"{path}: weather rows must be evenly spaced")
    dt = float(steps[0]) if len(steps) else 30.0
    return WeatherSeries(samples, dt)


def save_weather(series: WeatherSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WEATHER_COLUMNS)
        for k, s in enumerate(series.samples):
            w.writerow([f"{k * series.timestep:g}", f"{s.wind_speed:g}", f"{s.wind_direction:g}",
                        f"{s.relative_humidity:g}", f"{s.temperature:g}", f"{s.precipitation:g}"])


@dataclass(frozen=True)
class RedFlagThresholds:
    wind_speed_min: float = 15.0
    humidity_max: float = 20.0


def red_flag(sample: WeatherSample, thresholds: RedFlagThresholds) -> bool:
    return sample.wind_speed >= thresholds.wind_speed_min and sample.relative_humidity <= thresholds.humidity_max
