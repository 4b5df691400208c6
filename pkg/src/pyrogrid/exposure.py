"""Fire exposure of grid assets and the binary / thermal / fragility damage models.

Also hosts the wind-driven failure and ignition model for grid-to-fire coupling.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtr

from .fire import FireState, Ignition, IgnitionSource
from .landscape import Landscape, LandscapeError, WeatherSample
from .network import BranchKind, ConfigurationError, GridNetwork, Hardening
from .state import AssetState, ComponentId, ComponentState, Damage

HARDENED_MULTIPLIER = 0.5
MEASURES = ("flame_length", "fireline_intensity", "wind_gust")


@dataclass(frozen=True)
class ExposureRecord:
    component: ComponentId
    max_intensity: float = 0.0
    max_flame_length: float = 0.0
    exposure_start: float | None = None
    exposure_duration: float = 0.0
    distance_to_front: float = math.inf

    @property
    def exposed(self) -> bool:
        return self.max_intensity > 0


@dataclass(frozen=True)
class FragilityCurve:
    component_class: str
    measure: str
    theta: float
    beta: float

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ConfigurationError(f"unknown intensity measure {self.measure!r}")
        if not (self.theta > 0 and self.beta > 0):
            raise ConfigurationError("fragility theta and beta must be positive")

    def probability(self, x) -> float:
        if isinstance(x, (int, float)):
            return 0.0 if x <= 0 else 0.5 * math.erfc(-math.log(x / self.theta) / (self.beta * math.sqrt(2.0)))
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            p = ndtr(np.log(x / self.theta) / self.beta)
        p = np.where(x > 0, p, 0.0)
        return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class ThermalParams:
    k_load: float = 20.0
    k_fire: float = 50.0
    kappa: float = 1.0
    t_derate: float = 75.0
    t_fail: float = 95.0
    derate_factor: float = 0.5


def _table(path, default):
    text = Path(path).read_text() if path else resources.files("pyrogrid.data").joinpath(default).read_text()
    return list(csv.DictReader(io.StringIO(text)))


def load_fragility_curves(path=None) -> dict[tuple[str, str], FragilityCurve]:
    return {
        (r["class"], r["measure"]): FragilityCurve(r["class"], r["measure"], float(r["theta"]), float(r["beta"]))
        for r in _table(path, "fragility.csv")
    }


def load_thermal_params(path=None) -> dict[str, ThermalParams]:
    return {
        r["class"]: ThermalParams(
            float(r["k_load"]), float(r["k_fire"]), float(r["kappa"]),
            float(r["T_derate"]), float(r["T_fail"]), float(r["derate_factor"]),
        )
        for r in _table(path, "thermal.csv")
    }


def component_class(net: GridNetwork, cid: ComponentId) -> str:
    kind, ident = cid
    if kind == "pole":
        return f"pole_{net.pole(ident).material}"
    return net.branch_class(net.branch(ident))


# ---------------------------------------------------------------------------
# exposure


def segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    ll = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / ll, 0.0, 1.0) if ll > 0 else np.zeros_like(px)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _sample_polyline(geometry, step):
    pts = []
    for (ax, ay), (bx, by) in zip(geometry[:-1], geometry[1:]):
        n = max(1, int(math.ceil(math.hypot(bx - ax, by - ay) / step)))
        f = np.linspace(0.0, 1.0, n + 1)
        pts.append(np.column_stack((ax + f * (bx - ax), ay + f * (by - ay))))
    return np.vstack(pts)


class ExposureIndex:
    """Pre-rasterized footprint of every exposed component for one landscape and buffer."""

    def __init__(self, net: GridNetwork, land: Landscape, buffer_m: float):
        if buffer_m < 0:
            raise ValueError("buffer_m must be non-negative")
        self.net, self.land, self.buffer_m = net, land, buffer_m
        self.cells: dict[ComponentId, np.ndarray] = {}
        self.points: dict[ComponentId, np.ndarray] = {}
        self.components: list[ComponentId] = [("branch", b.id) for b in net.branches]
        self.components += [("pole", p.id) for p in net.poles]
        for br in net.branches:
            if br.kind != BranchKind.OVERHEAD:
                continue
            self._add(("branch", br.id), br.geometry)
        for pole in net.poles:
            self._add(("pole", pole.id), (pole.location, pole.location))

    def _add(self, cid, geometry):
        land, cs = self.land, self.land.cell_size
        x0, y0, x1, y1 = land.extent
        geom = np.asarray(geometry, dtype=float)
        if geom[:, 0].min() < x0 or geom[:, 0].max() > x1 or geom[:, 1].min() < y0 or geom[:, 1].max() > y1:
            raise LandscapeError(f"component {cid} lies outside the landscape")
        pts = _sample_polyline(geometry, cs / 4.0)
        self.points[cid] = pts
        pad = self.buffer_m + cs
        gx0, gy0 = geom.min(axis=0) - pad
        gx1, gy1 = geom.max(axis=0) + pad
        c_lo = max(int((gx0 - x0) // cs), 0)
        c_hi = min(int((gx1 - x0) // cs) + 1, land.ncols)
        r_lo = max(int((y1 - gy1) // cs), 0)
        r_hi = min(int((y1 - gy0) // cs) + 1, land.nrows)
        rr, cc = np.mgrid[r_lo:r_hi, c_lo:c_hi]
        cx, cy = land.cell_center(rr, cc)
        d = np.full(rr.shape, np.inf)
        for (ax, ay), (bx, by) in zip(geometry[:-1], geometry[1:]):
            d = np.minimum(d, segment_distance(cx, cy, ax, ay, bx, by))
        flat = set((rr[d <= self.buffer_m] * land.ncols + cc[d <= self.buffer_m]).tolist())
        for x, y in pts:
            cell = land.cell_of(x, y)
            if cell is not None:
                flat.add(cell[0] * land.ncols + cell[1])
        self.cells[cid] = np.array(sorted(flat), dtype=np.int64)


def compute_exposure(index: ExposureIndex, fire: FireState, dt: float,
                     previous: dict[ComponentId, ExposureRecord] | None = None) -> dict[ComponentId, ExposureRecord]:
    """Per-component exposure to currently burning cells within the index buffer.

    Intensity and flame length are this step's maxima; start and duration
    accumulate across calls through ``previous``.
    """
    previous = previous or {}
    out = {}
    burning = fire.status.ravel() == 1
    if not burning.any():
        for cid in index.components:
            prev = previous.get(cid)
            out[cid] = ExposureRecord(cid) if prev is None else replace(
                prev, max_intensity=0.0, max_flame_length=0.0, distance_to_front=math.inf)
        return out
    land = index.land
    br, bc = np.nonzero(fire.status == 1)
    tree = cKDTree(np.column_stack(land.cell_center(br, bc)))
    intensity = fire.intensity.ravel()
    flame = fire.flame_length.ravel()
    for cid in index.components:
        prev = previous.get(cid)
        cells = index.cells.get(cid)
        if cells is None:
            out[cid] = ExposureRecord(cid)
            continue
        hot = cells[burning[cells]]
        dist = float(tree.query(index.points[cid])[0].min())
        if hot.size:
            start = prev.exposure_start if prev and prev.exposure_start is not None else fire.t - dt
            dur = (prev.exposure_duration if prev else 0.0) + dt
            out[cid] = ExposureRecord(cid, float(intensity[hot].max()), float(flame[hot].max()), start, dur, dist)
        else:
            out[cid] = ExposureRecord(
                cid, 0.0, 0.0, prev.exposure_start if prev else None, prev.exposure_duration if prev else 0.0, dist)
    return out


# ---------------------------------------------------------------------------
# response models


def binary_response(exposure: ExposureRecord) -> Damage:
    return Damage.FAILED if exposure.max_intensity > 0 else Damage.INTACT


def thermal_response(rating: float, exposure: ExposureRecord, weather: WeatherSample, loading_mw: float,
                     dt: float, params: ThermalParams = ThermalParams()) -> tuple[float, Damage]:
    """Steady-state conductor temperature for one step and the resulting damage state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if rating <= 0:
        raise ConfigurationError("thermal rating must be positive")
    q_fire = params.kappa * exposure.max_intensity / max(exposure.distance_to_front, 1.0) ** 2
    temp = weather.temperature + params.k_load * (loading_mw / rating) ** 2 + params.k_fire * q_fire
    if temp > params.t_fail:
        return temp, Damage.FAILED
    if temp > params.t_derate:
        return temp, Damage.DERATED
    return temp, Damage.INTACT


def measure_value(exposure: ExposureRecord, measure: str, weather: WeatherSample | None = None) -> float:
    if measure == "flame_length":
        return exposure.max_flame_length
    if measure == "fireline_intensity":
        return exposure.max_intensity
    return weather.wind_speed if weather is not None else 0.0


def fragility_response(exposure: ExposureRecord, curve: FragilityCurve, rng, multiplier: float = 1.0,
                       weather: WeatherSample | None = None) -> Damage:
    """Draw one uniform from ``rng`` (a Generator or a pre-drawn float) and compare to p."""
    u = rng if isinstance(rng, float) else float(rng.random())
    p = curve.probability(measure_value(exposure, curve.measure, weather)) * multiplier
    return Damage.FAILED if u < p else Damage.INTACT


# ---------------------------------------------------------------------------
# grid-to-fire


@dataclass(frozen=True)
class WindModel:
    enabled: bool = True
    p_ignition: float = 0.3


def overhead_components(net: GridNetwork) -> list[ComponentId]:
    out = [("branch", b.id) for b in net.branches if b.kind == BranchKind.OVERHEAD]
    return out + [("pole", p.id) for p in net.poles]


def wind_failure_probability(net: GridNetwork, cid: ComponentId, wind_speed: float,
                             curves: dict[tuple[str, str], FragilityCurve]) -> float:
    kind, ident = cid
    if kind == "branch":
        br = net.branch(ident)
        hardening, veg = br.hardening_level, br.vegetation_factor
    else:
        pole = net.pole(ident)
        hardening = pole.hardening_level
        veg = max(net.branch(b).vegetation_factor for b in pole.supported_branches)
    curve = curves[(component_class(net, cid), "wind_gust")]
    mult = (HARDENED_MULTIPLIER if hardening == Hardening.HARDENED else 1.0) * veg
    return curve.probability(wind_speed) * mult


def _failure_point(net, cid, u):
    kind, ident = cid
    if kind == "pole":
        return net.pole(ident).location
    pts = np.asarray(net.branch(ident).geometry, dtype=float)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    target = u * seg.sum()
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    i = min(int(np.searchsorted(cum, target, side="right")) - 1, len(seg) - 1)
    f = (target - cum[i]) / seg[i] if seg[i] > 0 else 0.0
    return tuple(pts[i] + f * (pts[i + 1] - pts[i]))


def wind_failure_and_ignition(net: GridNetwork, weather: WeatherSample, land: Landscape, state: ComponentState,
                              streams, step: int, curves, model: WindModel = WindModel(), t: float = 0.0):
    """Wind-induced failures of overhead assets and the ignitions they start.

    Every non-failed overhead component draws three uniforms per step (failure,
    ignition, location) from its own substream.  De-energized components can
    fail but never ignite.
    """
    failures: list[ComponentId] = []
    ignitions: list[Ignition] = []
    if not model.enabled:
        return failures, ignitions
    burnable = land.burnable_mask()
    for cid in overhead_components(net):
        asset = state.asset(cid)
        u = streams.draws("wind", cid, step, 3)
        if asset.damage == Damage.FAILED or weather.wind_speed <= 0:
            continue
        p = wind_failure_probability(net, cid, weather.wind_speed, curves)
        if u[0] >= p:
            continue
        failures.append(cid)
        if not asset.energized or u[1] >= model.p_ignition:
            continue
        cell = land.cell_of(*_failure_point(net, cid, u[2]))
        if cell is not None and burnable[cell]:
            ignitions.append(Ignition(cell, t, IgnitionSource.GRID_INDUCED, cid))
    return failures, ignitions
