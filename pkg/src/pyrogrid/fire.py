"""Cellular minimum-travel-time fire spread on an 8-neighbour raster.

Rate of spread follows a Rothermel-style multiplicative form
``R = R0 * m(RH) * (1 + c*U**b + 5.275*slope**2)``.  Fireline intensity and flame
length follow Byram.  Wind anisotropy uses an elliptical factor
``g = (1 + e*cos(theta - theta_head)) / (1 + e)`` with eccentricity derived from a
length-to-breadth ratio ``LB = min(1 + 0.25*U, 4)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .landscape import FuelClass, FuelParams, Landscape, WeatherSample

UNBURNED, BURNING, BURNED = 0, 1, 2
SLOPE_COEFF = 5.275

# (drow, dcol, bearing in degrees clockwise from north)
NEIGHBOURS = (
    (-1, 0, 0.0), (-1, 1, 45.0), (0, 1, 90.0), (1, 1, 135.0),
    (1, 0, 180.0), (1, -1, 225.0), (0, -1, 270.0), (-1, -1, 315.0),
)


class IgnitionSource(str, enum.Enum):
    EXOGENOUS = "exogenous"
    GRID_INDUCED = "grid_induced"
    SPOTTING = "spotting"


@dataclass(frozen=True)
class Ignition:
    cell: tuple[int, int]
    time: float
    source: IgnitionSource = IgnitionSource.EXOGENOUS
    component: tuple[str, int] | None = None


@dataclass(frozen=True)
class FireParams:
    p_spot: float = 0.0
    u_ref: float = 10.0  # m/s
    mean_spot_distance: float = 500.0  # m
    precip_extinguish_mm: float = 2.0


@dataclass
class FireState:
    status: np.ndarray
    arrival: np.ndarray
    intensity: np.ndarray
    flame_length: np.ndarray
    t: float = 0.0

    @classmethod
    def empty(cls, shape, t: float = 0.0) -> "FireState":
        return cls(
            np.zeros(shape, dtype=np.int8), np.full(shape, np.inf),
            np.zeros(shape), np.zeros(shape), t,
        )

    def copy(self) -> "FireState":
        return FireState(self.status.copy(), self.arrival.copy(), self.intensity.copy(), self.flame_length.copy(), self.t)

    @property
    def burning(self) -> np.ndarray:
        return self.status == BURNING

    @property
    def active_front(self) -> set[tuple[int, int]]:
        return {(int(r), int(c)) for r, c in zip(*np.nonzero(self.burning))}

    @property
    def affected(self) -> np.ndarray:
        return self.status != UNBURNED

    def any_burning(self) -> bool:
        return bool(np.any(self.status == BURNING))


def wind_factor(wind_speed, wind_power_c, wind_power_b):
    return wind_power_c * np.power(wind_speed, wind_power_b)


def rate_of_spread(fuel: FuelParams, slope, wind_speed, damping=1.0):
    """Head-fire rate of spread in m/min."""
    if not fuel.burnable:
        return 0.0 * np.asarray(slope, dtype=float) if np.ndim(slope) else 0.0
    phi_w = wind_factor(wind_speed, fuel.wind_c, fuel.wind_b)
    phi_s = SLOPE_COEFF * np.square(slope)
    return fuel.base_ros * damping * (1.0 + phi_w + phi_s)


def byram_outputs(fuel: FuelParams, ros):
    """Fireline intensity (kW/m) and flame length (m) for a spread rate in m/min."""
    ros = np.asarray(ros, dtype=float)
    intensity = fuel.heat_per_area * ros / 60.0
    flame = 0.0775 * np.power(intensity, 0.46)
    if intensity.ndim == 0:
        return float(intensity), float(flame)
    return intensity, flame


def ellipse_eccentricity(wind_speed: float) -> float:
    lb = min(1.0 + 0.25 * wind_speed, 4.0)
    return math.sqrt(1.0 - 1.0 / lb**2)


def direction_factor(bearing: float, weather: WeatherSample) -> float:
    """Fraction of head-fire ROS along ``bearing``; 1 at the head, (1-e)/(1+e) at the back."""
    e = ellipse_eccentricity(weather.wind_speed)
    head = (weather.wind_direction + 180.0) % 360.0
    return (1.0 + e * math.cos(math.radians(bearing - head))) / (1.0 + e)


def _cell_tables(land: Landscape):
    n = len(FuelClass)
    table = [land.fuels[FuelClass(i)] for i in range(n)]
    return {
        "r0": np.array([f.base_ros for f in table])[land.fuel],
        "c": np.array([f.wind_c for f in table])[land.fuel],
        "b": np.array([f.wind_b for f in table])[land.fuel],
        "hw": np.array([f.heat_per_area for f in table])[land.fuel],
        "res": np.array([f.residence_time for f in table])[land.fuel],
    }


def ros_grid(land: Landscape, weather: WeatherSample) -> np.ndarray:
    tab = _cell_tables(land)
    m = land.moisture(weather.relative_humidity)
    return tab["r0"] * m * (1.0 + tab["c"] * np.power(weather.wind_speed, tab["b"]) + SLOPE_COEFF * land.slope**2)


def _intensity(hw, ros):
    intensity = hw * ros / 60.0
    return intensity, 0.0775 * np.power(intensity, 0.46)


def apply_ignitions(state: FireState, ignitions, t: float, land: Landscape, weather: WeatherSample | None = None):
    """Set each burnable ignition cell burning at time ``t``.

    Returns ``(new_state, accepted, suppressed)``; cells already alight keep
    their earlier arrival.
    """
    new = state.copy()
    burnable = land.burnable_mask()
    accepted, suppressed = [], []
    ros = ros_grid(land, weather) if weather is not None else _cell_tables(land)["r0"]
    hw = _cell_tables(land)["hw"]
    for ign in ignitions:
        r, c = ign.cell
        if not (0 <= r < land.nrows and 0 <= c < land.ncols) or not burnable[r, c]:
            suppressed.append(ign)
            continue
        if new.status[r, c] != UNBURNED:
            continue
        new.status[r, c] = BURNING
        new.arrival[r, c] = t
        new.intensity[r, c], new.flame_length[r, c] = _intensity(hw[r, c], ros[r, c])
        accepted.append(ign)
    return new, accepted, suppressed


def spread_step(state: FireState, land: Landscape, weather: WeatherSample, dt: float,
                params: FireParams = FireParams()) -> FireState:
    """Advance the fire from ``state.t`` to ``state.t + dt``.

    Burning cells push candidate arrival times into unburned burnable neighbours
    (``distance / (R * g)``); cells reached by ``t + dt`` ignite, and newly
    ignited cells keep spreading inside the same step.  Candidates that fall
    before the step start (after a rate increase) are clamped to it.  Rain at
    or above ``params.precip_extinguish_mm`` puts every burning cell out.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0, t1 = state.t, state.t + dt
    new = state.copy()
    new.t = t1
    tab = _cell_tables(land)
    burning = state.status == BURNING

    if weather.precipitation >= params.precip_extinguish_mm:
        new.status[burning] = BURNED
        return new
    if burning.any():
        _propagate(new, burning, land, weather, tab, t0, t1)

    done = (new.status == BURNING) & (t1 - new.arrival > tab["res"])
    new.status[done] = BURNED
    return new


def _propagate(new: FireState, burning, land, weather, tab, t0, t1):
    m = land.moisture(weather.relative_humidity)
    ros = tab["r0"] * m * (1.0 + tab["c"] * np.power(weather.wind_speed, tab["b"]) + SLOPE_COEFF * land.slope**2)
    rows, cols = np.nonzero(burning)
    cs = land.cell_size
    reach = int(math.ceil(float(ros.max()) * (t1 - t0) / cs)) + 2
    r0, r1 = max(rows.min() - reach, 0), min(rows.max() + reach + 1, land.nrows)
    c0, c1 = max(cols.min() - reach, 0), min(cols.max() + reach + 1, land.ncols)
    win = (slice(r0, r1), slice(c0, c1))
    h, w = r1 - r0, c1 - c0
    ros_w = ros[win]
    unburned = (new.status[win] == UNBURNED) & (ros_w > 0)
    src_ok = burning[win] | unburned
    ids = np.arange(h * w).reshape(h, w)
    super_node = h * w

    src_list, dst_list, wt_list, dir_list = [], [], [], []
    for k, (dr, dc, bearing) in enumerate(NEIGHBOURS):
        g = direction_factor(bearing, weather)
        dist = cs * (math.sqrt(2.0) if dr and dc else 1.0)
        sr = slice(max(0, -dr), h - max(0, dr))
        sc = slice(max(0, -dc), w - max(0, dc))
        tr = slice(max(0, dr), h - max(0, -dr))
        tc = slice(max(0, dc), w - max(0, -dc))
        ok = src_ok[sr, sc] & unburned[tr, tc]
        src_list.append(ids[sr, sc][ok])
        dst_list.append(ids[tr, tc][ok])
        wt_list.append(dist / (ros_w[tr, tc][ok] * g))
        dir_list.append(np.full(ok.sum(), k))

    # super source feeds every burning cell at its own arrival time
    arr_w = new.arrival[win]
    b_ids = ids[burning[win]]
    base = float(arr_w[burning[win]].min()) - 1.0
    src_list.append(np.full(b_ids.size, super_node))
    dst_list.append(b_ids)
    wt_list.append(arr_w.ravel()[b_ids] - base)

    src = np.concatenate(src_list)
    dst = np.concatenate(dst_list)
    wts = np.concatenate(wt_list)
    graph = coo_matrix((wts, (src, dst)), shape=(h * w + 1, h * w + 1)).tocsr()
    dist, pred = dijkstra(graph, directed=True, indices=super_node, return_predecessors=True, limit=t1 - base)
    dist = dist[:-1].reshape(h, w)
    pred = pred[:-1].reshape(h, w)

    cand = base + dist
    ignite = unburned & np.isfinite(dist) & (cand <= t1)
    if not ignite.any():
        return
    # spread direction of each new cell from its predecessor
    rr, cc = np.nonzero(ignite)
    p = pred[rr, cc]
    pr, pc = p // w, p % w
    bearings = np.degrees(np.arctan2(cc - pc, -(rr - pr))) % 360.0
    g = np.array([direction_factor(b, weather) for b in bearings])
    ros_dir = ros_w[rr, cc] * g
    intensity, flame = _intensity(tab["hw"][win][rr, cc], ros_dir)

    gr, gc = rr + r0, cc + c0
    new.status[gr, gc] = BURNING
    new.arrival[gr, gc] = np.maximum(cand[rr, cc], t0)
    new.intensity[gr, gc] = intensity
    new.flame_length[gr, gc] = flame


def spot_ignitions(state: FireState, land: Landscape, weather: WeatherSample, rng: np.random.Generator,
                   params: FireParams) -> list[Ignition]:
    """At most one long-range firebrand ignition per step, landing downwind.

    Always draws four uniforms so the stream stays aligned across steps.
    """
    u = rng.random(4)
    if params.p_spot <= 0:
        return []
    rows, cols = np.nonzero(state.status == BURNING)
    if rows.size == 0:
        return []
    p = min(1.0, params.p_spot * weather.wind_speed / params.u_ref)
    if u[0] >= p:
        return []
    i = min(int(u[1] * rows.size), rows.size - 1)
    distance = -params.mean_spot_distance * math.log1p(-u[2])
    heading = math.radians((weather.wind_direction + 180.0) % 360.0)
    x, y = land.cell_center(rows[i], cols[i])
    cell = land.cell_of(float(x) + distance * math.sin(heading), float(y) + distance * math.cos(heading))
    if cell is None:
        return []
    return [Ignition(cell, state.t, IgnitionSource.SPOTTING)]


# ---------------------------------------------------------------------------
# export


def perimeter_geojson(state: FireState, land: Landscape, properties: dict | None = None) -> dict:
    """Dissolved burning+burned cells as a GeoJSON FeatureCollection."""
    from shapely.geometry import box, mapping
    from shapely.ops import unary_union

    mask = state.affected
    cs = land.cell_size
    x0, _, _, y1 = land.extent
    rects = []
    for r in range(mask.shape[0]):
        row = mask[r]
        if not row.any():
            continue
        padded = np.concatenate(([False], row, [False]))
        edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
        for a, b in zip(edges[::2], edges[1::2]):
            rects.append(box(x0 + a * cs, y1 - (r + 1) * cs, x0 + b * cs, y1 - r * cs))
    features = []
    if rects:
        geom = unary_union(rects)
        features.append({
            "type": "Feature",
            "properties": dict(properties or {}),
            "geometry": _round_coords(mapping(geom)),
        })
    return {"type": "FeatureCollection", "features": features}


def _round_coords(obj):
    if isinstance(obj, dict):
        return {k: _round_coords(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        if obj and isinstance(obj[0], (int, float)):
            return [round(float(v), 3) for v in obj]
        return [_round_coords(v) for v in obj]
    return obj
