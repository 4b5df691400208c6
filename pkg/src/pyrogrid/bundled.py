"""Self-contained example scenarios on the testbed with a synthetic WUI landscape.

``write_bundled(name, out_dir)`` writes a scenario JSON together with every file
it references, so the CLI can run it directly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.spatial import cKDTree

from .exposure import segment_distance
from .landscape import FuelClass, Landscape, WeatherSample, WeatherSeries, save_landscape, save_weather
from .network import GridNetwork, Level, TestbedConfig, build_testbed, save_network

BUNDLED = ("null", "high_wind", "wui_fire")


def synthetic_landscape(net: GridNetwork, cell_size: float = 100.0, extent=(12000.0, 12000.0),
                        seed: int = 7, wui_radius_m: float = 300.0) -> Landscape:
    """Patchy grass/shrub/timber with urban WUI around Dx buses.

    Transmission corridors and substations are cleared (nonburnable): every cell
    touched by a transmission line is fuel-free.
    """
    rng = np.random.default_rng(seed)
    shape = (int(round(extent[1] / cell_size)), int(round(extent[0] / cell_size)))
    noise = gaussian_filter(rng.standard_normal(shape), sigma=6)
    lo, hi = np.quantile(noise, [0.45, 0.75])
    fuel = np.where(noise < lo, FuelClass.GRASS, np.where(noise < hi, FuelClass.SHRUB, FuelClass.TIMBER))

    relief = gaussian_filter(rng.standard_normal(shape), sigma=12)
    elevation = 400.0 * (relief - relief.min()) / np.ptp(relief)
    gy, gx = np.gradient(elevation, cell_size)
    slope = np.hypot(gx, gy)

    rows, cols = np.mgrid[0:shape[0], 0:shape[1]]
    cx = (cols + 0.5) * cell_size
    cy = extent[1] - (rows + 0.5) * cell_size
    pts = np.column_stack((cx.ravel(), cy.ravel()))

    dx_xy = [b.coordinates for b in net.buses if b.level == Level.DX]
    if dx_xy:
        d, _ = cKDTree(dx_xy).query(pts)
        fuel.ravel()[d <= wui_radius_m] = FuelClass.URBAN_WUI

    cleared = np.zeros(shape, dtype=bool)
    for br in net.branches:
        if net.branch_class(br) != "tx_line":
            continue
        for (ax, ay), (bx, by) in zip(br.geometry[:-1], br.geometry[1:]):
            cleared |= segment_distance(cx, cy, ax, ay, bx, by) <= 0.75 * cell_size
    tx_xy = [b.coordinates for b in net.buses if b.level == Level.TX]
    d, _ = cKDTree(tx_xy).query(pts)
    cleared.ravel()[d <= 150.0] = True
    fuel[cleared] = FuelClass.NONBURNABLE
    return Landscape(fuel.astype(np.int8), cell_size, slope, elevation)


def _series(blocks, dt=30.0) -> WeatherSeries:
    """``blocks`` are ``(hours, WeatherSample)`` pieces laid end to end."""
    samples = []
    for hours, sample in blocks:
        samples += [sample] * int(round(hours * 60.0 / dt))
    return WeatherSeries(tuple(samples), dt)


def _weather(name: str) -> WeatherSeries:
    calm = WeatherSample(2.0, 270.0, 50.0, 20.0)
    if name == "null":
        return _series([(168, calm)])
    if name == "high_wind":
        return _series([
            (6, WeatherSample(6.0, 45.0, 35.0, 28.0)),
            (12, WeatherSample(22.0, 45.0, 10.0, 34.0)),  # red flag
            (6, WeatherSample(6.0, 45.0, 30.0, 26.0)),
            (3, WeatherSample(3.0, 90.0, 70.0, 16.0, 5.0)),  # rain stops the fires
            (45, WeatherSample(3.0, 270.0, 60.0, 20.0)),
        ])
    return _series([
        (12, WeatherSample(10.0, 45.0, 20.0, 30.0)),
        (3, WeatherSample(3.0, 90.0, 70.0, 16.0, 5.0)),
        (81, WeatherSample(3.0, 270.0, 60.0, 20.0)),
    ])


def write_bundled(name: str, out_dir, feeders: int = 1) -> Path:
    """Write scenario ``name`` and its inputs to ``out_dir``; returns the scenario path."""
    if name not in BUNDLED:
        raise ValueError(f"unknown bundled scenario {name!r}; choose from {BUNDLED}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = build_testbed(TestbedConfig(feeders=feeders))
    save_network(net, out / "net.json")
    save_landscape(synthetic_landscape(net), out / "landscape.asc")
    weather = _weather(name)
    save_weather(weather, out / "weather.csv")

    dx_zone = {"psps": {"zone": "all_dx_overhead", "wind_speed_min": 15.0, "humidity_max": 20.0}}
    (out / "policy_none.json").write_text(json.dumps({}, indent=1) + "\n")
    (out / "policy_psps.json").write_text(json.dumps(dx_zone, indent=1, sort_keys=True) + "\n")

    scenario = {
        "name": name,
        "network": "net.json",
        "landscape": "landscape.asc",
        "weather": "weather.csv",
        "timestep": 30.0,
        "seed": 1,
        "crews": 2,
        "response_models": {"tx_line": "fragility", "dx_line": "fragility", "pole": "fragility"},
    }
    if name == "null":
        scenario.update(horizon=168.0, policy="policy_none.json", ensemble_size=1)
    elif name == "high_wind":
        scenario.update(horizon=72.0, policy="policy_none.json", ensemble_size=50)
    else:
        top = net.bus(100 * 2 + 18).coordinates  # far end of the feeder trunk
        plan = {"der_additions": [{"bus": 100 * 2 + 14, "p_max": 1.0}]}
        policy = {"islanding": [1], "auto_shutoff": {"enabled": True, "trigger_distance_m": 500.0, "branches": "all_dx_overhead"}}
        (out / "plan_der.json").write_text(json.dumps(plan, indent=1, sort_keys=True) + "\n")
        (out / "policy_island.json").write_text(json.dumps(policy, indent=1, sort_keys=True) + "\n")
        scenario.update(
            horizon=96.0, plan="plan_der.json", policy="policy_island.json", ensemble_size=10,
            ignitions=[{"x": top[0] + 700.0, "y": top[1] + 700.0, "t_min": 60.0}],
        )
    path = out / "scenario.json"
    path.write_text(json.dumps(scenario, indent=1, sort_keys=True) + "\n")
    return path
