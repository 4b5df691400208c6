import json

import numpy as np
import pytest

from pyrogrid.landscape import FuelClass, Landscape, WeatherSample, WeatherSeries, save_landscape, save_weather
from pyrogrid.network import (
    Branch, BranchKind, Bus, Generator, GridNetwork, Level, Load, Pole, TestbedConfig, build_testbed, save_network,
)


@pytest.fixture(scope="session")
def testbed():
    return build_testbed(TestbedConfig(feeders=1))


@pytest.fixture(scope="session")
def testbed2():
    return build_testbed(TestbedConfig(feeders=2))


def line(bid, a, b, pos, kind=BranchKind.OVERHEAD, x=0.1, rating=100.0, spans=(), **kw):
    return Branch(bid, a, b, kind, (pos[a], pos[b]), x, rating, spans, **kw)


def micro_network(der_mw: float = 0.0) -> GridNetwork:
    """Two Tx buses feeding a three-bus radial Dx feeder.

    1 --[1]-- 2 ==[2 xfmr]== 11 --[3]-- 12 --[4]-- 13
    Loads: bus 2 10 MW, bus 12 1 MW, bus 13 0.5 MW critical.
    """
    pos = {1: (500.0, 2500.0), 2: (1500.0, 2500.0), 11: (1500.0, 2000.0), 12: (1500.0, 1500.0), 13: (1500.0, 1000.0)}
    buses = (
        Bus(1, Level.TX, pos[1], 138.0), Bus(2, Level.TX, pos[2], 138.0),
        Bus(11, Level.DX, pos[11], 12.66, 1), Bus(12, Level.DX, pos[12], 12.66, 1), Bus(13, Level.DX, pos[13], 12.66, 1),
    )
    branches = (
        line(1, 1, 2, pos, rating=100.0),
        line(2, 2, 11, pos, kind=BranchKind.TRANSFORMER, x=0.5, rating=10.0, feeder=1),
        line(3, 11, 12, pos, x=0.2, rating=5.0, spans=(31,), feeder=1),
        line(4, 12, 13, pos, x=0.2, rating=5.0, spans=(41,), feeder=1),
    )
    poles = (Pole(31, (1500.0, 1750.0), "wood", (3,)), Pole(41, (1500.0, 1250.0), "wood", (4,)))
    gens = [Generator(1, 1, 100.0, 0.0, "bulk", 20.0)]
    if der_mw:
        gens.append(Generator(2, 13, der_mw, 0.0, "der", 100.0))
    loads = (Load(2, 2, 10.0, "standard", 4000), Load(12, 12, 1.0, "standard", 500), Load(13, 13, 0.5, "critical", 250))
    return GridNetwork(buses, branches, poles, tuple(gens), loads)


def micro_landscape(burnable_cells=((17, 15),), fuel=FuelClass.GRASS) -> Landscape:
    """30x30 cells of 100 m, nonburnable except the listed cells."""
    grid = np.zeros((30, 30), dtype=np.int8)
    for rc in burnable_cells:
        grid[rc] = fuel
    return Landscape(grid, 100.0)


def write_micro_scenario(tmp_path, *, horizon=24.0, ignitions=({"cell": [17, 15], "t_min": 0.0},),
                         response="binary", crews=1, weather=None, land=None, net=None, **extra):
    net = net or micro_network()
    land = land or micro_landscape()
    weather = weather or WeatherSeries.constant(WeatherSample(0.0, 0.0, 50.0, 20.0), int(horizon * 2))
    save_network(net, tmp_path / "net.json")
    save_landscape(land, tmp_path / "fuel.asc")
    save_weather(weather, tmp_path / "weather.csv")
    sc = {
        "name": "micro", "network": "net.json", "landscape": "fuel.asc", "weather": "weather.csv",
        "horizon": horizon, "timestep": 30.0, "ignitions": list(ignitions), "crews": crews,
        "response_models": {"tx_line": response, "dx_line": response, "pole": response},
        "exposure_buffer_m": 0.0, "seed": 5,
    }
    sc.update(extra)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(sc))
    return path


# acceptance verdicts, echoed in the terminal summary so they survive output capture
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
