from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import lognorm

from pyrogrid.exposure import (
    ExposureIndex, ExposureRecord, FragilityCurve, ThermalParams, WindModel, binary_response, compute_exposure,
    fragility_response, load_fragility_curves, thermal_response, wind_failure_and_ignition, wind_failure_probability,
)
from pyrogrid.fire import BURNING, FireState
from pyrogrid.landscape import FuelClass, Landscape, LandscapeError, WeatherSample
from pyrogrid.network import BranchKind, ConfigurationError, Hardening
from pyrogrid.rng import StreamBank
from pyrogrid.state import ComponentState, Damage

from conftest import micro_landscape, micro_network

CURVES = load_fragility_curves()


def burning(land, cells):
    fire = FireState.empty(land.shape, t=30.0)
    for (r, c), i in cells.items():
        fire.status[r, c] = BURNING
        fire.arrival[r, c] = 0.0
        fire.intensity[r, c] = i
        fire.flame_length[r, c] = 0.0775 * i**0.46
    return fire


@pytest.fixture
def micro():
    net = micro_network()
    land = micro_landscape()
    return net, land, ExposureIndex(net, land, 0.0)


def test_no_burning_cells_zero_exposure(micro):
    net, land, idx = micro
    recs = compute_exposure(idx, FireState.empty(land.shape), 30.0)
    assert set(recs) == set(idx.components)
    assert all(r.max_intensity == 0 and r.max_flame_length == 0 and r.exposure_duration == 0 for r in recs.values())


def test_single_cell_intensity(micro):
    net, land, idx = micro
    recs = compute_exposure(idx, burning(land, {(17, 15): 500.0}), 30.0)
    assert recs[("branch", 4)].max_intensity == 500.0
    assert recs[("branch", 4)].exposure_duration == 30.0
    assert recs[("branch", 3)].max_intensity == 0.0
    assert recs[("pole", 41)].max_intensity == 500.0
    # the cell centre sits half a cell east of the line
    assert recs[("branch", 4)].distance_to_front == pytest.approx(50.0)


def test_max_over_crossed_cells(micro):
    net, land, idx = micro
    recs = compute_exposure(idx, burning(land, {(16, 15): 200.0, (19, 15): 800.0}), 30.0)
    assert recs[("branch", 4)].max_intensity == 800.0


def test_underground_never_exposed():
    net = micro_network()
    ug = replace(net.branch(4), kind=BranchKind.UNDERGROUND, spans=())
    net = replace(net, branches=net.branches[:3] + (ug,), poles=net.poles[:1])
    land = micro_landscape()
    idx = ExposureIndex(net, land, 200.0)
    recs = compute_exposure(idx, burning(land, {(17, 15): 5000.0}), 30.0)
    assert recs[("branch", 4)].max_intensity == 0.0
    assert binary_response(recs[("branch", 4)]) == Damage.INTACT


def test_buffer_widens_footprint():
    net, land = micro_network(), micro_landscape()
    fire = burning(land, {(17, 17): 300.0})  # about 200 m east of branch 4
    assert compute_exposure(ExposureIndex(net, land, 0.0), fire, 30.0)[("branch", 4)].max_intensity == 0
    assert compute_exposure(ExposureIndex(net, land, 260.0), fire, 30.0)[("branch", 4)].max_intensity == 300


def test_duration_accumulates(micro):
    net, land, idx = micro
    fire = burning(land, {(17, 15): 100.0})
    r1 = compute_exposure(idx, fire, 30.0)
    fire.t = 60.0
    r2 = compute_exposure(idx, fire, 30.0, r1)
    rec = r2[("branch", 4)]
    assert rec.exposure_start == 0.0 and rec.exposure_duration == 60.0


def test_component_outside_landscape():
    with pytest.raises(LandscapeError):
        ExposureIndex(micro_network(), Landscape(np.ones((5, 5)), 100.0), 0.0)


def test_negative_buffer_rejected():
    with pytest.raises(ValueError):
        ExposureIndex(micro_network(), micro_landscape(), -1.0)


# --- response models -----------------------------------------------------------


def test_binary_examples():
    assert binary_response(ExposureRecord(("branch", 1), 0.0)) == Damage.INTACT
    assert binary_response(ExposureRecord(("branch", 1), 0.1)) == Damage.FAILED


CALM = WeatherSample(0.0, 0.0, 50.0, 30.0)


def test_thermal_no_fire_no_load():
    temp, dmg = thermal_response(10.0, ExposureRecord(("branch", 1)), CALM, 0.0, 30.0)
    assert temp == 30.0 and dmg == Damage.INTACT


def test_thermal_derated_example():
    # T = 30 + 20*(1)^2 + k_fire*q with k_fire*q = 40
    p = ThermalParams(k_load=20.0, k_fire=40.0, kappa=1.0)
    exp = ExposureRecord(("branch", 1), max_intensity=1.0, distance_to_front=0.0)
    temp, dmg = thermal_response(5.0, exp, CALM, 5.0, 30.0, p)
    assert temp == pytest.approx(30 + 20 + 40) == 90.0
    assert dmg == Damage.DERATED


def test_thermal_threshold_semantics():
    p = ThermalParams(k_load=0.0, k_fire=1.0, kappa=1.0)
    just_above = ExposureRecord(("branch", 1), max_intensity=65.001, distance_to_front=1.0)
    at_fail = ExposureRecord(("branch", 1), max_intensity=65.0, distance_to_front=1.0)
    assert thermal_response(1.0, just_above, CALM, 0.0, 30.0, p)[1] == Damage.FAILED
    assert thermal_response(1.0, at_fail, CALM, 0.0, 30.0, p)[1] == Damage.DERATED
    far = ExposureRecord(("branch", 1), max_intensity=65.001, distance_to_front=100.0)
    assert thermal_response(1.0, far, CALM, 0.0, 30.0, p)[1] == Damage.INTACT


def test_thermal_errors():
    with pytest.raises(ConfigurationError):
        thermal_response(0.0, ExposureRecord(("branch", 1)), CALM, 0.0, 30.0)
    with pytest.raises(ValueError):
        thermal_response(1.0, ExposureRecord(("branch", 1)), CALM, 0.0, 0.0)


def test_fragility_median_and_zero():
    for beta in (0.1, 0.5, 2.0):
        c = FragilityCurve("dx_line", "flame_length", 2.0, beta)
        assert c.probability(2.0) == pytest.approx(0.5)
        assert c.probability(0.0) == 0.0
        assert c.probability(np.array([0.0, 2.0])).tolist() == pytest.approx([0.0, 0.5])


def test_fragility_matches_lognormal_cdf():
    c = FragilityCurve("dx_line", "flame_length", 2.0, 0.5)
    xs = np.linspace(0.1, 10, 50)
    assert np.allclose([c.probability(float(x)) for x in xs], lognorm.cdf(xs, s=0.5, scale=2.0), atol=1e-12)


def test_fragility_invalid():
    with pytest.raises(ConfigurationError):
        FragilityCurve("dx_line", "flame_length", 0.0, 0.5)
    with pytest.raises(ConfigurationError):
        FragilityCurve("dx_line", "heat", 1.0, 0.5)


def test_fragility_monte_carlo():
    c = FragilityCurve("dx_line", "flame_length", 2.0, 0.5)
    rec = ExposureRecord(("branch", 1), 1.0, 2.0)
    rng = np.random.default_rng(2024)
    fails = sum(fragility_response(rec, c, rng) == Damage.FAILED for _ in range(10_000))
    assert abs(fails / 10_000 - 0.5) <= 0.015


def test_fragility_zero_exposure_never_fails():
    c = FragilityCurve("dx_line", "flame_length", 2.0, 0.5)
    rng = np.random.default_rng(0)
    assert all(fragility_response(ExposureRecord(("branch", 1)), c, rng) == Damage.INTACT for _ in range(1000))


@given(st.floats(1e-3, 50), st.floats(0, 50), st.floats(0.05, 3), st.floats(0.1, 10), st.floats(0, 10))
def test_fragility_monotone(x, dx, beta, theta, dtheta):
    c = FragilityCurve("dx_line", "flame_length", theta, beta)
    assert c.probability(x + dx) >= c.probability(x)
    c2 = FragilityCurve("dx_line", "flame_length", theta + dtheta, beta)
    assert c2.probability(x) <= c.probability(x)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 5000)), min_size=1, max_size=30),
       st.floats(0, 1, exclude_max=True))
def test_binary_is_step_fragility_limit(intensities, u):
    # theta -> 0: any positive exposure fails for every draw, zero exposure never does
    step = FragilityCurve("dx_line", "fireline_intensity", 1e-300, 1e-3)
    for i in intensities:
        rec = ExposureRecord(("branch", 1), i, 0.0775 * i**0.46)
        assert fragility_response(rec, step, u) == binary_response(rec)


# --- wind model ----------------------------------------------------------------


def _wind(net, land, state, u, seed=1, step=0, model=WindModel()):
    return wind_failure_and_ignition(net, WeatherSample(u, 0.0, 10.0, 30.0), land, state, StreamBank(seed), step,
                                     CURVES, model)


def test_calm_no_wind_failures(testbed):
    land = Landscape(np.full((120, 120), FuelClass.GRASS), 100.0)
    f, i = _wind(testbed, land, ComponentState.initial(testbed), 0.0)
    assert f == [] and i == []


def test_deenergized_fail_but_never_ignite():
    net = micro_network()
    land = Landscape(np.full((30, 30), FuelClass.GRASS), 100.0)
    live = ComponentState.initial(net)
    dead = ComponentState.initial(net)
    for a in list(dead.branches.values()) + list(dead.poles.values()):
        a.energized = False
    model = WindModel(p_ignition=1.0)
    tot_f = tot_i = 0
    for seed in range(40):
        f1, i1 = _wind(net, land, live, 200.0, seed, model=model)
        f2, i2 = _wind(net, land, dead, 200.0, seed, model=model)
        assert f1 == f2
        assert i2 == []
        tot_f += len(f2)
        tot_i += len(i1)
    assert tot_f > 0 and tot_i > 0


def test_hardened_strictly_less():
    net = micro_network()
    hard = replace(net, branches=tuple(
        replace(b, hardening_level=Hardening.HARDENED) if b.id == 3 else b for b in net.branches))
    for u in (5.0, 20.0, 60.0, 120.0):
        p0 = wind_failure_probability(net, ("branch", 3), u, CURVES)
        p1 = wind_failure_probability(hard, ("branch", 3), u, CURVES)
        assert 0 < p1 < p0
        assert p1 == pytest.approx(0.5 * p0)


def test_vegetation_multiplier():
    net = micro_network()
    veg = replace(net, branches=tuple(replace(b, vegetation_factor=0.5) if b.id == 3 else b for b in net.branches))
    assert wind_failure_probability(veg, ("branch", 3), 50.0, CURVES) == pytest.approx(
        0.5 * wind_failure_probability(net, ("branch", 3), 50.0, CURVES))


def test_wind_model_deterministic(testbed):
    land = Landscape(np.full((120, 120), FuelClass.GRASS), 100.0)
    state = ComponentState.initial(testbed)
    a = _wind(testbed, land, state, 45.0, seed=9, step=3)
    b = _wind(testbed, land, state, 45.0, seed=9, step=3)
    assert a == b and a[0]


def test_wind_ignitions_carry_provenance():
    net = micro_network()
    land = Landscape(np.full((30, 30), FuelClass.GRASS), 100.0)
    state = ComponentState.initial(net)
    for seed in range(30):
        fails, igns = _wind(net, land, state, 200.0, seed, model=WindModel(p_ignition=1.0))
        for ign in igns:
            assert ign.source.value == "grid_induced"
            assert ign.component in fails
            assert land.burnable_mask()[ign.cell]
