import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pyrogrid.exposure import ExposureRecord, load_fragility_curves, wind_failure_and_ignition, wind_failure_probability
from pyrogrid.landscape import FuelClass, Landscape, RedFlagThresholds, WeatherSample
from pyrogrid.mitigation import (
    AutoShutoffPolicy, MitigationPlan, OperationalPolicy, PspsPolicy, apply_plan, auto_shutoff, form_islands,
    psps_decision,
)
from pyrogrid.network import BranchKind, ConfigurationError, energization_path_exists, energized_buses, to_json
from pyrogrid.power import dc_power_flow
from pyrogrid.rng import StreamBank
from pyrogrid.state import ComponentState

from conftest import micro_network

CURVES = load_fragility_curves()
CALM = WeatherSample(2.0, 0.0, 60.0, 20.0)
RED_FLAG = WeatherSample(22.0, 45.0, 10.0, 35.0)


def test_empty_plan_is_identity(testbed):
    assert to_json(apply_plan(testbed, MitigationPlan())) == to_json(testbed)


def test_harden_branch_halves_wind_probability(testbed):
    bid = next(b.id for b in testbed.branches if testbed.branch_class(b) == "dx_line")
    hard = apply_plan(testbed, MitigationPlan(harden_branches=frozenset({bid})))
    for u in (10.0, 30.0, 60.0, 90.0):
        assert wind_failure_probability(hard, ("branch", bid), u, CURVES) == pytest.approx(
            0.5 * wind_failure_probability(testbed, ("branch", bid), u, CURVES))


def test_hardening_failure_sets_are_subsets(testbed):
    land = Landscape(np.full((120, 120), FuelClass.GRASS), 100.0)
    over = [b.id for b in testbed.branches if b.kind == BranchKind.OVERHEAD]
    hard = apply_plan(testbed, MitigationPlan(harden_branches=frozenset(over),
                                              harden_poles=frozenset(p.id for p in testbed.poles)))
    w = WeatherSample(55.0, 0.0, 10.0, 30.0)
    strict = False
    for seed in range(20):
        base, _ = wind_failure_and_ignition(testbed, w, land, ComponentState.initial(testbed), StreamBank(seed), 0, CURVES)
        hf, _ = wind_failure_and_ignition(hard, w, land, ComponentState.initial(hard), StreamBank(seed), 0, CURVES)
        assert set(hf) <= set(base)
        strict |= len(hf) < len(base)
    assert strict


def test_der_at_205_keeps_islanded_feeder_energizable(testbed):
    net = apply_plan(testbed, MitigationPlan(der_additions=((205, 2.0),)))
    state = ComponentState.initial(net)
    state.branches[200].in_service = False  # feeder transformer
    assert energization_path_exists(net, state, 205)
    assert not energization_path_exists(testbed, state, 205)


def test_plan_errors(testbed):
    with pytest.raises(ConfigurationError):
        apply_plan(testbed, MitigationPlan(harden_branches=frozenset({9999})))
    with pytest.raises(ConfigurationError):
        apply_plan(testbed, MitigationPlan(harden_poles=frozenset({-1})))
    with pytest.raises(ConfigurationError):
        apply_plan(testbed, MitigationPlan(harden_branches=frozenset({201, 202}), budget=1))
    with pytest.raises(ConfigurationError):
        apply_plan(testbed, MitigationPlan(der_additions=((5, 1.0),)))


def test_vegetation_management(testbed):
    bid = next(b.id for b in testbed.branches if testbed.branch_class(b) == "dx_line")
    net = apply_plan(testbed, MitigationPlan(vegetation_managed=frozenset({bid})))
    assert net.branch(bid).vegetation_factor == 0.5


PSPS = OperationalPolicy(psps=PspsPolicy(True, RedFlagThresholds(15.0, 20.0), frozenset({201, 202, 203})))


def test_psps_examples():
    assert psps_decision(PSPS, CALM) == set()
    assert psps_decision(PSPS, RED_FLAG) == {201, 202, 203}
    empty = OperationalPolicy(psps=PspsPolicy(True, RedFlagThresholds(15.0, 20.0), frozenset()))
    assert psps_decision(empty, RED_FLAG) == set()


def test_policy_shorthand_and_validation(testbed):
    pol = OperationalPolicy.from_dict({"psps": {"zone": "all_dx_overhead"}}, testbed)
    assert pol.psps.enabled
    assert pol.psps.zone == {b.id for b in testbed.branches
                             if testbed.branch_class(b) == "dx_line" and b.kind == BranchKind.OVERHEAD}
    with pytest.raises(ConfigurationError):
        OperationalPolicy.from_dict({"psps": {"zone": [424242]}}, testbed)
    with pytest.raises(ConfigurationError):
        OperationalPolicy.from_dict({"islanding": [7]}, testbed)
    with pytest.raises(ConfigurationError):
        OperationalPolicy.from_dict({"psps": {"zone": [201], "wind_speed_min": math.inf}}, testbed)


def _rec(bid, intensity=0.0, dist=math.inf):
    return ExposureRecord(("branch", bid), intensity, 0.0, None, 0.0, dist)


AUTO = OperationalPolicy(auto_shutoff=AutoShutoffPolicy(True, 500.0, 30.0))


def test_auto_shutoff_examples():
    far = {("branch", b): _rec(b, dist=10_000.0) for b in (11, 12, 13)}
    assert auto_shutoff(AUTO, far, CALM) == set()
    near = far | {("branch", 12): _rec(12, dist=300.0)}
    assert auto_shutoff(AUTO, near, CALM) == {12}
    zero = OperationalPolicy(auto_shutoff=AutoShutoffPolicy(True, 0.0, math.inf))
    recs = {("branch", 11): _rec(11, 50.0, 40.0), ("branch", 12): _rec(12, 0.0, 40.0)}
    assert auto_shutoff(zero, recs, CALM) == {11}


def test_auto_shutoff_wind_trigger(testbed):
    gusty = WeatherSample(35.0, 0.0, 60.0, 20.0)
    got = auto_shutoff(AUTO, {}, gusty, testbed)
    assert got == {b.id for b in testbed.branches if b.kind == BranchKind.OVERHEAD}
    scoped = OperationalPolicy(auto_shutoff=AutoShutoffPolicy(True, 500.0, 30.0, frozenset({201})))
    assert auto_shutoff(scoped, {("branch", 5): _rec(5, 100.0)}, gusty) == {201}


def test_auto_shutoff_disabled():
    assert auto_shutoff(OperationalPolicy(), {("branch", 1): _rec(1, 100.0)}, RED_FLAG) == set()


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.integers(1, 30), st.tuples(st.floats(0, 1000), st.floats(0, 5000)), max_size=15),
       st.floats(0, 3000))
def test_auto_shutoff_is_per_branch(recs, trigger):
    pol = OperationalPolicy(auto_shutoff=AutoShutoffPolicy(True, trigger, math.inf))
    ex = {("branch", b): _rec(b, i, d) for b, (i, d) in recs.items()}
    full = auto_shutoff(pol, ex, CALM)
    for b in recs:
        assert (b in full) == bool(auto_shutoff(pol, {("branch", b): ex[("branch", b)]}, CALM))


def _feeder_net(der_mw, critical_mw):
    net = micro_network(der_mw=der_mw)
    loads = tuple(replace(ld, demand=critical_mw) if ld.id == 13 else ld for ld in net.loads)
    return replace(net, loads=loads)


ISLAND = OperationalPolicy(islanding=frozenset({1}))


def _cut(net):
    state = ComponentState.initial(net)
    state.branches[2].in_service = False  # transformer out
    return state


def test_island_forms_when_der_covers_critical():
    net = _feeder_net(2.0, 1.5)
    state = form_islands(net, _cut(net), ISLAND)
    assert state.committed[2]
    sol = dc_power_flow(net, state)
    # oracle: 2 MW of DER covers 1.5 MW critical first, the rest goes to the 1 MW standard load
    assert sol.served[13] == pytest.approx(1.5)
    assert sol.served[12] == pytest.approx(0.5)
    assert sol.dispatch[2] == pytest.approx(2.0)
    assert 13 in energized_buses(net, state)


def test_no_island_when_der_too_small():
    net = _feeder_net(1.0, 1.5)
    state = form_islands(net, _cut(net), ISLAND)
    assert not state.committed[2]
    assert dc_power_flow(net, state).served[13] == 0.0
    assert 13 not in energized_buses(net, state)


def test_no_island_without_permission_or_der():
    net = _feeder_net(2.0, 1.5)
    assert not form_islands(net, _cut(net), OperationalPolicy()).committed[2]
    bare = micro_network()
    st_ = form_islands(bare, _cut(bare), ISLAND)
    assert 13 not in energized_buses(bare, st_)


def test_der_stays_committed_while_grid_connected():
    net = _feeder_net(2.0, 1.5)
    state = form_islands(net, ComponentState.initial(net), OperationalPolicy())
    assert state.committed[2]
    # backup pricing keeps it idle while bulk supply is available
    assert dc_power_flow(net, state).dispatch[2] == 0.0
