"""DC power flow with islanding, priority load shedding and overload cascades."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .network import BASE_MVA, ConfigurationError, GridNetwork, Load, available_generators, islands
from .state import Cause, ComponentId, ComponentState

# 1e-9 per-unit on the 100 MVA base
FLOW_TOL_MW = 1e-9 * BASE_MVA


class PowerFlowError(ConfigurationError):
    pass


@dataclass
class PowerSolution:
    islands: list[frozenset[int]]
    slack: dict[int, int | None]
    dispatch: dict[int, float]
    served: dict[int, float]
    demand: dict[int, float]
    flows: dict[int, float]
    island_of_bus: dict[int, int] = field(default_factory=dict)

    @property
    def shed(self) -> dict[int, float]:
        return {i: self.demand[i] - self.served[i] for i in self.served}

    def energized_buses(self) -> set[int]:
        live = {k for k, s in self.slack.items() if s is not None}
        return {b for b, k in self.island_of_bus.items() if k in live}


@dataclass(frozen=True)
class TraceEvent:
    step: int
    component: ComponentId
    cause: Cause


class CascadeTrace:
    """Ordered log of component outages with their cause; one entry per component per step."""

    def __init__(self, events=None):
        self.events: list[TraceEvent] = list(events or [])
        self._seen = {(e.step, e.component) for e in self.events}

    def record(self, step: int, component: ComponentId, cause: Cause) -> bool:
        key = (step, component)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.events.append(TraceEvent(step, component, Cause(cause)))
        return True

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def copy(self) -> "CascadeTrace":
        return CascadeTrace(self.events)


def priority_shed(capacity: float, loads: list[Load]) -> dict[int, float]:
    """Serve loads by descending criticality weight, pro-rata inside the marginal class."""
    served = {ld.id: 0.0 for ld in loads}
    remaining = max(0.0, capacity)
    by_weight: dict[float, list[Load]] = defaultdict(list)
    for ld in loads:
        by_weight[ld.weight].append(ld)
    for w in sorted(by_weight, reverse=True):
        group = by_weight[w]
        total = sum(ld.demand for ld in group)
        if total <= remaining:
            for ld in group:
                served[ld.id] = ld.demand
            remaining -= total
        else:
            frac = remaining / total if total > 0 else 0.0
            for ld in group:
                served[ld.id] = ld.demand * frac
            remaining = 0.0
    return served


def effective_rating(net: GridNetwork, state: ComponentState, branch_id: int) -> float:
    return net.branch(branch_id).thermal_rating * state.branches[branch_id].rating_factor


def _commit(units, target):
    # drop the most expensive units while their minimum output exceeds what can be absorbed
    units = sorted(units, key=lambda g: (g.marginal_cost, g.id))
    while units and sum(g.p_min for g in units) > min(target, sum(g.p_max for g in units)) + 1e-12:
        units.pop()
    return units


def dc_power_flow(net: GridNetwork, state: ComponentState) -> PowerSolution:
    """Solve each island separately with the largest available unit as angle reference."""
    isl = islands(net, state)
    island_of_bus = {b: k for k, members in enumerate(isl) for b in members}
    gens = available_generators(net, state)
    dispatch = {g.id: 0.0 for g in net.generators}
    served = {ld.id: 0.0 for ld in net.loads}
    demand = {ld.id: ld.demand for ld in net.loads}
    flows = {br.id: 0.0 for br in net.branches}
    slack: dict[int, int | None] = {}

    gens_by_island = defaultdict(list)
    for g in gens:
        gens_by_island[island_of_bus[g.bus]].append(g)
    loads_by_island = defaultdict(list)
    for ld in net.loads:
        loads_by_island[island_of_bus[ld.bus]].append(ld)
    branches_by_island = defaultdict(list)
    for br in net.branches:
        if state.branch_available(net, br.id):
            branches_by_island[island_of_bus[br.from_bus]].append(br)

    for k, members in enumerate(isl):
        units = _commit(gens_by_island[k], sum(ld.demand for ld in loads_by_island[k]))
        if not units:
            slack[k] = None
            continue
        cap = sum(g.p_max for g in units)
        island_served = priority_shed(cap, loads_by_island[k])
        served.update(island_served)
        total = sum(island_served.values())
        remaining = total - sum(g.p_min for g in units)
        for g in units:
            extra = min(g.p_max - g.p_min, max(remaining, 0.0))
            dispatch[g.id] = g.p_min + extra
            remaining -= extra
        ref = max(units, key=lambda g: (g.p_max, -g.id))
        slack[k] = ref.bus

        island_branches = branches_by_island[k]
        if not island_branches:
            continue
        order = sorted(members)
        idx = {b: i for i, b in enumerate(order)}
        p = np.zeros(len(order))
        for g in units:
            p[idx[g.bus]] += dispatch[g.id] / BASE_MVA
        for ld in loads_by_island[k]:
            p[idx[ld.bus]] -= served[ld.id] / BASE_MVA
        bmat = np.zeros((len(order), len(order)))
        for br in island_branches:
            if br.reactance <= 0:
                raise PowerFlowError(f"island {k} (buses {order[0]}..): branch {br.id} has non-positive reactance")
            i, j = idx[br.from_bus], idx[br.to_bus]
            y = 1.0 / br.reactance
            bmat[i, i] += y
            bmat[j, j] += y
            bmat[i, j] -= y
            bmat[j, i] -= y
        r = idx[ref.bus]
        keep = [i for i in range(len(order)) if i != r]
        theta = np.zeros(len(order))
        try:
            theta[keep] = np.linalg.solve(bmat[np.ix_(keep, keep)], p[keep])
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(f"island {k} (buses {order[0]}..) has a singular susceptance matrix") from exc
        for br in island_branches:
            flows[br.id] = (theta[idx[br.from_bus]] - theta[idx[br.to_bus]]) / br.reactance * BASE_MVA

    return PowerSolution(isl, slack, dispatch, served, demand, flows, island_of_bus)


def cascade(net: GridNetwork, state: ComponentState, trace: CascadeTrace | None = None, step: int = 0):
    """Trip every overloaded branch simultaneously and re-solve until no overloads remain.

    Returns ``(state, solution, trace, iterations)``; inputs are not modified.
    """
    state = state.copy()
    trace = CascadeTrace() if trace is None else trace.copy()
    iterations = 0
    while True:
        iterations += 1
        sol = dc_power_flow(net, state)
        over = [
            bid for bid, f in sol.flows.items()
            if state.branch_available(net, bid) and abs(f) > effective_rating(net, state, bid) + FLOW_TOL_MW
        ]
        if not over:
            break
        for bid in sorted(over):
            state.branches[bid].tripped = True
            trace.record(step, ("branch", bid), Cause.OVERLOAD)
    update_energization(net, state, sol)
    return state, sol, trace, iterations


def update_energization(net: GridNetwork, state: ComponentState, sol: PowerSolution) -> None:
    state.mark_energized(net, sol.energized_buses())


def performance(solution: PowerSolution, loads) -> float:
    """Criticality-weighted served fraction of demand."""
    loads = list(loads)
    if not loads:
        raise ValueError("performance needs at least one load")
    total = sum(ld.weight * ld.demand for ld in loads)
    if total <= 0:
        raise ValueError("total weighted demand is zero")
    return sum(ld.weight * solution.served[ld.id] for ld in loads) / total
