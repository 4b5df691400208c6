"""Repair scheduling, phased re-energization and resilience-curve metrics."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .network import GridNetwork, energized_buses
from .state import ComponentId, ComponentState

# hours per repair, by component class
REPAIR_HOURS = {"pole": 8.0, "dx_line": 12.0, "tx_line": 48.0, "transformer": 72.0}


@dataclass(frozen=True)
class RepairCandidate:
    component: ComponentId
    duration: float
    benefit: float = 0.0  # weighted MW re-energized by this repair alone


@dataclass(frozen=True)
class RepairTask:
    component: ComponentId
    duration: float
    crew: int
    start: float
    finish: float
    benefit: float = 0.0


def repair_class(net: GridNetwork, cid: ComponentId) -> str:
    kind, ident = cid
    return "pole" if kind == "pole" else net.branch_class(net.branch(ident))


def _weighted_energized(net, state):
    live = energized_buses(net, state)
    return sum(ld.weight * ld.demand for ld in net.loads if ld.bus in live)


def repair_candidates(net: GridNetwork, state: ComponentState, damaged, durations=REPAIR_HOURS) -> list[RepairCandidate]:
    """Duration and stand-alone benefit for each damaged component."""
    base = _weighted_energized(net, state)
    out = []
    for cid in damaged:
        trial = state.copy()
        trial.repair(cid)
        gain = _weighted_energized(net, trial) - base
        out.append(RepairCandidate(cid, durations[repair_class(net, cid)], max(gain, 0.0)))
    return out


def schedule_repairs(candidates, crews: int, start: float = 0.0, crew_free=None) -> list[RepairTask]:
    """Greedy list scheduling by benefit per repair hour (ties by component id).

    ``crew_free`` optionally carries each crew's earliest availability from a
    previous batch.
    """
    if crews < 1:
        raise ValueError("need at least one crew")
    order = sorted(candidates, key=lambda c: (-c.benefit / c.duration, c.component))
    free = list(crew_free) if crew_free is not None else [start] * crews
    heap = [(max(t, start), i) for i, t in enumerate(free)]
    heapq.heapify(heap)
    tasks = []
    for c in order:
        t, crew = heapq.heappop(heap)
        tasks.append(RepairTask(c.component, c.duration, crew, t, t + c.duration, c.benefit))
        heapq.heappush(heap, (t + c.duration, crew))
    return tasks


def re_energize(net: GridNetwork, state: ComponentState, completed, t: float | None = None) -> ComponentState:
    """Return repaired components to service; buses energize only with a live path to a source."""
    state = state.copy()
    for task in completed:
        cid = task.component if isinstance(task, RepairTask) else task
        state.repair(cid)
    state.mark_energized(net, energized_buses(net, state))
    return state


# ---------------------------------------------------------------------------
# resilience curve


@dataclass
class ResilienceCurve:
    times: np.ndarray  # hours, step starts
    performance: np.ndarray
    horizon: float
    phases: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)


def _durations(times, horizon):
    return np.diff(np.append(times, horizon))


def build_curve(samples, horizon: float, weighted_demand_mw: float | None = None, eps: float = 1e-9,
                baseline: float | None = None) -> ResilienceCurve:
    """Assemble a step-function resilience curve and its metrics.

    ``samples`` are ``(t_hours, performance)`` pairs; each value holds until the
    next sample (the last until ``horizon``).  ``baseline`` is the pre-event
    performance; it defaults to the first sample.
    """
    samples = sorted(samples)
    if not samples:
        raise ValueError("resilience curve needs at least one sample")
    times = np.array([s[0] for s in samples], dtype=float)
    perf = np.array([s[1] for s in samples], dtype=float)
    if times[0] > 0 or times[-1] > horizon:
        raise ValueError("samples must start at t=0 and stay within the horizon")
    dur = _durations(times, horizon)
    p0 = float(perf[0]) if baseline is None else float(baseline)
    pmin = float(perf.min())

    impact = degraded = restoration = recovered = None
    below = np.flatnonzero(perf < p0 - eps)
    if below.size:
        impact = float(times[below[0]])
        i_min = int(np.flatnonzero(perf <= pmin + eps)[0])
        degraded = float(times[i_min])
        after = np.flatnonzero((np.arange(perf.size) > i_min) & (perf > pmin + eps))
        if after.size:
            restoration = float(times[after[0]])
            rec = np.flatnonzero((np.arange(perf.size) >= after[0]) & (perf >= p0 - eps))
            if rec.size:
                recovered = float(times[rec[0]])

    loss_area = float(np.sum(np.clip(p0 - perf, 0.0, None) * dur))
    if impact is None:
        rapidity = None
    elif recovered is None:
        rapidity = 0.0
    else:
        # recovery duration runs from the first minimum to the recovery crossing
        rapidity = (p0 - pmin) / (recovered - degraded)

    metrics = {
        "robustness": pmin,
        "rapidity": rapidity,
        "performance_loss_area": loss_area,
        "time_to_recovery": None if recovered is None or impact is None else recovered - impact,
    }
    if weighted_demand_mw is not None:
        metrics["total_weighted_energy_not_served"] = float(np.sum((1.0 - perf) * dur) * weighted_demand_mw)
    phases = {"impact": impact, "degraded": degraded, "restoration": restoration, "recovered": recovered}
    return ResilienceCurve(times, perf, horizon, phases, metrics)


def community_metrics(times, served: dict[int, np.ndarray], loads, horizon: float, eps: float = 1e-9) -> dict:
    """Outage-hour proxies from per-load served MW series on the curve's time grid."""
    dur = _durations(np.asarray(times, dtype=float), horizon)
    critical_hours = {}
    customer_hours = 0.0
    wens = 0.0
    for ld in loads:
        s = np.asarray(served[ld.id], dtype=float)
        short = np.clip(ld.demand - s, 0.0, None)
        wens += ld.weight * float(np.sum(short * dur))
        if ld.demand > 0:
            customer_hours += ld.customers * float(np.sum(short / ld.demand * dur))
        if ld.criticality == "critical":
            critical_hours[str(ld.id)] = float(np.sum(dur[short > eps * max(ld.demand, 1.0)]))
    return {
        "critical_outage_hours": critical_hours,
        "customer_interruption_hours": customer_hours,
        "total_weighted_energy_not_served": wens,
    }
