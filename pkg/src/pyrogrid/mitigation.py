"""Planning actions (hardening, vegetation management, DER siting) and operational policies."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .landscape import RedFlagThresholds, WeatherSample, red_flag
from .network import DER_MARGINAL_COST, ConfigurationError, Generator, GridNetwork, Hardening, Level, islands
from .state import ComponentState

VEGETATION_MANAGED_FACTOR = 0.5


@dataclass(frozen=True)
class MitigationPlan:
    harden_branches: frozenset[int] = frozenset()
    harden_poles: frozenset[int] = frozenset()
    vegetation_managed: frozenset[int] = frozenset()
    # (bus, p_max MW)
    der_additions: tuple[tuple[int, float], ...] = ()
    budget: int | None = None

    @property
    def action_count(self) -> int:
        return len(self.harden_branches) + len(self.harden_poles) + len(self.vegetation_managed) + len(self.der_additions)

    @classmethod
    def from_dict(cls, d: dict) -> "MitigationPlan":
        return cls(
            frozenset(d.get("harden_branches", ())),
            frozenset(d.get("harden_poles", ())),
            frozenset(d.get("vegetation_managed", ())),
            tuple((int(a["bus"]), float(a["p_max"])) for a in d.get("der_additions", ())),
            d.get("budget"),
        )


def apply_plan(net: GridNetwork, plan: MitigationPlan) -> GridNetwork:
    """Return a modified copy of ``net``; the input is untouched."""
    branch_ids = {b.id for b in net.branches}
    pole_ids = {p.id for p in net.poles}
    unknown = (plan.harden_branches | plan.vegetation_managed) - branch_ids
    if unknown:
        raise ConfigurationError(f"plan references unknown branches {sorted(unknown)}")
    if plan.harden_poles - pole_ids:
        raise ConfigurationError(f"plan references unknown poles {sorted(plan.harden_poles - pole_ids)}")
    if plan.budget is not None and plan.action_count > plan.budget:
        raise ConfigurationError(f"plan has {plan.action_count} actions, budget is {plan.budget}")
    if plan.action_count == 0:
        return net

    branches = tuple(
        replace(
            b,
            hardening_level=Hardening.HARDENED if b.id in plan.harden_branches else b.hardening_level,
            vegetation_factor=VEGETATION_MANAGED_FACTOR if b.id in plan.vegetation_managed else b.vegetation_factor,
        )
        for b in net.branches
    )
    poles = tuple(
        replace(p, hardening_level=Hardening.HARDENED) if p.id in plan.harden_poles else p for p in net.poles
    )
    generators = list(net.generators)
    next_id = max(g.id for g in generators) + 1
    for bus, p_max in plan.der_additions:
        if net.bus(bus).level != Level.DX:
            raise ConfigurationError(f"DER must attach to a Dx bus, got {bus}")
        generators.append(Generator(next_id, bus, p_max, 0.0, "der", DER_MARGINAL_COST))
        next_id += 1
    return replace(net, branches=branches, poles=poles, generators=tuple(generators))


@dataclass(frozen=True)
class PspsPolicy:
    enabled: bool = False
    thresholds: RedFlagThresholds = RedFlagThresholds()
    zone: frozenset[int] = frozenset()


@dataclass(frozen=True)
class AutoShutoffPolicy:
    enabled: bool = False
    trigger_distance_m: float = 0.0
    trigger_wind_ms: float = math.inf
    # None means every overhead branch
    branches: frozenset[int] | None = None


@dataclass(frozen=True)
class OperationalPolicy:
    psps: PspsPolicy = PspsPolicy()
    auto_shutoff: AutoShutoffPolicy = AutoShutoffPolicy()
    islanding: frozenset[int] = frozenset()

    @classmethod
    def from_dict(cls, d: dict, net: GridNetwork | None = None) -> "OperationalPolicy":
        p = d.get("psps", {})
        zone = _zone(p.get("zone", ()), net)
        psps = PspsPolicy(
            bool(p.get("enabled", bool(zone))),
            RedFlagThresholds(float(p.get("wind_speed_min", 15.0)), float(p.get("humidity_max", 20.0))),
            frozenset(zone),
        )
        a = d.get("auto_shutoff", {})
        auto = AutoShutoffPolicy(
            bool(a.get("enabled", False)),
            float(a.get("trigger_distance_m", 0.0)),
            float(a.get("trigger_wind_ms", math.inf)),
            frozenset(_zone(a["branches"], net)) if a.get("branches") is not None else None,
        )
        policy = cls(psps, auto, frozenset(d.get("islanding", ())))
        if net is not None:
            validate_policy(policy, net)
        return policy


def _zone(zone, net):
    """Branch ids, or the shorthand ``"all_dx_overhead"`` expanded against ``net``."""
    if isinstance(zone, str):
        if zone != "all_dx_overhead":
            raise ConfigurationError(f"unknown zone shorthand {zone!r}")
        if net is None:
            raise ConfigurationError("zone shorthand needs a network")
        return [b.id for b in net.branches if net.branch_class(b) == "dx_line" and b.kind.value == "line_overhead"]
    return list(zone)


def validate_policy(policy: OperationalPolicy, net: GridNetwork) -> None:
    ids = {b.id for b in net.branches}
    zone = policy.psps.zone | (policy.auto_shutoff.branches or frozenset())
    if zone - ids:
        raise ConfigurationError(f"policy references unknown branches {sorted(zone - ids)}")
    if policy.islanding - set(net.feeder_ids()):
        raise ConfigurationError(f"islanding references unknown feeders {sorted(policy.islanding - set(net.feeder_ids()))}")
    for v in (policy.psps.thresholds.wind_speed_min, policy.psps.thresholds.humidity_max):
        if not math.isfinite(v):
            raise ConfigurationError("PSPS thresholds must be finite")


def psps_decision(policy: OperationalPolicy, weather: WeatherSample) -> set[int]:
    if not policy.psps.enabled or not red_flag(weather, policy.psps.thresholds):
        return set()
    return set(policy.psps.zone)


def auto_shutoff(policy: OperationalPolicy, exposures: dict, weather: WeatherSample, net: GridNetwork | None = None) -> set[int]:
    """Branches whose local trigger fires: fire exposure, front within range, or high wind.

    Pole records trip the branches they support when ``net`` is given.
    """
    ap = policy.auto_shutoff
    if not ap.enabled:
        return set()
    out = set()
    for (kind, ident), rec in exposures.items():
        fired = rec.max_intensity > 0 or rec.distance_to_front <= ap.trigger_distance_m
        if not fired:
            continue
        if kind == "branch":
            out.add(ident)
        elif net is not None:
            out.update(net.pole(ident).supported_branches)
    if weather.wind_speed >= ap.trigger_wind_ms:
        if ap.branches is not None:
            out |= ap.branches
        elif net is not None:
            out |= {b.id for b in net.branches if b.kind.value == "line_overhead"}
    if ap.branches is not None:
        out &= ap.branches
    return out


def form_islands(net: GridNetwork, state: ComponentState, policy: OperationalPolicy) -> ComponentState:
    """Commit DERs only where they can legitimately run.

    DERs connected to bulk supply always run.  A bulk-disconnected island runs on
    its DERs only when every feeder in it is permitted to island and DER capacity
    covers its critical demand; otherwise its DERs are tripped off.
    """
    state = state.copy()
    isl = islands(net, state)
    island_of = {b: k for k, members in enumerate(isl) for b in members}
    has_bulk = {island_of[g.bus] for g in net.generators if g.kind == "bulk" and state.committed.get(g.id, True)}
    for k, members in enumerate(isl):
        ders = [g for g in net.generators if g.kind == "der" and island_of[g.bus] == k]
        if not ders:
            continue
        if k in has_bulk:
            ok = True
        else:
            feeders = {net.bus(b).feeder for b in members}
            critical = sum(ld.demand for ld in net.loads if ld.bus in members and ld.criticality == "critical")
            ok = None not in feeders and feeders <= policy.islanding and sum(g.p_max for g in ders) >= critical
        for g in ders:
            state.committed[g.id] = ok
    return state


def load_plan(path) -> MitigationPlan:
    with open(path) as fh:
        return MitigationPlan.from_dict(json.load(fh))


def load_policy(path, net: GridNetwork | None = None) -> OperationalPolicy:
    with open(path) as fh:
        return OperationalPolicy.from_dict(json.load(fh), net)
