"""Scenario ingestion, the per-step co-simulation loop, ensembles and output files.

Within a step the order is fixed: mitigation, grid-to-fire, fire spread,
fire-to-grid damage, restoration, then the cascade solve that produces the
step's performance sample.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import fire as firemod
from .exposure import (
    HARDENED_MULTIPLIER, MEASURES, ExposureIndex, WindModel, component_class, compute_exposure,
    fragility_response, load_fragility_curves, load_thermal_params, thermal_response,
    wind_failure_and_ignition,
)
from .fire import FireParams, FireState, Ignition, IgnitionSource
from .landscape import Landscape, RedFlagThresholds, WeatherSeries, load_landscape, load_weather, weather_at
from .mitigation import (
    MitigationPlan, OperationalPolicy, apply_plan, auto_shutoff, form_islands, psps_decision,
)
from .network import (
    ConfigurationError, GridNetwork, Hardening, TestbedConfig, build_testbed, energized_buses, load_network,
)
from .power import CascadeTrace, cascade, dc_power_flow, effective_rating, performance
from .restoration import (
    REPAIR_HOURS, RepairTask, build_curve, community_metrics, re_energize, repair_candidates, schedule_repairs,
)
from .rng import StreamBank
from .state import Cause, ComponentState, Damage

RESPONSE_MODELS = ("none", "binary", "thermal", "fragility")
RESPONSE_CLASSES = ("tx_line", "dx_line", "pole")
SCENARIO_KEYS = {
    "name", "network", "testbed", "landscape", "weather", "horizon", "timestep", "ignitions", "plan", "policy",
    "response_models", "fragility_measure", "seed", "ensemble_size", "crews", "repair_hours",
    "exposure_buffer_m", "fire", "wind", "fragility", "thermal", "fuels",
}


class SimulationError(RuntimeError):
    """A module failed mid-run; the message carries the step and time."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class Scenario:
    landscape: str | Path
    weather: str | Path
    horizon: float  # hours
    network: str | Path | None = None
    testbed: dict | None = None
    timestep: float = 30.0  # minutes
    ignitions: list = field(default_factory=list)
    plan: str | Path | dict | None = None
    policy: str | Path | dict | None = None
    response_models: dict = field(default_factory=lambda: dict.fromkeys(RESPONSE_CLASSES, "fragility"))
    fragility_measure: str = "flame_length"
    seed: int = 0
    ensemble_size: int = 1
    crews: int = 2
    repair_hours: dict = field(default_factory=dict)
    exposure_buffer_m: float | None = None
    fire: dict = field(default_factory=dict)
    wind: dict = field(default_factory=dict)
    fragility: str | Path | None = None
    thermal: str | Path | None = None
    fuels: str | Path | None = None
    name: str = "scenario"
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "Scenario":
        unknown = set(d) - SCENARIO_KEYS
        if unknown:
            raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
        for key in ("landscape", "weather", "horizon"):
            if key not in d:
                raise ConfigurationError(f"scenario is missing {key!r}")
        if (d.get("network") is None) == (d.get("testbed") is None):
            raise ConfigurationError("scenario needs exactly one of 'network' or 'testbed'")
        return cls(base_dir=Path(base_dir), **d)

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return Scenario.from_dict(d, path.parent)


@dataclass
class Inputs:
    """Everything a run needs, validated and shared read-only across seeds."""

    net: GridNetwork
    land: Landscape
    weather: WeatherSeries
    policy: OperationalPolicy
    ignitions: tuple[Ignition, ...]
    horizon: float  # hours
    dt: float  # minutes
    response_models: dict
    curves: dict
    thermal: dict
    index: ExposureIndex
    fire_params: FireParams = FireParams()
    wind_model: WindModel = WindModel()
    fragility_measure: str = "flame_length"
    crews: int = 2
    repair_hours: dict = field(default_factory=lambda: dict(REPAIR_HOURS))
    name: str = "scenario"

    @property
    def steps(self) -> int:
        return int(round(self.horizon * 60.0 / self.dt))


def _json_or_path(sc: Scenario, value):
    if value is None or isinstance(value, dict):
        return value or {}
    p = sc.resolve(value)
    try:
        return json.loads(p.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read {p}: {exc}") from exc


def _exogenous(sc: Scenario, land: Landscape) -> tuple[Ignition, ...]:
    out = []
    for i, ign in enumerate(sc.ignitions):
        t = float(ign.get("t_min", 0.0))
        if not 0 <= t < sc.horizon * 60.0:
            raise ConfigurationError(f"ignition {i}: t_min={t} outside the horizon")
        if "cell" in ign:
            cell = tuple(int(v) for v in ign["cell"])
            if not (0 <= cell[0] < land.nrows and 0 <= cell[1] < land.ncols):
                raise ConfigurationError(f"ignition {i}: cell {cell} outside the landscape")
        else:
            cell = land.cell_of(float(ign["x"]), float(ign["y"]))
            if cell is None:
                raise ConfigurationError(f"ignition {i}: point outside the landscape")
        out.append(Ignition(cell, t, IgnitionSource.EXOGENOUS))
    return tuple(sorted(out, key=lambda g: (g.time, g.cell)))


def prepare(sc: Scenario, psps_wind: float | None = None, psps_rh: float | None = None) -> Inputs:
    """Load and validate every input a scenario references."""
    if sc.horizon <= 0 or sc.timestep <= 0:
        raise ConfigurationError("horizon and timestep must be positive")
    steps = sc.horizon * 60.0 / sc.timestep
    if not math.isclose(steps, round(steps), abs_tol=1e-9):
        raise ConfigurationError(f"timestep {sc.timestep} min does not divide horizon {sc.horizon} h")
    if sc.crews < 1:
        raise ConfigurationError("crews must be at least 1")
    if sc.ensemble_size < 1:
        raise ConfigurationError("ensemble_size must be at least 1")
    if sc.fragility_measure not in MEASURES or sc.fragility_measure == "wind_gust":
        raise ConfigurationError(f"unsupported fire fragility measure {sc.fragility_measure!r}")
    for cls, model in sc.response_models.items():
        if cls not in RESPONSE_CLASSES:
            raise ConfigurationError(f"response model for unknown class {cls!r}")
        if model not in RESPONSE_MODELS:
            raise ConfigurationError(f"unknown response model {model!r} for {cls}")
        if model == "thermal" and cls == "pole":
            raise ConfigurationError("the thermal model applies to conductors only")

    if sc.network is not None:
        net = load_network(sc.resolve(sc.network))
    else:
        net = build_testbed(TestbedConfig.from_dict(sc.testbed))
    net = apply_plan(net, MitigationPlan.from_dict(_json_or_path(sc, sc.plan)))
    policy = OperationalPolicy.from_dict(_json_or_path(sc, sc.policy), net)
    if psps_wind is not None or psps_rh is not None:
        th = policy.psps.thresholds
        th = RedFlagThresholds(th.wind_speed_min if psps_wind is None else float(psps_wind),
                               th.humidity_max if psps_rh is None else float(psps_rh))
        policy = replace(policy, psps=replace(policy.psps, thresholds=th))

    land = load_landscape(sc.resolve(sc.landscape), network=net,
                          fuels_path=sc.resolve(sc.fuels) if sc.fuels else None)
    weather = load_weather(sc.resolve(sc.weather))
    if weather.horizon < sc.horizon * 60.0:
        raise ConfigurationError(f"weather covers {weather.horizon} min, horizon needs {sc.horizon * 60.0}")

    curves = load_fragility_curves(sc.resolve(sc.fragility) if sc.fragility else None)
    thermal = load_thermal_params(sc.resolve(sc.thermal) if sc.thermal else None)
    for cls, model in sc.response_models.items():
        if model == "thermal" and cls not in thermal:
            raise ConfigurationError(f"no thermal parameters for {cls}")
    buffer = 2.0 * land.cell_size if sc.exposure_buffer_m is None else float(sc.exposure_buffer_m)
    try:
        fire_params = FireParams(**sc.fire)
        wind_model = WindModel(**sc.wind)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    return Inputs(
        net=net, land=land, weather=weather, policy=policy, ignitions=_exogenous(sc, land),
        horizon=float(sc.horizon), dt=float(sc.timestep), response_models=dict(sc.response_models),
        curves=curves, thermal=thermal, index=ExposureIndex(net, land, buffer), fire_params=fire_params,
        wind_model=wind_model, fragility_measure=sc.fragility_measure, crews=int(sc.crews),
        repair_hours={**REPAIR_HOURS, **sc.repair_hours}, name=sc.name,
    )


# ---------------------------------------------------------------------------
# the run loop


@dataclass(frozen=True)
class IgnitionRecord:
    step: int
    t_min: float
    cell: tuple[int, int]
    source: IgnitionSource
    component: tuple[str, int] | None
    accepted: bool


@dataclass
class RunReport:
    seed: int
    name: str
    times: np.ndarray  # hours, step starts
    performance: np.ndarray
    curve: object
    metrics: dict
    trace: CascadeTrace
    ignitions: list[IgnitionRecord]
    repairs: list[RepairTask]
    fire_summary: dict
    perimeters: list[tuple[int, float, dict]]
    arrival: np.ndarray
    served: dict[int, np.ndarray]
    islands: dict[int, np.ndarray]
    flows: dict[int, np.ndarray]
    ratings: dict[int, np.ndarray]
    demand: dict[int, float] = field(default_factory=dict)
    load_bus: dict[int, int] = field(default_factory=dict)
    branch_status: dict[int, list[str]] = field(default_factory=dict)


class _Restoration:
    """Crew bookkeeping across repeated scheduling rounds."""

    def __init__(self, crews: int, durations: dict):
        self.crew_free = [0.0] * crews
        self.durations = durations
        self.active: list[RepairTask] = []
        self.log: list[RepairTask] = []

    def schedule(self, net, state, t_h):
        busy = {task.component for task in self.active}
        pending = [cid for cid in state.damaged() if cid not in busy]
        if not pending:
            return
        tasks = schedule_repairs(repair_candidates(net, state, pending, self.durations), len(self.crew_free),
                                 start=t_h, crew_free=self.crew_free)
        for task in tasks:
            self.crew_free[task.crew] = max(self.crew_free[task.crew], task.finish)
        self.active += tasks
        self.log += tasks

    def complete(self, t_h) -> list[RepairTask]:
        done = [task for task in self.active if task.finish <= t_h + 1e-9]
        self.active = [task for task in self.active if task.finish > t_h + 1e-9]
        return done


def _fire_response(inp: Inputs, state, k, cid, rec, w, streams, sol):
    """Damage from this step's exposure record under the class's selected model."""
    net = inp.net
    kind, ident = cid
    if kind == "branch":
        br = net.branch(ident)
        cls = net.branch_class(br)
        hardened = br.hardening_level == Hardening.HARDENED
    else:
        cls = "pole"
        hardened = net.pole(ident).hardening_level == Hardening.HARDENED
    model = inp.response_models.get(cls, "none")
    asset = state.asset(cid)
    if model == "none" or asset.damage == Damage.FAILED:
        return None
    if model == "binary":
        return Damage.FAILED if rec.exposed else None
    if model == "fragility":
        if not rec.exposed:
            return None
        curve = inp.curves[(component_class(net, cid), inp.fragility_measure)]
        u = float(streams.draws("fragility", cid, k, 1)[0])
        mult = HARDENED_MULTIPLIER if hardened else 1.0
        return fragility_response(rec, curve, u, mult)
    # thermal: conductors only, evaluated every step so temperatures stay current
    loading = abs(sol.flows.get(ident, 0.0)) if sol is not None else 0.0
    temp, dmg = thermal_response(br.thermal_rating, rec, w, loading, inp.dt, inp.thermal[cls])
    asset.conductor_temp = temp
    if dmg == Damage.DERATED:
        asset.damage = Damage.DERATED
        asset.rating_factor = inp.thermal[cls].derate_factor
        return None
    if dmg == Damage.INTACT and asset.damage == Damage.DERATED:
        asset.damage = Damage.INTACT
        asset.rating_factor = 1.0
    return dmg if dmg == Damage.FAILED else None


def _branch_status(net, state, bid) -> str:
    a = state.branches[bid]
    if not a.in_service:
        return "failed"
    if any(not state.poles[p].in_service for p in net.branch(bid).spans):
        return "pole_down"
    if a.tripped:
        return "tripped"
    if bid in state.open_branches:
        return "open"
    return "derated" if a.damage == Damage.DERATED else "closed"


def simulate(inp: Inputs, seed: int) -> RunReport:
    """Run one seed of a prepared scenario."""
    net, land = inp.net, inp.land
    dt = inp.dt
    streams = StreamBank(seed)
    spot_rng = streams.generator("spotting")
    state = ComponentState.initial(net)
    fire = FireState.empty(land.shape)
    trace = CascadeTrace()
    ignition_log: list[IgnitionRecord] = []
    crews = _Restoration(inp.crews, inp.repair_hours)
    exposures = compute_exposure(inp.index, fire, dt)
    sol = None
    reclose = False
    fire_was_burning = False
    exo = list(inp.ignitions)

    n = inp.steps
    times = np.arange(n) * dt / 60.0
    perf = np.zeros(n)
    served = {ld.id: np.zeros(n) for ld in net.loads}
    island_ids = {ld.id: np.zeros(n, dtype=int) for ld in net.loads}
    flows = {br.id: np.zeros(n) for br in net.branches}
    ratings = {br.id: np.zeros(n) for br in net.branches}
    status = {br.id: [""] * n for br in net.branches}
    perimeters = []
    last_affected = 0
    max_intensity = 0.0

    for k in range(n):
        t = k * dt
        try:
            w = weather_at(inp.weather, t)

            # mitigation
            opened = psps_decision(inp.policy, w) | auto_shutoff(inp.policy, exposures, w, net)
            for b in sorted(opened - state.open_branches):
                trace.record(k, ("branch", b), Cause.MITIGATION)
            state.open_branches = set(opened)
            state = form_islands(net, state, inp.policy)
            state.mark_energized(net, energized_buses(net, state))

            # grid-to-fire
            failures, grid_igns = wind_failure_and_ignition(
                net, w, land, state, streams, k, inp.curves, inp.wind_model, t)
            for cid in failures:
                state.fail(cid)
                trace.record(k, cid, Cause.WIND_DAMAGE)

            # fire spread
            spots = firemod.spot_ignitions(fire, land, w, spot_rng, inp.fire_params)
            batch = grid_igns + spots
            while exo and exo[0].time < t + dt:
                batch.append(exo.pop(0))
            for ign in batch:
                fire, acc, _ = firemod.apply_ignitions(fire, [ign], max(ign.time, t), land, w)
                ignition_log.append(IgnitionRecord(k, t, ign.cell, ign.source, ign.component, bool(acc)))
            fire = firemod.spread_step(fire, land, w, dt, inp.fire_params)

            # fire-to-grid
            exposures = compute_exposure(inp.index, fire, dt, exposures)
            for cid in inp.index.components:
                if _fire_response(inp, state, k, cid, exposures[cid], w, streams, sol) == Damage.FAILED:
                    state.fail(cid)
                    trace.record(k, cid, Cause.FIRE_DAMAGE)

            # restoration
            t_h = t / 60.0
            done = crews.complete(t_h)
            if done:
                state = re_energize(net, state, done, t_h)
                reclose = True
            if not fire.any_burning():
                if fire_was_burning:
                    reclose = True
                crews.schedule(net, state, t_h)
                if reclose:
                    for a in state.branches.values():
                        a.tripped = False
                    reclose = False
            fire_was_burning = fire.any_burning()

            # power
            state, sol, trace, _ = cascade(net, state, trace, step=k)
            perf[k] = performance(sol, net.loads)
        except (ConfigurationError, ValueError, np.linalg.LinAlgError) as exc:
            raise SimulationError(f"step {k} (t={t:g} min): {exc}") from exc

        for ld in net.loads:
            served[ld.id][k] = sol.served[ld.id]
            island_ids[ld.id][k] = sol.island_of_bus[ld.bus]
        for br in net.branches:
            flows[br.id][k] = sol.flows[br.id]
            ratings[br.id][k] = effective_rating(net, state, br.id)
            status[br.id][k] = _branch_status(net, state, br.id)
        if fire.any_burning():
            max_intensity = max(max_intensity, float(fire.intensity[fire.burning].max()))
        affected = int(fire.affected.sum())
        if affected != last_affected:
            perimeters.append((k, t + dt, firemod.perimeter_geojson(
                fire, land, {"step": k, "t_min": t + dt, "cells": affected})))
            last_affected = affected

    weighted = sum(ld.weight * ld.demand for ld in net.loads)
    baseline = performance(dc_power_flow(net, ComponentState.initial(net)), net.loads)
    curve = build_curve(list(zip(times.tolist(), perf.tolist())), inp.horizon, weighted, baseline=baseline)
    metrics = dict(curve.metrics)
    metrics.update(community_metrics(times, served, net.loads, inp.horizon))
    burned = int(fire.affected.sum())
    fire_summary = {
        "burned_cells": burned,
        "burned_area_ha": burned * land.cell_size**2 / 1e4,
        "max_intensity_kw_m": max_intensity,
        "burning_at_horizon": int(fire.burning.sum()),
    }
    counts = {s.value: 0 for s in IgnitionSource}
    for rec in ignition_log:
        if rec.accepted:
            counts[rec.source.value] += 1
    metrics.update({
        "phases": curve.phases,
        "ignitions": counts,
        "grid_induced_attempts": sum(r.source == IgnitionSource.GRID_INDUCED for r in ignition_log),
        "trace_events": len(trace),
        "repairs": len(crews.log),
        "fire": fire_summary,
        "seed": seed,
    })
    return RunReport(seed, inp.name, times, perf, curve, metrics, trace, ignition_log, crews.log, fire_summary,
                     perimeters, fire.arrival.copy(), served, island_ids, flows, ratings,
                     {ld.id: ld.demand for ld in net.loads}, {ld.id: ld.bus for ld in net.loads}, status)


def run_scenario(sc: Scenario | Inputs, seed: int | None = None) -> RunReport:
    inp = sc if isinstance(sc, Inputs) else prepare(sc)
    if seed is None:
        seed = sc.seed if isinstance(sc, Scenario) else 0
    return simulate(inp, seed)


# ---------------------------------------------------------------------------
# ensembles

SUMMARY_METRICS = (
    "robustness", "rapidity", "performance_loss_area", "time_to_recovery", "total_weighted_energy_not_served",
    "customer_interruption_hours", "trace_events", "repairs", "grid_induced_attempts",
)


@dataclass
class EnsembleResult:
    reports: list[RunReport]
    aggregate: dict
    errors: dict[int, str] = field(default_factory=dict)


def _scalar_metrics(report: RunReport) -> dict:
    m = report.metrics
    out = {key: m.get(key) for key in SUMMARY_METRICS}
    for src, v in m["ignitions"].items():
        out[f"ignitions_{src}"] = v
    out["burned_area_ha"] = m["fire"]["burned_area_ha"]
    out["max_intensity_kw_m"] = m["fire"]["max_intensity_kw_m"]
    return out


def aggregate(reports: list[RunReport]) -> dict:
    """Mean, min, max and quantiles of each scalar metric across runs (None values skipped)."""
    rows = [_scalar_metrics(r) for r in sorted(reports, key=lambda r: r.seed)]
    out = {"runs": len(rows), "seeds": [r.seed for r in sorted(reports, key=lambda r: r.seed)], "metrics": {}}
    for key in rows[0] if rows else ():
        vals = np.array([r[key] for r in rows if r[key] is not None], dtype=float)
        if vals.size == 0:
            out["metrics"][key] = None
            continue
        out["metrics"][key] = {
            "n": int(vals.size), "mean": float(vals.mean()), "min": float(vals.min()), "max": float(vals.max()),
            "p05": float(np.quantile(vals, 0.05)), "p50": float(np.quantile(vals, 0.5)),
            "p95": float(np.quantile(vals, 0.95)),
        }
    return out


def _run_one(args):
    inp, seed = args
    try:
        return seed, simulate(inp, seed), None
    except Exception as exc:  # reported per seed
        return seed, None, f"{type(exc).__name__}: {exc}"


def run_ensemble(sc: Scenario | Inputs, runs: int | None = None, seed: int | None = None,
                 workers: int = 1) -> EnsembleResult:
    """Seeds ``seed .. seed+runs-1``; results are ordered by seed whatever the fan-out."""
    inp = sc if isinstance(sc, Inputs) else prepare(sc)
    if runs is None:
        runs = sc.ensemble_size if isinstance(sc, Scenario) else 1
    if seed is None:
        seed = sc.seed if isinstance(sc, Scenario) else 0
    if runs < 1:
        raise ConfigurationError("ensemble needs at least one run")
    jobs = [(inp, s) for s in range(seed, seed + runs)]
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    reports = [r for _, r, _ in results if r is not None]
    errors = {s: e for s, _, e in results if e is not None}
    agg = aggregate(reports) if reports else {"runs": 0, "metrics": {}}
    if errors:
        agg["errors"] = {str(s): e for s, e in errors.items()}
    return EnsembleResult(reports, agg, errors)


# ---------------------------------------------------------------------------
# output files


def _num(v) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v + 0.0, ".10g")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else v + 0.0
    return obj


def _csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _cid(cid) -> str:
    return f"{cid[0]}:{cid[1]}"


def _served_rows(report: RunReport):
    by_bus: dict[int, list[int]] = {}
    for lid, bus in sorted(report.load_bus.items()):
        by_bus.setdefault(bus, []).append(lid)
    for k, t in enumerate(report.times):
        for bus, lids in sorted(by_bus.items()):
            served = sum(report.served[lid][k] for lid in lids)
            shed = sum(report.demand[lid] for lid in lids) - served
            yield _num(t), int(report.islands[lids[0]][k]), bus, _num(served), _num(shed)


def write_outputs(report: RunReport, out_dir) -> list[Path]:
    """Write the run's files under ``out_dir``; returns the paths written."""
    out = Path(out_dir)
    try:
        (out / "perimeters").mkdir(parents=True, exist_ok=True)
        for old in (out / "perimeters").glob("*.geojson"):
            old.unlink()
        written = []

        def emit(name, header, rows):
            _csv(out / name, header, rows)
            written.append(out / name)

        emit("curve.csv", ("t_hours", "performance"),
             ((_num(t), _num(p)) for t, p in zip(report.times, report.performance)))
        (out / "metrics.json").write_text(json.dumps(_clean(report.metrics), indent=2, sort_keys=True) + "\n")
        written.append(out / "metrics.json")
        emit("repairs.csv", ("component", "crew", "start", "finish"),
             ((_cid(r.component), r.crew, _num(r.start), _num(r.finish))
              for r in sorted(report.repairs, key=lambda r: (r.start, r.crew, r.component))))
        emit("cascade.csv", ("step", "t_min", "component", "cause"),
             ((e.step, _num(report.times[e.step] * 60.0), _cid(e.component), e.cause.value) for e in report.trace))
        emit("ignitions.csv", ("step", "t_min", "row", "col", "source", "component", "accepted"),
             ((r.step, _num(r.t_min), r.cell[0], r.cell[1], r.source.value,
               _cid(r.component) if r.component else "", int(r.accepted)) for r in report.ignitions))
        emit("served.csv", ("t_hours", "island", "bus", "served_mw", "shed_mw"), _served_rows(report))
        emit("flows.csv", ("t_hours", "branch", "flow_mw", "rating_mw", "status"),
             ((_num(t), bid, _num(report.flows[bid][k]), _num(report.ratings[bid][k]), report.branch_status[bid][k])
              for k, t in enumerate(report.times) for bid in sorted(report.flows)))
        arrival = np.where(np.isfinite(report.arrival), report.arrival, -1.0)
        with open(out / "arrival.csv", "w") as fh:
            np.savetxt(fh, arrival, fmt="%.4f", delimiter=",")
        written.append(out / "arrival.csv")
        for step, _, gj in report.perimeters:
            p = out / "perimeters" / f"step_{step:04d}.geojson"
            p.write_text(json.dumps(gj, sort_keys=True) + "\n")
            written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out}: {exc}") from exc
    return written


def write_ensemble(result: EnsembleResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rep in result.reports:
        write_outputs(rep, out / f"seed_{rep.seed}")
    (out / "aggregate.json").write_text(json.dumps(_clean(result.aggregate), indent=2, sort_keys=True) + "\n")
