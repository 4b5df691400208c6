"""``pyrogrid`` command line.

Exit status is 0 on success, 1 when inputs fail validation and 2 when a run
fails part way.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bundled import BUNDLED, write_bundled
from .network import ConfigurationError, TestbedConfig, build_testbed, save_network
from .scenario import load_scenario, prepare, run_ensemble, simulate, write_ensemble, write_outputs

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
# errors raised while reading and validating inputs
_INPUT_ERRORS = (ConfigurationError, OSError, ValueError, KeyError, TypeError)


class _Invalid(Exception):
    pass


def _validated(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except _INPUT_ERRORS as exc:
        raise _Invalid(str(exc)) from exc


def _inputs(args):
    sc = _validated(load_scenario, args.scenario)
    return sc, _validated(prepare, sc, psps_wind=args.psps_wind, psps_rh=args.psps_rh)


def cmd_build_testbed(args) -> int:
    def load():
        with open(args.config) as fh:
            return TestbedConfig.from_dict(json.load(fh))

    net = _validated(build_testbed, _validated(load))
    save_network(net, args.out)
    print(f"wrote {args.out}: {len(net.buses)} buses, {len(net.branches)} branches, {len(net.poles)} poles")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc, inp = _inputs(args)
    seed = sc.seed if args.seed is None else args.seed
    report = simulate(inp, seed)
    write_outputs(report, args.out)
    m = report.metrics
    print(f"seed {seed}: robustness {m['robustness']:.4f}, "
          f"weighted ENS {m['total_weighted_energy_not_served']:.2f} MWh -> {args.out}")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    sc, inp = _inputs(args)
    runs = sc.ensemble_size if args.runs is None else args.runs
    if runs < 1:
        raise _Invalid("--runs must be at least 1")
    seed = sc.seed if args.seed is None else args.seed
    result = run_ensemble(inp, runs=runs, seed=seed, workers=args.workers)
    write_ensemble(result, args.out)
    for s, err in sorted(result.errors.items()):
        print(f"seed {s} failed: {err}", file=sys.stderr)
    print(f"{len(result.reports)}/{runs} runs written to {args.out}")
    return EXIT_RUNTIME if result.errors else EXIT_OK


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def cmd_report(args) -> int:
    src = Path(args.inp)
    if (src / "aggregate.json").exists():
        agg = _validated(lambda: json.loads((src / "aggregate.json").read_text()))
        print(f"ensemble of {agg['runs']} runs")
        print(f"{'metric':40s} {'mean':>10s} {'min':>10s} {'p50':>10s} {'p95':>10s} {'max':>10s}")
        for key, st in agg["metrics"].items():
            if st is None:
                print(f"{key:40s} {'-':>10s}")
                continue
            print(f"{key:40s} " + " ".join(f"{_fmt(st[c]):>10s}" for c in ("mean", "min", "p50", "p95", "max")))
        return EXIT_OK
    metrics = _validated(lambda: json.loads((src / "metrics.json").read_text()))
    rows = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(f"{prefix}.{k}" if prefix else k, obj[k])
        else:
            rows.append((prefix, obj))

    walk("", metrics)
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:{width}s}  {_fmt(v)}")
    return EXIT_OK


def cmd_example(args) -> int:
    names = BUNDLED if args.name == "all" else (args.name,)
    for name in names:
        path = _validated(write_bundled, name, Path(args.out) / name if len(names) > 1 else args.out,
                          feeders=args.feeders)
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pyrogrid", description="Wildfire and power grid co-simulation.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-testbed", help="build the coupled Tx+Dx testbed network")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_testbed)

    def psps_flags(p):
        p.add_argument("--psps-wind", type=float, default=None, help="override PSPS wind threshold (m/s)")
        p.add_argument("--psps-rh", type=float, default=None, help="override PSPS humidity threshold (%%)")

    p = sub.add_parser("simulate", help="run one seed of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    psps_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="run seeds seed..seed+N-1 and aggregate")
    p.add_argument("--scenario", required=True)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    psps_flags(p)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("report", help="print the metrics of a run or ensemble directory")
    p.add_argument("--in", dest="inp", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("example", help="write a bundled scenario and its inputs")
    p.add_argument("name", choices=BUNDLED + ("all",))
    p.add_argument("--out", required=True)
    p.add_argument("--feeders", type=int, default=1)
    p.set_defaults(func=cmd_example)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; bad arguments are validation errors here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except _Invalid as exc:
        print(f"pyrogrid: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"pyrogrid: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
