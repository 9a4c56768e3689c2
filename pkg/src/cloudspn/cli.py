"""Command-line front end.

    cloudspn analyze --model baseline
    cloudspn analyze --model all --format csv
    cloudspn reliability --model all --horizon 3000 --step 50 --out curves.csv
    cloudspn simulate --model baseline --horizon 100000 --reps 200 --seed 42
    cloudspn export --model baseline --what modelfile --out baseline.spn

``--model`` takes a bundled name (onoff, baseline, host-red, vm-red,
combined), ``all`` for the four architectures, or a model-file path.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

from . import zoo
from .metric import MetricSyntaxError, UnknownPlaceError
from .modelfile import ModelFileError, load_model_file, serialize_model
from .net import Net
from .numerics import SolverError, analyze, reliability_curve
from .simulator import SimOptions, SimulationError, simulate_availability, simulate_reliability
from .statespace import StateSpaceError, explore, to_dot


class CliError(Exception):
    pass


@dataclass
class Resolved:
    label: str
    net: Net
    metrics: dict
    params: dict
    bindings: dict

    def metric(self, name: str | None) -> str:
        if name is None:
            if not self.metrics:
                raise CliError(f"model {self.label} defines no metrics; pass --metric")
            return next(iter(self.metrics.values()))
        if name in self.metrics:
            return self.metrics[name]
        if "{" in name or "#" in name:
            return name
        raise CliError(f"unknown metric {name!r} for model {self.label}; "
                       f"available: {', '.join(self.metrics)}")


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise CliError(f"--set expects name=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise CliError(f"--set {key}: {value!r} is not a number") from None
    return out


def resolve_model(ref: str, overrides: dict | None = None,
                  deterministic_activation: bool = False) -> Resolved:
    if ref in zoo.MODEL_NAMES:
        try:
            net, metric = zoo.build_model(ref, overrides, deterministic_activation)
            params = zoo.model_params(ref, overrides)
        except (KeyError, ValueError) as exc:
            raise CliError(str(exc).strip("'\"")) from None
        return Resolved(ref, net, {"availability": metric}, params, zoo.parameter_bindings(net))
    if os.path.isfile(ref):
        try:
            mf = load_model_file(ref, overrides)
        except (OSError, ModelFileError) as exc:
            raise CliError(f"{ref}: {exc}") from None
        if deterministic_activation:
            raise CliError("--deterministic-activation only applies to bundled models")
        return Resolved(mf.net.name or ref, mf.net, mf.metrics or {}, mf.params, mf.bindings)
    raise CliError(f"unknown model {ref!r}: not a bundled model "
                   f"({', '.join(zoo.MODEL_NAMES)}) or an existing file")


def _models(args) -> list[Resolved]:
    overrides = _overrides(args.set)
    det = getattr(args, "deterministic_activation", False)
    refs = list(zoo.REDUNDANCY_MODELS) if args.model == "all" else [args.model]
    return [resolve_model(r, overrides, det) for r in refs]


def _fmt_nines(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.2f}"


def cmd_analyze(args, out) -> None:
    rows = []
    for m in _models(args):
        metric = m.metric(args.metric)
        rows.append((m.label, analyze(m.net, metric)))
    if args.format == "csv":
        out.write("model,availability,availability_percent,nines,downtime_hours_per_year\n")
        for label, r in rows:
            out.write(f"{label},{r.availability:.12g},{r.percent:.12g},{r.nines:.12g},"
                      f"{r.downtime_hours_per_year:.12g}\n")
    elif args.format == "kv":
        for label, r in rows:
            prefix = f"{label}." if len(rows) > 1 else ""
            out.write(f"{prefix}model={label}\n")
            out.write(f"{prefix}availability={r.availability:.12g}\n")
            out.write(f"{prefix}nines={r.nines:.12g}\n")
            out.write(f"{prefix}downtime_hours_per_year={r.downtime_hours_per_year:.12g}\n")
    else:
        width = max(len("Model"), *(len(label) for label, _ in rows))
        out.write(f"{'Model':<{width}}  {'Availability (%)':>16}  {'9s':>6}  {'Downtime (h)':>12}\n")
        out.write("-" * (width + 42) + "\n")
        for label, r in rows:
            out.write(f"{label:<{width}}  {r.percent:>16.4f}  {_fmt_nines(r.nines):>6}  "
                      f"{r.downtime_hours_per_year:>12.2f}\n")


def cmd_reliability(args, out) -> None:
    if not args.horizon > 0:
        raise CliError("--horizon must be positive")
    if not 0 < args.step <= args.horizon:
        raise CliError("--step must satisfy 0 < step <= horizon")
    curves = []
    for m in _models(args):
        net = zoo.non_repairable(m.net) if args.no_repair else m.net
        curves.append(reliability_curve(net, m.metric(args.metric), args.horizon, args.step,
                                        absorbing=not args.no_repair, label=m.label))
    if len(curves) == 1:
        text = curves[0].to_csv()
    else:
        lines = ["t_hours," + ",".join(c.label for c in curves)]
        for i, t in enumerate(curves[0].times):
            lines.append(f"{t:.12g}," + ",".join(f"{c.values[i]:.12g}" for c in curves))
        text = "\n".join(lines) + "\n"
    _emit(text, args.out, out)


def cmd_simulate(args, out) -> None:
    try:
        opts = SimOptions(args.horizon, args.reps, args.seed, args.warmup)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    for m in _models(args):
        metric = m.metric(args.metric)
        if args.reliability_at is not None:
            est = simulate_reliability(m.net, metric, args.reliability_at, opts)
            what = f"reliability at t={args.reliability_at:g} h"
        else:
            est = simulate_availability(m.net, metric, opts)
            what = "availability"
        lo, hi = est.interval
        out.write(f"model: {m.label}\n")
        out.write(f"{what}: {est.mean:.10f}\n")
        out.write(f"95% CI: [{lo:.10f}, {hi:.10f}] (half-width {est.ci95_halfwidth:.3e})\n")
        out.write(f"replications: {est.replications}\n")


def cmd_export(args, out) -> None:
    if args.model == "all":
        raise CliError("export needs a single model")
    m = _models(args)[0]
    if args.what == "dot":
        text = to_dot(explore(m.net))
    else:
        text = serialize_model(m.net, m.metrics, m.params, m.bindings)
    _emit(text, args.out, out)


def _emit(text: str, path: str | None, out) -> None:
    if path in (None, "-"):
        out.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cloudspn", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, det=False):
        p.add_argument("--model", required=True,
                       help="bundled model name, 'all', or path to a model file")
        p.add_argument("--metric", default=None,
                       help="metric name from the model, or a P{...} expression")
        p.add_argument("--set", action="append", metavar="NAME=VALUE",
                       help="override a parameter (repeatable)")
        if det:
            p.add_argument("--deterministic-activation", action="store_true",
                           help="fixed activation delays (simulation only)")

    p = sub.add_parser("analyze", help="steady-state availability, nines and downtime")
    common(p)
    p.add_argument("--format", choices=("table", "csv", "kv"), default="table")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reliability", help="reliability curve as CSV")
    common(p)
    p.add_argument("--horizon", type=float, default=3000.0)
    p.add_argument("--step", type=float, default=50.0)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--no-repair", action="store_true",
                   help="drop repair transitions and report P{metric at t} instead of first passage")
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("simulate", help="Monte Carlo estimate with 95%% confidence interval")
    common(p, det=True)
    p.add_argument("--horizon", type=float, default=1e5)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--warmup", type=float, default=0.0)
    p.add_argument("--reliability-at", type=float, default=None, metavar="T",
                   help="estimate reliability at T hours instead of availability")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", help="write the reachability graph (DOT) or the model file")
    common(p)
    p.add_argument("--what", choices=("dot", "modelfile"), required=True)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, out)
    except (CliError, SolverError, StateSpaceError, SimulationError, MetricSyntaxError,
            UnknownPlaceError, ModelFileError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
