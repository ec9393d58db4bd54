"""Command-line entry point: ``wcons run|validate|distance|barycenter|spectral``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .barycenter import barycenter_empirical_1d, barycenter_gaussian_1d, barycenter_quantile
from .errors import SchemaError, ScenarioSyntaxError, ValidationError, WconsError
from .measures import DEFAULT_CLIP, EmpiricalMeasure, Gaussian1D, GridSpec, to_quantile, wasserstein
from .network import jointly_connected, spectral_report
from .runner import run_scenario
from .scenario import format_number, load_measure, load_scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wcons", description="Wasserstein consensus of measures on the line.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("run", help="run a scenario and write its artifacts")
    p.add_argument("scenario")
    p.add_argument("--out", default=None, help="output directory (overrides scenario and $WCONS_OUT_DIR)")

    p = sub.add_parser("validate", help="parse and validate a scenario")
    p.add_argument("scenario")

    for name, helptext in (("distance", "p-Wasserstein distance between two measures"),
                           ("barycenter", "weighted barycenter of measures")):
        p = sub.add_parser(name, help=helptext)
        if name == "distance":
            p.add_argument("measure_a")
            p.add_argument("measure_b")
        else:
            p.add_argument("measures", nargs="+")
            p.add_argument("--weights", type=float, nargs="+", default=None,
                           help="barycentric weights (default: uniform)")
        p.add_argument("--p", type=float, default=2.0, dest="order", help="Wasserstein order (>= 2)")
        p.add_argument("--grid", type=int, default=4096, help="quantile grid size")
        p.add_argument("--clip", type=float, default=DEFAULT_CLIP, help="quantile grid clipping")

    p = sub.add_parser("spectral", help="spectrum of a scenario's weight matrix at t = 0")
    p.add_argument("scenario")
    p.add_argument("--window", type=int, default=None, help="joint-connectivity window")
    return parser


def _print_measure(m, out):
    fmt = format_number
    if isinstance(m, Gaussian1D):
        print("kind gaussian", file=out)
        print(f"mean {fmt(m.mean)}", file=out)
        print(f"variance {fmt(m.variance)}", file=out)
    elif isinstance(m, EmpiricalMeasure):
        print("kind empirical", file=out)
        for x, w in zip(m.atoms, m.weights):
            print(f"{fmt(x)} {fmt(w)}", file=out)
    else:
        print(f"kind quantile size {m.grid.size} clip {fmt(m.grid.clip)}", file=out)
        for u, v in zip(m.grid.points, m.values):
            print(f"{fmt(u)} {fmt(v)}", file=out)


def _cmd_run(args, out):
    s = load_scenario(args.scenario)
    arts = run_scenario(s, args.out)
    res = arts.result
    print(f"scenario {s.name}", file=out)
    print(f"terminated_by {res.terminated_by}", file=out)
    print(f"steps {res.steps}", file=out)
    print(f"final_diameter {format_number(res.diagnostics[-1].diameter)}", file=out)
    print(f"diagnostics {arts.diagnostics_csv}", file=out)
    print(f"final_measures {arts.final_measures}", file=out)
    print(f"manifest {arts.manifest}", file=out)
    for path in arts.plots:
        print(f"plot {path}", file=out)


def _cmd_validate(args, out):
    s = load_scenario(args.scenario)
    print(f"ok {s.name} agents {s.n} topology {s.schedule.kind} hash {s.hash()}", file=out)


def _cmd_distance(args, out):
    grid = GridSpec(args.grid, args.clip)
    a, b = load_measure(args.measure_a, grid), load_measure(args.measure_b, grid)
    print(format_number(wasserstein(a, b, args.order, grid)), file=out)


def _cmd_barycenter(args, out):
    grid = GridSpec(args.grid, args.clip)
    ms = [load_measure(source, grid) for source in args.measures]
    w = args.weights if args.weights is not None else [1.0 / len(ms)] * len(ms)
    if args.order == 2.0 and all(isinstance(m, Gaussian1D) for m in ms):
        result = barycenter_gaussian_1d(ms, w)
    elif args.order == 2.0 and all(isinstance(m, EmpiricalMeasure) for m in ms):
        result = barycenter_empirical_1d(ms, w, grid)
    else:
        result = barycenter_quantile([to_quantile(m, grid) for m in ms], w, args.order)
    _print_measure(result, out)


def _cmd_spectral(args, out):
    s = load_scenario(args.scenario)
    w = s.config.weights.matrix(s.schedule.snapshot(0), 0)
    rep = spectral_report(w)
    print("moduli " + " ".join(format_number(float(x)) for x in rep.moduli), file=out)
    print(f"second_largest {format_number(rep.second_largest)}", file=out)
    print(f"spectral_gap {format_number(rep.spectral_gap)}", file=out)
    print(f"doubly_stochastic {str(rep.is_doubly_stochastic).lower()}", file=out)
    sched = s.schedule
    window = args.window or (len(sched.snapshots) if sched.kind == "periodic" else 1 if sched.is_static else 10)
    horizon = max(window, s.config.max_steps)
    ok = jointly_connected(sched, window, horizon)
    print(f"jointly_connected {str(ok).lower()} window {window} horizon {horizon} (verified on horizon only)",
          file=out)


COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "distance": _cmd_distance,
    "barycenter": _cmd_barycenter,
    "spectral": _cmd_spectral,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args, out)
    except (ValidationError, SchemaError, ScenarioSyntaxError) as exc:
        print(f"invalid: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INVALID
    except (WconsError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
