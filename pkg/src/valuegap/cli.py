"""Command-line entry point.

    valuegap experiment NAME [--dims 5,10] [--n 1000] [--reps 100] [--seed 0] [--out FILE]
    valuegap estimate DATASET.csv --estimator lstd-linear --gamma 0.9
    valuegap verify {equivalences,asymptotics,oracles,all}

Exit codes: 0 success, 1 invalid input, 2 runtime or verification failure.
"""
import argparse
import logging
import os
import sys
from pathlib import Path


from . import harness
from .estimators import ESTIMATORS, QUADRATIC, SEPARABLE, TABULAR_V
from .exceptions import ValueGapError
from .io import DatasetFormatError, read_dataset
from .verify import SUITES, run_suite

EXIT_OK, EXIT_INPUT, EXIT_FAILURE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on bad input."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _gamma(text):
    try:
        g = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < g < 1.0:
        raise argparse.ArgumentTypeError(f"gamma must lie strictly inside (0, 1), got {g}")
    return g


def build_parser():
    parser = _Parser(prog="valuegap", description="Model-free vs model-based policy evaluation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    exp = sub.add_parser("experiment", help="run a Monte-Carlo experiment and write its CSV")
    exp.add_argument("name", choices=harness.EXPERIMENTS)
    exp.add_argument("--dims", type=_int_list, help="comma-separated dimensions (default: per experiment)")
    exp.add_argument("--n", type=int, default=1000, help="transitions per replication (default 1000)")
    exp.add_argument("--reps", type=int, help="replications per dimension (default 80, or 100 for fig3-ratio)")
    exp.add_argument("--gamma", type=_gamma, default=0.9, help="discount factor (default 0.9)")
    exp.add_argument("--sigma", type=float, default=1.0, help="noise scale for linear systems (default 1)")
    exp.add_argument("--lam", type=float, default=0.9, help="diagonal dynamics value for fig3-ratio (default 0.9)")
    exp.add_argument("--N", type=int, default=5, help="states per component for fig2 (default 5)")
    exp.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    exp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     help="worker threads for replications (default: available CPUs)")
    exp.add_argument("--out", type=Path, help="output CSV (default ./out/NAME.csv)")

    est = sub.add_parser("estimate", help="fit an estimator to a transition CSV")
    est.add_argument("dataset", type=Path)
    est.add_argument("--estimator", required=True, choices=sorted(ESTIMATORS))
    est.add_argument("--gamma", type=_gamma, required=True)

    ver = sub.add_parser("verify", help="run the executable verification suites")
    ver.add_argument("suite", choices=SUITES + ("all",))
    ver.add_argument("--seed", type=int, default=0)
    return parser


def cmd_experiment(args):
    try:
        cfg = harness.ExperimentConfig(
            args.name, dims=args.dims, n=args.n, reps=args.reps, gamma=args.gamma, sigma=args.sigma,
            lam=args.lam, N=args.N, base_seed=args.seed, threads=args.threads)
    except ValueError as exc:
        print(f"valuegap experiment: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = args.out or Path("out") / f"{args.name}.csv"

    def progress(row):
        print(f"{args.name} d={row.d} done: {row.successes} ok, {row.failures} failed", file=sys.stderr)

    harness.run_and_write(cfg, out, progress)
    return EXIT_OK


def _print_estimate(e):
    w = sys.stdout.write
    w(f"estimator,{e.estimator}\n")
    w(f"n,{e.n}\n")
    w(f"kind,{e.kind}\n")
    if e.kind == QUADRATIC:
        for i, row in enumerate(e.params.P):
            w(f"P[{i}]," + ",".join(repr(float(v)) for v in row) + "\n")
    elif e.kind == SEPARABLE:
        for i, t in enumerate(e.params.tables):
            w(f"V[{i}]," + ",".join(repr(float(v)) for v in t) + "\n")
    elif e.kind == TABULAR_V:
        w("V," + ",".join(repr(float(v)) for v in e.params) + "\n")
    else:
        w("beta," + ",".join(repr(float(v)) for v in e.params) + "\n")
    for key in ("unvisited",):
        if e.extras.get(key):
            w(f"{key},{len(e.extras[key])}\n")


def cmd_estimate(args):
    try:
        data = read_dataset(args.dataset)
    except DatasetFormatError as exc:
        print(f"valuegap estimate: {args.dataset}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"valuegap estimate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"valuegap estimate: {args.dataset}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        estimate = ESTIMATORS[args.estimator](data, args.gamma)
    except ValueGapError as exc:
        print(f"valuegap estimate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"valuegap estimate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _print_estimate(estimate)
    return EXIT_OK


def cmd_verify(args):
    results = run_suite(args.suite, seed=args.seed, report=lambda r: print(r.line(), flush=True))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"experiment": cmd_experiment, "estimate": cmd_estimate, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure exit code
        print(f"valuegap {args.command}: runtime failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
