"""Command line: ``synclust gen | cluster | bench | sweep``.

Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 internal
invariant breach.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import bench, generated, paired_mismatches, sweep_interval, write_report
from .datagen import FAMILIES, DatasetSpec, family_spec, generate
from .engine import SyncParams, run, write_trace
from .errors import (GenerationError, IndexCorruptionError, InvalidInputError,
                     NumericOverflowError, ParseError)
from .extract import extract_clusters, write_result
from .geometry import load_csv, standardize, write_csv

EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or v != v or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return v


def _list_of(kind):
    def parse(text):
        return [kind(t) for t in text.split(",") if t.strip()]
    return parse


def _range(text):
    try:
        lo, hi = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI: {text!r}") from None
    return lo, hi


def _add_spec_flags(p, single: bool):
    p.add_argument("--family", choices=sorted(FAMILIES), help="DS1..DS8 preset for nc/cs/noise")
    p.add_argument("--nc", type=_positive_int, help="number of clusters")
    p.add_argument("--cs", type=_positive_float, help="cluster semidiameter")
    p.add_argument("--noise", action="store_true", default=None, help="add uniform noise points")
    p.add_argument("--noise-fraction", type=float, default=0.05)
    p.add_argument("--range", type=_range, default=(0.0, 600.0), metavar="LO,HI")
    p.add_argument("--seed", type=int, default=0)
    if single:
        p.add_argument("--n", type=_positive_int, required=True)
        p.add_argument("--d", type=_positive_int, default=None)


def _spec_for(args, n: int, d: int | None) -> DatasetSpec:
    extra = dict(noise_fraction=args.noise_fraction, range=tuple(args.range), seed=args.seed)
    if args.nc is not None:
        extra["nc"] = args.nc
    if args.cs is not None:
        extra["cs"] = args.cs
    if args.noise:
        extra["with_noise"] = True
    if args.family:
        spec = family_spec(args.family, n=n, d=d, **extra)
    else:
        if args.nc is None or args.cs is None:
            raise UsageError("--nc and --cs are required without --family")
        spec = DatasetSpec(n=n, d=d or 2, with_noise=bool(args.noise), **extra)
    spec.validate()
    return spec


def _standardize_flag(p):
    p.add_argument("--standardize", type=_positive_float, nargs="?", const=600.0, default=None,
                   metavar="MAX", help="rescale every dimension to [0, MAX] (600 if bare)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="synclust", description="Synchronization clustering (SynC / FSynC).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    _add_spec_flags(g, single=True)
    g.add_argument("--with-labels", action="store_true", help="append a ground-truth column")
    g.add_argument("--out", default="-")

    c = sub.add_parser("cluster", help="cluster a CSV dataset")
    c.add_argument("input")
    c.add_argument("--algo", choices=("sync", "fsync"), default="fsync")
    c.add_argument("--delta", type=_positive_float, required=True)
    c.add_argument("--interval", type=_list_of(_positive_float),
                   help="grid cell edge, one value or one per dimension")
    c.add_argument("--method", choices=("coordinates-locating", "simple"), default="coordinates-locating")
    c.add_argument("--max-steps", type=_positive_int, default=50)
    c.add_argument("--tol", type=float, default=1e-3)
    c.add_argument("--epsilon", type=_positive_float, default=None, help="default delta/100")
    _standardize_flag(c)
    c.add_argument("--out", help="per-point result CSV")
    c.add_argument("--trace", help="per-step metrics CSV")

    b = sub.add_parser("bench", help="time sync vs fsync over a parameter matrix")
    b.add_argument("--input", help="benchmark this CSV instead of generated data")
    b.add_argument("--n", type=_list_of(_positive_int), default=[1000])
    b.add_argument("--d", type=_list_of(_positive_int), default=[2])
    b.add_argument("--delta", type=_list_of(_positive_float), default=[18.0])
    b.add_argument("--interval", type=_list_of(_positive_float), default=[20.0])
    b.add_argument("--repeats", type=_positive_int, default=3)
    b.add_argument("--max-steps", type=_positive_int, default=50)
    b.add_argument("--epsilon", type=_positive_float, default=None)
    _add_spec_flags(b, single=False)
    _standardize_flag(b)
    b.add_argument("--out", default="-")

    s = sub.add_parser("sweep", help="time fsync across grid intervals")
    s.add_argument("input")
    s.add_argument("--delta", type=_positive_float, required=True)
    s.add_argument("--interval", type=_list_of(_positive_float), required=True)
    s.add_argument("--repeats", type=_positive_int, default=3)
    s.add_argument("--max-steps", type=_positive_int, default=50)
    s.add_argument("--epsilon", type=_positive_float, default=None)
    s.add_argument("--baseline", action="store_true", help="also time sync once")
    _standardize_flag(s)
    s.add_argument("--out", default="-")
    return parser


def _load(path, target):
    ds = load_csv(path)
    return standardize(ds, target) if target is not None else ds


def cmd_gen(args):
    ds = generate(_spec_for(args, args.n, args.d))
    write_csv(ds, args.out, with_truth=args.with_labels)


def cmd_cluster(args):
    if args.algo == "fsync" and not args.interval:
        raise UsageError("--interval is required with --algo fsync")
    if args.tol < 0:
        raise UsageError("--tol must be nonnegative")
    ds = _load(args.input, args.standardize)
    params = SyncParams(delta=args.delta, max_steps=args.max_steps, ave_len_tol=args.tol,
                        algorithm=args.algo, neighbor_method=args.method,
                        interval=args.interval if args.algo == "fsync" else None)
    outcome = run(ds, params)
    eps = args.epsilon if args.epsilon is not None else args.delta / 100
    result = extract_clusters(outcome.positions, eps)
    if args.out:
        write_result(result, ds.labels, args.out)
    if args.trace:
        write_trace(outcome.state.trace, args.trace)
    final = outcome.final
    print(f"clusters={result.cluster_count} isolates={result.isolate_count} "
          f"steps={outcome.steps} wall_time={outcome.timing['total']:.3f}s "
          f"ave_len={final.ave_len:.6g} r_c={final.r_c:.6g}")
    if outcome.grid_cells:
        print(f"grid N={outcome.grid_cells[0]} m={outcome.grid_cells[1]}")


def _emit_report(rows, out):
    write_report(rows, out)
    mismatched = paired_mismatches(rows)
    if mismatched:
        raise IndexCorruptionError(f"{len(mismatched)} sync/fsync pairs disagree on results")


def cmd_bench(args):
    if args.input:
        ds = _load(args.input, args.standardize)
        datasets = [(Path(args.input).stem, ds)]
    else:
        for n in args.n:
            for d in args.d:
                _spec_for(args, n, d)
        datasets = generated(args.n, args.d, lambda n, d: _spec_for(args, n, d))
        if args.standardize is not None:
            datasets = ((name, standardize(ds, args.standardize)) for name, ds in datasets)
    rows = bench(datasets, args.delta, args.interval, args.repeats, args.max_steps, args.epsilon)
    _emit_report(rows, args.out)


def cmd_sweep(args):
    ds = _load(args.input, args.standardize)
    rows = sweep_interval(ds, Path(args.input).stem, args.delta, args.interval, args.repeats,
                          args.max_steps, baseline=args.baseline, epsilon=args.epsilon)
    _emit_report(rows, args.out)


COMMANDS = {"gen": cmd_gen, "cluster": cmd_cluster, "bench": cmd_bench, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (UsageError, InvalidInputError, GenerationError) as exc:
        print(f"synclust: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"synclust: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (IndexCorruptionError, NumericOverflowError) as exc:
        print(f"synclust: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
