"""Command-line interface: ``complete``, ``holdout`` and ``bench``.

Exit codes: 0 success, 2 bad arguments, 3 unreadable or malformed data,
4 numerical divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .api import complete
from .baselines import SvtConfig
from .bench import BenchmarkScenario, CellReport, RunReport, bench_run, normalize_algorithm
from .core import ALGORITHMS, CompletionConfig
from .diagnostics import metric_report
from .errors import DivergenceError, InvalidArgumentError, ParseError
from .fileio import fingerprint, load_csv, load_movielens, load_pgm, pgm_maxval, save_csv, save_pgm
from .observation import ObservedMatrix, holdout_mask

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

FORMATS = ("csv", "pgm", "movielens")
_CLI_ALGORITHMS = tuple(a.replace("_", "-") for a in ALGORITHMS)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not (v >= 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _fraction(text):
    v = float(text)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {text}")
    return v


def _algorithm(text):
    if text.replace("_", "-") not in _CLI_ALGORITHMS:
        raise argparse.ArgumentTypeError(
            f"invalid choice {text!r} (choose from {', '.join(_CLI_ALGORITHMS)})"
        )
    return normalize_algorithm(text)


def _add_run_flags(p, require_frac: bool):
    p.add_argument("--input", required=True, help="data file")
    p.add_argument("--format", choices=FORMATS, help="input format (default: from the file name)")
    p.add_argument("--mask", help="sidecar mask for PGM input; nonzero cells are missing")
    p.add_argument("--algorithm", type=_algorithm, default="srpca", help=f"one of {', '.join(_CLI_ALGORITHMS)}")
    p.add_argument("--rank", type=_positive_int, help="completion rank (required except for svt)")
    p.add_argument("--tol", type=_positive_float, default=1e-4)
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.0, help="fast-srpca exit threshold")
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--missing-frac",
        type=_fraction,
        required=require_frac,
        help="fraction of the observed entries to hide before completing",
    )
    p.add_argument("--no-standardize", action="store_true", help="skip per-column standardization")
    p.add_argument("--tau", type=_positive_float, help="svt threshold (default: half the top singular value)")
    p.add_argument("--svt-step", type=_nonneg_float, help="svt step size (default 1.2)")
    p.add_argument("--svt-mode", choices=("hard", "soft"), default="hard")
    p.add_argument("--truth", help="dense ground truth (csv or pgm) for the full-matrix error")
    p.add_argument("--output", help="write the completed matrix here (.csv or .pgm)")
    p.add_argument("--report", help="JSON report path (default: standard output)")
    p.add_argument("--quiet", action="store_true", help="no progress lines")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srpca", description="Low-rank matrix completion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_run_flags(sub.add_parser("complete", help="complete one dataset"), require_frac=False)
    _add_run_flags(
        sub.add_parser("holdout", help="hide observed entries, complete, and score them"),
        require_frac=True,
    )
    b = sub.add_parser("bench", help="run a benchmark scenario file")
    b.add_argument("scenario", help="scenario JSON file")
    b.add_argument("--report", help="JSON report path (default: standard output)")
    b.add_argument("--workers", type=_positive_int, default=1)
    b.add_argument("--quiet", action="store_true")
    return parser


def _infer_format(path: str, flag) -> str:
    if flag:
        return flag
    name = Path(path).name.lower()
    if name.endswith(".csv"):
        return "csv"
    if name.endswith((".pgm", ".pnm")):
        return "pgm"
    if name.endswith(".data"):
        return "movielens"
    raise _UsageError(f"--input {path}: cannot tell the format from the name; pass --format")


def _load(path, fmt, mask_path=None) -> ObservedMatrix:
    if mask_path is not None and fmt != "pgm":
        raise _UsageError("--mask applies to pgm input only")
    if fmt == "csv":
        return load_csv(path)
    if fmt == "pgm":
        return load_pgm(path, mask_path)
    return load_movielens(path)


def _load_truth(path, shape) -> np.ndarray:
    fmt = _infer_format(path, None)
    truth = load_csv(path) if fmt == "csv" else load_pgm(path)
    if not truth.mask.all():
        raise ParseError("ground truth has missing entries", path)
    if truth.shape != shape:
        raise ParseError(f"ground truth shape {truth.shape} does not match data {shape}", path)
    return truth.values


def _write_output(path, matrix, input_path, fmt):
    if path.lower().endswith(".pgm"):
        maxval = pgm_maxval(input_path) if fmt == "pgm" else 255
        save_pgm(matrix, path, maxval=maxval)
    else:
        save_csv(matrix, path)


def _emit_report(report: RunReport, path):
    text = report.to_json()
    if path:
        Path(path).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _progress(quiet):
    if quiet:
        return None

    def show(k, res):
        print(f"iteration {k} residual {res:.6e}", file=sys.stderr)

    return show


def _cmd_run(args) -> int:
    if args.rank is None and args.algorithm != "svt":
        raise _UsageError(f"--rank is required for --algorithm {args.algorithm.replace('_', '-')}")
    fmt = _infer_format(args.input, args.format)
    data = _load(args.input, fmt, args.mask)
    truth = _load_truth(args.truth, data.shape) if args.truth else None

    train, holdout = data, None
    if args.missing_frac is not None:
        train_mask = holdout_mask(data.mask, args.missing_frac, args.seed)
        held = data.mask & ~train_mask
        train = data.with_mask(train_mask)
        if args.command == "holdout":
            if not held.any():
                raise _UsageError(f"--missing-frac {args.missing_frac} hides no entries")
            holdout = ObservedMatrix(data.values, held)

    cfg = CompletionConfig(
        rank=args.rank or 1,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=args.seed,
        lam=args.lam,
        standardize=not args.no_standardize,
        algorithm=args.algorithm,
    )
    svt = SvtConfig(
        tau=args.tau, step=args.svt_step, tol=args.tol, max_iter=args.max_iter, mode=args.svt_mode
    )
    result = complete(train, cfg, svt=svt, callback=_progress(args.quiet))
    metrics = metric_report(train, result, cfg.tol, truth=truth, holdout=holdout)

    if args.output:
        _write_output(args.output, result.matrix, args.input, fmt)
    run = {
        "replication": 0,
        "seed": args.seed,
        "metrics": metrics.to_dict(),
        "trace": result.trace.to_dict(),
        "dataset": fingerprint(train),
        "flags": result.flags,
    }
    fraction = args.missing_frac if args.missing_frac is not None else 0.0
    cell = CellReport(args.algorithm, fraction, runs=[run])
    echo = {k: v for k, v in vars(args).items() if k not in ("quiet",)}
    _emit_report(RunReport(scenario=echo, cells=[cell], seeds=[[args.seed]], dataset=fingerprint(data)), args.report)
    if not args.quiet:
        print(
            f"{args.algorithm}: {metrics.iterations} iterations ({metrics.termination}), "
            f"observed residual {metrics.observed_sq_residual:.6e}",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        scenario = BenchmarkScenario.from_json(args.scenario)
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, (InvalidArgumentError, TypeError)):
            raise _UsageError(f"{args.scenario}: {exc}") from None
        raise ParseError(str(exc), args.scenario) from None

    def show(algorithm, fraction, rep):
        print(f"{algorithm} missing={fraction:g} replication {rep} done", file=sys.stderr)

    report = bench_run(scenario, workers=args.workers, progress=None if args.quiet else show)
    _emit_report(report, args.report)
    return EXIT_OK


def main(argv=None) -> int:
    """Run the CLI and return its exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_run(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as exc:
        print(f"srpca: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"srpca: parse error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"srpca: cannot read or write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"srpca: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


cli_run = main


if __name__ == "__main__":
    sys.exit(main())
