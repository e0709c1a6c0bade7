"""Low-rank matrix completion by iterated masked PCA (SRPCA), a fast
variant with an early exit, and SVT/ALS baselines."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .api import complete
from .baselines import AlsConfig, SvtConfig, als_complete, svt_complete, svt_threshold
from .bench import BenchmarkScenario, RunReport, bench_run
from .core import (
    CompletionConfig,
    CompletionResult,
    IterationTrace,
    Termination,
    convergence_check,
    iteration_bound,
    solve_column_loadings,
    srpca_complete,
    srpca_iterate,
)
from .diagnostics import MetricReport, full_error, metric_report, nmae, observed_residual, verify_trace
from .errors import DivergenceError, DuplicateEntryWarning, InvalidArgumentError, ParseError
from .fast import alpha_select, blend_observed, fast_srpca_complete
from .fileio import load_csv, load_movielens, load_pgm, save_csv, save_pgm
from .observation import (
    ColumnStats,
    ObservedMatrix,
    destandardize,
    holdout_mask,
    random_mask,
    standardize,
)
from .spectral import FactorPair, init_estimate, top_r_eig

__all__ = [
    "AlsConfig",
    "BACKEND",
    "BenchmarkScenario",
    "ColumnStats",
    "CompletionConfig",
    "CompletionResult",
    "DivergenceError",
    "DuplicateEntryWarning",
    "FactorPair",
    "InvalidArgumentError",
    "IterationTrace",
    "MetricReport",
    "ObservedMatrix",
    "ParseError",
    "RunReport",
    "SvtConfig",
    "Termination",
    "alpha_select",
    "als_complete",
    "bench_run",
    "blend_observed",
    "complete",
    "convergence_check",
    "destandardize",
    "fast_srpca_complete",
    "full_error",
    "holdout_mask",
    "init_estimate",
    "iteration_bound",
    "load_csv",
    "load_movielens",
    "load_pgm",
    "metric_report",
    "nmae",
    "observed_residual",
    "random_mask",
    "save_csv",
    "save_pgm",
    "solve_column_loadings",
    "srpca_complete",
    "srpca_iterate",
    "standardize",
    "svt_complete",
    "svt_threshold",
    "top_r_eig",
    "verify_trace",
]
