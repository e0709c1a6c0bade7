"""Error metrics and checks of a run's residual trace."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import CompletionResult, IterationTrace, Termination, iteration_bound
from .errors import InvalidArgumentError
from .observation import ObservedMatrix

# absolute slack allowed on a residual increase between iterations
MONOTONE_SLACK = 1e-9


def observed_residual(x: ObservedMatrix, m) -> float:
    """Sum of squared differences over the observed entries."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != x.shape:
        raise InvalidArgumentError(f"estimate shape {m.shape} does not match data {x.shape}")
    d = m[x.mask] - x.values[x.mask]
    return float(d @ d)


def full_error(truth, m) -> float:
    truth = np.asarray(truth, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m.shape != truth.shape:
        raise InvalidArgumentError(f"estimate shape {m.shape} does not match truth {truth.shape}")
    return float(np.sum((truth - m) ** 2))


def nmae(predicted, holdout: ObservedMatrix, x_min: float, x_max: float, clip: bool = False) -> float:
    """Mean absolute error over the held-out entries, divided by the value range.

    ``holdout.mask`` selects the scored cells and ``holdout.values`` holds
    their true values. ``x_min``/``x_max`` should come from the training
    entries. Predictions are clipped into ``[x_min, x_max]`` only when
    ``clip`` is set.
    """
    if not x_max > x_min:
        raise InvalidArgumentError(f"x_max ({x_max}) must exceed x_min ({x_min})")
    predicted = np.asarray(predicted, dtype=np.float64)
    if predicted.shape != holdout.shape:
        raise InvalidArgumentError(
            f"prediction shape {predicted.shape} does not match holdout {holdout.shape}"
        )
    count = holdout.n_observed
    if count == 0:
        raise InvalidArgumentError("holdout set is empty")
    p = predicted[holdout.mask]
    if clip:
        p = np.clip(p, x_min, x_max)
    return float(np.abs(p - holdout.values[holdout.mask]).sum() / ((x_max - x_min) * count))


@dataclass(frozen=True)
class Violation:
    iteration: int
    quantity: str
    detail: str

    def __str__(self):
        return f"iteration {self.iteration}: {self.quantity}: {self.detail}"


def verify_trace(trace: IterationTrace, tol: float, bound: Optional[int] = None) -> list:
    """List violations of the convergence guarantees in ``trace``.

    Checks that residuals never increase (beyond a 1e-9 slack), that every
    non-final step decreases by more than ``tol``, and, for converged runs,
    that the iteration count is below ``bound`` (default: the bound
    computed from ``residuals[0]``).
    """
    res = list(trace.residuals)
    if not res:
        raise InvalidArgumentError("empty trace")
    out = []
    for k in range(1, len(res)):
        if res[k] > res[k - 1] + MONOTONE_SLACK:
            out.append(
                Violation(k, "monotonicity", f"residual rose from {res[k - 1]!r} to {res[k]!r}")
            )
    for k in range(1, len(res) - 1):
        if not res[k - 1] - res[k] > tol:
            out.append(
                Violation(
                    k, "progress", f"decrease {res[k - 1] - res[k]!r} <= tol {tol!r} before the last step"
                )
            )
    if trace.termination == Termination.CONVERGED:
        if bound is None:
            bound = iteration_bound(res[0], tol)
        if not trace.iterations < bound:
            out.append(
                Violation(
                    trace.iterations, "iteration bound", f"{trace.iterations} iterations, bound {bound}"
                )
            )
    return out


@dataclass
class MetricReport:
    observed_sq_residual: float
    iterations: int
    wall_time: float
    bound: int
    termination: str
    full_sq_error: Optional[float] = None
    full_sq_error_std: Optional[float] = None
    nmae: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> MetricReport:
        return cls(**d)


def metric_report(
    x_train: ObservedMatrix,
    result: CompletionResult,
    tol: float,
    truth=None,
    holdout: Optional[ObservedMatrix] = None,
    value_range: Optional[tuple] = None,
    clip: bool = False,
) -> MetricReport:
    """Collect the standard metrics of a finished run.

    ``truth`` (dense, original units) adds the full-matrix squared error, in
    original and in standardized units. ``holdout`` adds NMAE, with the
    value range taken from the training entries unless ``value_range`` is
    given.
    """
    report = MetricReport(
        observed_sq_residual=observed_residual(x_train, result.matrix),
        iterations=result.trace.iterations,
        wall_time=result.wall_time,
        bound=iteration_bound(result.trace.residuals[0], tol),
        termination=result.trace.termination.value,
    )
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64)
        report.full_sq_error = full_error(truth, result.matrix)
        scales = np.where(result.stats.scales > 0, result.stats.scales, 1.0)
        report.full_sq_error_std = full_error((truth - result.stats.means) / scales, result.matrix_std)
    if holdout is not None:
        if value_range is None:
            obs = x_train.observed()
            value_range = (float(obs.min()), float(obs.max()))
        report.nmae = nmae(result.matrix, holdout, value_range[0], value_range[1], clip=clip)
    return report
