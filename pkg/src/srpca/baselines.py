"""Baseline completers: singular value thresholding and alternating least squares."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse.linalg

from .core import (
    STATUS_UNOBSERVED,
    CompletionResult,
    IterationTrace,
    Termination,
    _ObservedIndex,
    _solve_all,
)
from .errors import DivergenceError, InvalidArgumentError
from .observation import ColumnStats, ObservedMatrix, require_observed
from .spectral import FactorPair

DIVERGENCE_FACTOR = 1e6
DEFAULT_TAU_FRACTION = 0.5
DEFAULT_STEP = 1.2


@dataclass(frozen=True)
class SvtConfig:
    """SVT settings.

    ``tau=None`` uses half the largest singular value of the zero-filled
    data and ``step=None`` the constant 1.2. ``step`` may also be a
    sequence, one value per iteration (the last value repeats). ``mode`` is ``"hard"`` (drop
    singular values below tau, keep the rest unchanged) or ``"soft"``
    (shrink every singular value by tau).
    """

    tau: Optional[float] = None
    step: Union[None, float, Sequence[float]] = None
    tol: float = 1e-4
    max_iter: int = 500
    mode: str = "hard"

    def __post_init__(self):
        if self.tau is not None and not self.tau > 0:
            raise InvalidArgumentError(f"tau must be positive, got {self.tau}")
        if self.step is not None:
            steps = np.atleast_1d(np.asarray(self.step, dtype=np.float64))
            if steps.size == 0 or np.any(steps < 0) or not np.all(np.isfinite(steps)):
                raise InvalidArgumentError(f"step sizes must be finite and nonnegative, got {self.step}")
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.mode not in ("hard", "soft"):
            raise InvalidArgumentError(f"mode must be 'hard' or 'soft', got {self.mode!r}")


@dataclass(frozen=True)
class AlsConfig:
    rank: int
    ridge: float = 0.1
    tol: float = 1e-4
    max_iter: int = 500
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.rank, (int, np.integer)) or self.rank < 1:
            raise InvalidArgumentError(f"rank must be a positive integer, got {self.rank!r}")
        if not self.ridge >= 0:
            raise InvalidArgumentError(f"ridge must be nonnegative, got {self.ridge}")
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be >= 1, got {self.max_iter}")


def svt_threshold(m, tau: float, mode: str = "hard") -> np.ndarray:
    """Reconstruct ``m`` from its singular triplets after thresholding at ``tau``.

    In ``"hard"`` mode singular values below ``tau`` become 0 and the others
    are kept unchanged; in ``"soft"`` mode every value becomes
    ``max(s - tau, 0)``.
    """
    m = np.asarray(m, dtype=np.float64)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if mode == "hard":
        s = np.where(s >= tau, s, 0.0)
    elif mode == "soft":
        s = np.maximum(s - tau, 0.0)
    else:
        raise InvalidArgumentError(f"mode must be 'hard' or 'soft', got {mode!r}")
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vt[keep]


def _step_at(steps: np.ndarray, k: int) -> float:
    return float(steps[min(k - 1, steps.size - 1)])


def svt_complete(x: ObservedMatrix, cfg: SvtConfig = SvtConfig(), callback=None) -> CompletionResult:
    """Complete ``x`` by alternating a spectral threshold with a masked
    gradient correction of the auxiliary iterate.

    The auxiliary iterate starts at the thresholded zero-filled data. The
    run stops when the observed squared residual changes by at most
    ``cfg.tol``.

    Raises
    ------
    DivergenceError
        When the residual exceeds ``1e6`` times its initial value.
    """
    started = time.perf_counter()
    require_observed(x)
    if cfg.tau is not None:
        tau = cfg.tau
    else:
        tau = DEFAULT_TAU_FRACTION * float(np.linalg.norm(x.values, 2))
    if cfg.step is None:
        steps = np.array([DEFAULT_STEP])
    else:
        steps = np.atleast_1d(np.asarray(cfg.step, dtype=np.float64))

    index = _ObservedIndex(x)
    mask = x.mask
    trace = IterationTrace(termination=Termination.MAX_ITER)

    t0 = time.perf_counter()
    aux = svt_threshold(x.values, tau, cfg.mode)
    estimate = aux
    initial = index.residual(aux)
    trace.residuals.append(initial)
    trace.elapsed.append(time.perf_counter() - t0)
    if callback is not None:
        callback(0, initial)

    for k in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        estimate = svt_threshold(aux, tau, cfg.mode)
        res = index.residual(estimate)
        delta = _step_at(steps, k)
        aux = aux.copy()
        aux[mask] += delta * (x.values[mask] - estimate[mask])
        trace.residuals.append(res)
        trace.elapsed.append(time.perf_counter() - t0)
        if callback is not None:
            callback(k, res)
        if not math.isfinite(res) or (initial > 0 and res > DIVERGENCE_FACTOR * initial):
            raise DivergenceError(
                f"SVT diverged at iteration {k} with step size delta_k={delta:g} "
                f"(residual {res:.3e}, initial {initial:.3e}); reduce the step"
            )
        # the first loop estimate re-thresholds the starting point, so the
        # change is measured between loop estimates only; an all-zero
        # estimate with a positive step is still accumulating, not stalled
        stalled = delta == 0 or estimate.any()
        if k >= 2 and stalled and abs(trace.residuals[-2] - res) <= cfg.tol:
            trace.termination = Termination.CONVERGED
            break

    return CompletionResult(
        matrix=estimate,
        matrix_std=estimate,
        factors=None,
        trace=trace,
        stats=ColumnStats.identity(x.n),
        algorithm="svt",
        flags={"tau": tau, "mode": cfg.mode},
        wall_time=time.perf_counter() - started,
    )


def _svd_start(x: ObservedMatrix, rank: int, seed: int):
    scaled = x.values * (x.values.size / x.n_observed)
    if rank < min(x.shape) - 1:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(min(x.shape))
        u, s, vt = scipy.sparse.linalg.svds(scaled, k=rank, v0=v0)
        order = np.argsort(s)[::-1]
        u, s, vt = u[:, order], s[order], vt[order]
    else:
        u, s, vt = np.linalg.svd(scaled, full_matrices=False)
        u, s, vt = u[:, :rank], s[:rank], vt[:rank]
    root = np.sqrt(s)
    return u * root, vt.T * root


def _objective(index, left, right, ridge):
    res = index.residual(left @ right.T)
    return res, res + ridge * (float(np.sum(left**2)) + float(np.sum(right**2)))


def als_complete(x: ObservedMatrix, cfg: AlsConfig, callback=None) -> CompletionResult:
    """Alternating ridge least squares on the observed entries.

    Factors ``X ~ L @ R.T`` start from the truncated SVD of the zero-filled
    data rescaled by the inverse sampling rate. Each half-sweep solves
    every column of ``R.T`` (then every row of ``L``) exactly, so the
    penalized objective never increases. ``trace.objectives`` holds the
    penalized objective after every half-sweep; ``trace.residuals`` the
    observed squared residual after every full sweep.
    """
    started = time.perf_counter()
    require_observed(x)
    rank = min(cfg.rank, min(x.shape))
    by_col = _ObservedIndex(x)
    by_row = _ObservedIndex(ObservedMatrix(x.values.T, x.mask.T))
    trace = IterationTrace(termination=Termination.MAX_ITER)

    t0 = time.perf_counter()
    left, right = _svd_start(x, rank, cfg.seed)
    res, obj = _objective(by_col, left, right, cfg.ridge)
    trace.residuals.append(res)
    trace.objectives.append(obj)
    trace.elapsed.append(time.perf_counter() - t0)
    if callback is not None:
        callback(0, res)

    empty_cols = empty_rows = np.zeros(0, dtype=np.int64)
    for k in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        rt, col_status = _solve_all(left, by_col, cfg.ridge)
        right = rt.T
        trace.objectives.append(_objective(by_col, left, right, cfg.ridge)[1])
        lt, row_status = _solve_all(right, by_row, cfg.ridge)
        left = lt.T
        res, obj = _objective(by_col, left, right, cfg.ridge)
        trace.objectives.append(obj)
        trace.residuals.append(res)
        trace.elapsed.append(time.perf_counter() - t0)
        empty_cols = np.flatnonzero(col_status == STATUS_UNOBSERVED)
        empty_rows = np.flatnonzero(row_status == STATUS_UNOBSERVED)
        if callback is not None:
            callback(k, res)
        if trace.objectives[-3] - obj <= cfg.tol:
            trace.termination = Termination.CONVERGED
            break

    estimate = left @ right.T
    return CompletionResult(
        matrix=estimate,
        matrix_std=estimate,
        factors=FactorPair(left, np.ascontiguousarray(right.T)),
        trace=trace,
        stats=ColumnStats.identity(x.n),
        algorithm="als",
        flags={
            "unobserved_columns": empty_cols.tolist(),
            "unobserved_rows": empty_rows.tolist(),
        },
        wall_time=time.perf_counter() - started,
    )
