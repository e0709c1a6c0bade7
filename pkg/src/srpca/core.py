"""The SRPCA iteration: re-impose observations, project, re-solve loadings."""

from __future__ import annotations

import dataclasses
import enum
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _backend
from .errors import InvalidArgumentError
from .observation import (
    DEFAULT_EPSILON,
    ColumnStats,
    ObservedMatrix,
    destandardize,
    require_observed,
    standardize,
)
from .spectral import FactorPair, init_estimate, project_components, top_r_eig

ALGORITHMS = ("srpca", "fast_srpca", "svt", "als")

# Cholesky pivots below this fraction of the largest diagonal entry are
# treated as singular and re-solved by minimum-norm least squares
REL_PIVOT = 1e-12
# multiplier of trace(P^T P) / r for the default ridge
AUTO_RIDGE_SCALE = 1e-10

STATUS_OK = 0
STATUS_UNOBSERVED = 1
STATUS_SINGULAR = 2


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    FAST_FIXPOINT = "fast_fixpoint"


@dataclass(frozen=True)
class CompletionConfig:
    """Settings shared by the completion algorithms.

    ``ridge=None`` selects ``1e-10 * trace(P^T P) / rank`` at every sweep.
    ``lam`` is the residual-norm threshold of the fast variant; 0 disables
    the fast exit. ``smoother`` is an optional ``f(M, k) -> M`` applied to
    the working estimate at the top of each iteration.
    """

    rank: int
    tol: float = 1e-4
    max_iter: int = 500
    seed: int = 0
    lam: float = 0.0
    standardize: bool = True
    algorithm: str = "srpca"
    ridge: Optional[float] = None
    epsilon: float = DEFAULT_EPSILON
    smoother: Optional[Callable[[np.ndarray, int], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        if not isinstance(self.rank, (int, np.integer)) or self.rank < 1:
            raise InvalidArgumentError(f"rank must be a positive integer, got {self.rank!r}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise InvalidArgumentError(f"tol must be positive and finite, got {self.tol}")
        if not isinstance(self.max_iter, (int, np.integer)) or self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if not self.lam >= 0:
            raise InvalidArgumentError(f"lambda must be nonnegative, got {self.lam}")
        if self.ridge is not None and not (self.ridge >= 0 and math.isfinite(self.ridge)):
            raise InvalidArgumentError(f"ridge must be nonnegative, got {self.ridge}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidArgumentError(
                f"unknown algorithm {self.algorithm!r}; valid: {', '.join(ALGORITHMS)}"
            )
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise InvalidArgumentError(f"epsilon must be nonnegative, got {self.epsilon}")


@dataclass
class IterationTrace:
    """Per-sweep record of a run.

    ``residuals[0]`` is the observed squared residual after the
    initialization sweep (components of the spectral start, freshly solved
    loadings); ``residuals[k]`` is the value after iteration ``k``. The
    iteration count is therefore ``len(residuals) - 1``.
    """

    residuals: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    elapsed: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    termination: Termination = Termination.MAX_ITER

    @property
    def iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)

    def to_dict(self) -> dict:
        return {
            "residuals": [float(v) for v in self.residuals],
            "alphas": [int(a) for a in self.alphas],
            "elapsed": [float(t) for t in self.elapsed],
            "objectives": [float(v) for v in self.objectives],
            "termination": self.termination.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> IterationTrace:
        return cls(
            residuals=list(d["residuals"]),
            alphas=list(d.get("alphas", [])),
            elapsed=list(d.get("elapsed", [])),
            objectives=list(d.get("objectives", [])),
            termination=Termination(d["termination"]),
        )


@dataclass(eq=False)
class CompletionResult:
    matrix: np.ndarray
    matrix_std: np.ndarray
    factors: Optional[FactorPair]
    trace: IterationTrace
    stats: ColumnStats
    algorithm: str = "srpca"
    flags: dict = field(default_factory=dict)
    wall_time: float = 0.0


class _ObservedIndex:
    """Column-compressed view of the observed entries, built once per run."""

    def __init__(self, x: ObservedMatrix):
        self.shape = x.shape
        cols, rows = np.nonzero(x.mask.T)
        self.indptr = np.zeros(x.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=x.n), out=self.indptr[1:])
        self.indices = np.ascontiguousarray(rows, dtype=np.int64)
        self.data = np.ascontiguousarray(x.values[rows, cols])
        self.flat = np.flatnonzero(x.mask)
        self.x_flat = x.values.ravel()[self.flat]

    def residual(self, m: np.ndarray) -> float:
        d = m.ravel()[self.flat] - self.x_flat
        return float(d @ d)


def _auto_ridge(p: np.ndarray) -> float:
    return AUTO_RIDGE_SCALE * float(np.einsum("ij,ij->", p, p)) / p.shape[1]


def _min_norm_column(p_obs, x_obs, ridge):
    r = p_obs.shape[1]
    if ridge > 0:
        p_obs = np.vstack([p_obs, math.sqrt(ridge) * np.eye(r)])
        x_obs = np.concatenate([x_obs, np.zeros(r)])
    u, *_ = np.linalg.lstsq(p_obs, x_obs, rcond=None)
    return u


def _solve_all(p: np.ndarray, index: _ObservedIndex, ridge: float):
    p = np.ascontiguousarray(p, dtype=np.float64)
    u, status = _backend.solve_loadings_csc(
        p, index.indptr, index.indices, index.data, float(ridge), REL_PIVOT
    )
    for j in np.flatnonzero(status == STATUS_SINGULAR):
        sl = slice(index.indptr[j], index.indptr[j + 1])
        u[:, j] = _min_norm_column(p[index.indices[sl]], index.data[sl], ridge)
    return u, status


def solve_column_loadings(p, x_col, col_mask, ridge: float = 0.0, full_output: bool = False):
    """Masked (ridge) least squares for one column of loadings.

    Minimizes ``sum_{i observed} (x_i - (P u)_i)**2 + ridge * |u|**2``
    using the observed rows only.

    Parameters
    ----------
    p : array_like, shape (m, r)
    x_col : array_like, shape (m,)
    col_mask : array_like of bool, shape (m,)
    ridge : float
    full_output : bool
        Also return a status string: ``"ok"``, ``"unobserved"`` (no
        observations, zero loadings) or ``"singular"`` (normal matrix not
        positive definite, minimum-norm solution).
    """
    p = np.asarray(p, dtype=np.float64)
    x_col = np.asarray(x_col, dtype=np.float64)
    col_mask = np.asarray(col_mask, dtype=bool)
    if p.ndim != 2 or x_col.shape != (p.shape[0],) or col_mask.shape != (p.shape[0],):
        raise InvalidArgumentError(
            f"incompatible shapes P{p.shape}, x{x_col.shape}, mask{col_mask.shape}"
        )
    if not ridge >= 0:
        raise InvalidArgumentError(f"ridge must be nonnegative, got {ridge}")
    x = ObservedMatrix(x_col[:, None], col_mask[:, None])
    u, status = _solve_all(p, _ObservedIndex(x), ridge)
    u = u[:, 0]
    if full_output:
        return u, ("ok", "unobserved", "singular")[int(status[0])]
    return u


def convergence_check(residual_prev: float, residual_curr: float, tol: float) -> bool:
    """True when the progress ``prev - curr`` is at most ``tol``; an increase
    also stops."""
    return residual_prev - residual_curr <= tol


def iteration_bound(residual_initial: float, tol: float) -> int:
    """Upper bound ``ceil(residual_initial / tol) + 1`` on the iteration at
    which a converging run stops."""
    if residual_initial < 0 or not tol > 0:
        raise InvalidArgumentError("need residual_initial >= 0 and tol > 0")
    return math.ceil(residual_initial / tol) + 1


def _ridge_for(p: np.ndarray, cfg: CompletionConfig) -> float:
    return _auto_ridge(p) if cfg.ridge is None else cfg.ridge


def _sweep(index, m_work, u_prev, cfg):
    """Project, re-solve and rebuild on an estimate whose observed cells are
    already set. Returns (P, U_next, M_next, residual, status)."""
    p = project_components(m_work, u_prev)
    u_next, status = _solve_all(p, index, _ridge_for(p, cfg))
    m_next = p @ u_next
    return p, u_next, m_next, index.residual(m_next), status


def srpca_iterate(x_std: ObservedMatrix, m_prev, u_prev, cfg: CompletionConfig):
    """One SRPCA iteration.

    Overwrites the observed cells of ``m_prev`` (on a copy) with ``x_std``,
    projects onto the loadings, re-solves every column, and rebuilds the
    estimate.

    Returns
    -------
    m_next : ndarray, shape (m, n)
    u_next : ndarray, shape (r, n)
    residual : float
        Observed squared residual of ``m_next``.
    """
    m_prev = np.asarray(m_prev, dtype=np.float64)
    u_prev = np.asarray(u_prev, dtype=np.float64)
    if m_prev.shape != x_std.shape or u_prev.ndim != 2 or u_prev.shape[1] != x_std.n:
        raise InvalidArgumentError(
            f"estimate {m_prev.shape} / loadings {u_prev.shape} do not match data {x_std.shape}"
        )
    m_work = m_prev.copy()
    m_work[x_std.mask] = x_std.values[x_std.mask]
    _, u_next, m_next, res, _ = _sweep(_ObservedIndex(x_std), m_work, u_prev, cfg)
    return m_next, u_next, res


@dataclass
class _RunState:
    """Working data shared by the SRPCA and fast-SRPCA drivers."""

    x_std: ObservedMatrix
    stats: ColumnStats
    index: _ObservedIndex
    cfg: CompletionConfig
    flags: dict
    m: np.ndarray = None
    p: np.ndarray = None
    u: np.ndarray = None
    trace: IterationTrace = field(default_factory=IterationTrace)

    def note(self, status):
        self.flags.setdefault("unobserved_columns", set()).update(
            np.flatnonzero(status == STATUS_UNOBSERVED).tolist()
        )
        self.flags.setdefault("singular_columns", set()).update(
            np.flatnonzero(status == STATUS_SINGULAR).tolist()
        )


def _prepare(x: ObservedMatrix, cfg: CompletionConfig) -> _RunState:
    require_observed(x)
    flags = {}
    rank = cfg.rank
    if rank > min(x.shape):
        warnings.warn(
            f"rank {rank} exceeds min(m, n) = {min(x.shape)}; clamped", RuntimeWarning, stacklevel=3
        )
        flags["rank_clamped"] = True
        cfg = dataclasses.replace(cfg, rank=min(x.shape))
    if cfg.standardize:
        x_std, stats = standardize(x, cfg.epsilon)
    else:
        x_std, stats = x, ColumnStats.identity(x.n)
    return _RunState(x_std, stats, _ObservedIndex(x_std), cfg, flags)


def _initialize(state: _RunState, callback=None):
    """Spectral start and the initialization sweep producing residuals[0]."""
    t0 = time.perf_counter()
    m0 = init_estimate(state.x_std, state.cfg.seed)
    u0, _ = top_r_eig(m0, state.cfg.rank)
    p, u, m, res, status = _sweep(state.index, m0, u0, state.cfg)
    state.note(status)
    state.p, state.u, state.m = p, u, m
    state.trace.residuals.append(res)
    state.trace.elapsed.append(time.perf_counter() - t0)
    if callback is not None:
        callback(0, res)


def _finish(state: _RunState, algorithm: str, started: float) -> CompletionResult:
    flags = {
        k: (sorted(v) if isinstance(v, set) else v) for k, v in state.flags.items()
    }
    matrix = destandardize(state.m, state.stats) if state.cfg.standardize else state.m.copy()
    return CompletionResult(
        matrix=matrix,
        matrix_std=state.m,
        factors=FactorPair(state.p, state.u),
        trace=state.trace,
        stats=state.stats,
        algorithm=algorithm,
        flags=flags,
        wall_time=time.perf_counter() - started,
    )


def _smoothed(m, cfg, k):
    """Fresh working copy of the estimate, passed through the optional hook."""
    if cfg.smoother is None:
        return m.copy()
    out = np.array(cfg.smoother(m.copy(), k), dtype=np.float64)
    if out.shape != m.shape:
        raise InvalidArgumentError(f"smoother returned shape {out.shape}, expected {m.shape}")
    return out


def srpca_complete(x: ObservedMatrix, cfg: CompletionConfig, callback=None) -> CompletionResult:
    """Complete ``x`` with SRPCA.

    ``callback(k, residual)`` is invoked after every sweep, ``k = 0`` being
    the initialization sweep.
    """
    started = time.perf_counter()
    state = _prepare(x, cfg)
    cfg = state.cfg
    _initialize(state, callback)
    mask = state.x_std.mask
    x_obs = state.x_std.values[mask]
    trace = state.trace
    trace.termination = Termination.MAX_ITER

    for k in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        m_work = _smoothed(state.m, cfg, k)
        m_work[mask] = x_obs
        p, u, m, res, status = _sweep(state.index, m_work, state.u, cfg)
        state.note(status)
        state.p, state.u, state.m = p, u, m
        trace.residuals.append(res)
        trace.elapsed.append(time.perf_counter() - t0)
        if callback is not None:
            callback(k, res)
        if convergence_check(trace.residuals[-2], res, cfg.tol):
            trace.termination = Termination.CONVERGED
            break

    return _finish(state, "srpca", started)
