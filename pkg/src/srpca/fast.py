"""Fast SRPCA: blend model and observations with a {0, 1} step chosen from
the current observed residual norm."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CompletionConfig,
    CompletionResult,
    Termination,
    _finish,
    _initialize,
    _prepare,
    _smoothed,
    _sweep,
    convergence_check,
)
from .errors import InvalidArgumentError
from .observation import ObservedMatrix

# relative tolerance for the M(K+1) == M(K) check at the fast exit
FIXPOINT_RTOL = 1e-9


@dataclass
class AlphaRule:
    lam: float
    history: list = field(default_factory=list)

    def __call__(self, observed_residual_norm: float) -> int:
        a = alpha_select(observed_residual_norm, self.lam)
        self.history.append(a)
        return a


def alpha_select(observed_residual_norm: float, lam: float) -> int:
    """Minimizer over alpha of ``|1 - alpha| * norm + lam * |alpha|``.

    ``observed_residual_norm`` is the Frobenius norm (not squared). Ties go
    to 0, which ends the run sooner.
    """
    if not (observed_residual_norm >= 0 and lam >= 0):
        raise InvalidArgumentError(
            f"need a nonnegative norm and lambda, got {observed_residual_norm}, {lam}"
        )
    return 0 if observed_residual_norm <= lam else 1


def blend_observed(x: ObservedMatrix, m_model, alpha: int) -> np.ndarray:
    """On observed cells ``(1 - alpha) * model + alpha * x``; elsewhere the model."""
    m_model = np.asarray(m_model, dtype=np.float64)
    if m_model.shape != x.shape:
        raise InvalidArgumentError(f"model shape {m_model.shape} does not match {x.shape}")
    out = m_model.copy()
    if alpha == 1:
        out[x.mask] = x.values[x.mask]
    elif alpha != 0:
        out[x.mask] = (1.0 - alpha) * m_model[x.mask] + alpha * x.values[x.mask]
    return out


def fast_srpca_complete(x: ObservedMatrix, cfg: CompletionConfig, callback=None) -> CompletionResult:
    """Complete ``x`` with the fast variant.

    Each iteration starts from the blend chosen by the previous residual
    norm (alpha = 1 initially). With alpha = 0 the iteration leaves the
    estimate unchanged up to rounding, so the run stops there with reason
    ``fast_fixpoint``; the size of the change is kept in
    ``result.flags["fixpoint_gap"]``. With ``cfg.lam = 0`` the run matches
    :func:`srpca_complete` step for step.
    """
    started = time.perf_counter()
    state = _prepare(x, cfg)
    cfg = state.cfg
    _initialize(state, callback)
    trace = state.trace
    trace.termination = Termination.MAX_ITER
    rule = AlphaRule(cfg.lam)
    alpha = rule(math.sqrt(trace.residuals[-1]))

    for k in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        m_prev = state.m
        m_work = _smoothed(m_prev, cfg, k) if alpha != 0 else m_prev.copy()
        m_work = blend_observed(state.x_std, m_work, alpha)
        p, u, m, res, status = _sweep(state.index, m_work, state.u, cfg)
        state.note(status)
        state.p, state.u, state.m = p, u, m
        trace.residuals.append(res)
        trace.elapsed.append(time.perf_counter() - t0)
        if callback is not None:
            callback(k, res)

        if alpha == 0:
            gap = float(np.linalg.norm(m - m_prev))
            scale = float(np.linalg.norm(m_prev))
            state.flags["fixpoint_gap"] = gap
            state.flags["fixpoint_verified"] = gap <= FIXPOINT_RTOL * (1.0 + scale)
            if not state.flags["fixpoint_verified"]:
                warnings.warn(
                    f"fast exit at iteration {k} moved the estimate by {gap:.3e}",
                    RuntimeWarning,
                    stacklevel=2,
                )
            trace.termination = Termination.FAST_FIXPOINT
            break
        if convergence_check(trace.residuals[-2], res, cfg.tol):
            trace.termination = Termination.CONVERGED
            break
        alpha = rule(math.sqrt(res))

    trace.alphas = list(rule.history)
    return _finish(state, "fast_srpca", started)
