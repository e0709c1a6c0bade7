"""Single entry point dispatching on ``CompletionConfig.algorithm``."""

from __future__ import annotations

import dataclasses
from typing import Optional

from .baselines import AlsConfig, SvtConfig, als_complete, svt_complete
from .core import CompletionConfig, CompletionResult, srpca_complete
from .fast import fast_srpca_complete
from .observation import ObservedMatrix, destandardize, require_observed, standardize


def _baseline_configs(cfg: CompletionConfig, svt: Optional[SvtConfig], als: Optional[AlsConfig]):
    if svt is None:
        svt = SvtConfig(tol=cfg.tol, max_iter=cfg.max_iter)
    if als is None:
        als = AlsConfig(rank=cfg.rank, tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed)
    return svt, als


def complete(
    x: ObservedMatrix,
    cfg: CompletionConfig,
    svt: Optional[SvtConfig] = None,
    als: Optional[AlsConfig] = None,
    callback=None,
) -> CompletionResult:
    """Run the algorithm named by ``cfg.algorithm`` on ``x``.

    The baselines take ``tol``, ``max_iter`` (and for ALS ``rank`` and
    ``seed``) from ``cfg`` unless their own config is passed. With
    ``cfg.standardize`` they run on the standardized data and the result
    is mapped back, as the SRPCA variants do.
    """
    if cfg.algorithm == "srpca":
        return srpca_complete(x, cfg, callback=callback)
    if cfg.algorithm == "fast_srpca":
        return fast_srpca_complete(x, cfg, callback=callback)

    require_observed(x)
    svt, als = _baseline_configs(cfg, svt, als)
    if cfg.standardize:
        x_run, stats = standardize(x, cfg.epsilon)
    else:
        x_run, stats = x, None
    if cfg.algorithm == "svt":
        result = svt_complete(x_run, svt, callback=callback)
    else:
        result = als_complete(x_run, als, callback=callback)
    if stats is None:
        return result
    return dataclasses.replace(result, matrix=destandardize(result.matrix_std, stats), stats=stats)
