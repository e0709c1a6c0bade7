"""Partially observed matrices, per-column standardization, and random masks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True, eq=False)
class ObservedMatrix:
    """Dense value grid plus a boolean observation mask.

    ``mask[i, j]`` is True when entry ``(i, j)`` is observed. Unobserved cells
    are stored as 0 and are never read by any algorithm in this package.
    An empty mask is representable; the solvers and :func:`standardize`
    reject it.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        mask = np.array(self.mask, dtype=bool, copy=True)
        if values.ndim != 2:
            raise InvalidArgumentError(f"values must be 2-D, got shape {values.shape}")
        if mask.shape != values.shape:
            raise InvalidArgumentError(
                f"mask shape {mask.shape} does not match values shape {values.shape}"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidArgumentError("matrix dimensions must be positive")
        values[~mask] = 0.0
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("observed entries must be finite")
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_array(cls, a) -> ObservedMatrix:
        """Build from an array where NaN marks a missing entry."""
        a = np.asarray(a, dtype=np.float64)
        mask = ~np.isnan(a)
        return cls(np.where(mask, a, 0.0), mask)

    @classmethod
    def full(cls, a) -> ObservedMatrix:
        a = np.asarray(a, dtype=np.float64)
        return cls(a, np.ones(a.shape, dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def observed(self) -> np.ndarray:
        """Observed entries in row-major order."""
        return self.values[self.mask]

    def to_array(self) -> np.ndarray:
        """Values with NaN in the unobserved cells."""
        return np.where(self.mask, self.values, np.nan)

    def with_mask(self, mask) -> ObservedMatrix:
        """Restrict to ``mask``; cells outside the current mask stay unobserved."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.shape:
            raise InvalidArgumentError(
                f"mask shape {mask.shape} does not match matrix shape {self.shape}"
            )
        return ObservedMatrix(self.values, mask & self.mask)


@dataclass(frozen=True, eq=False)
class ColumnStats:
    """Per-column location and scale of the observed entries.

    Columns without observations record ``mean = std = 0`` and are flagged in
    ``empty``.
    """

    means: np.ndarray
    stds: np.ndarray
    epsilon: float
    empty: np.ndarray

    @classmethod
    def identity(cls, n: int) -> ColumnStats:
        """Stats for which destandardize is the identity map."""
        return cls(np.zeros(n), np.ones(n), 0.0, np.zeros(n, dtype=bool))

    @property
    def scales(self) -> np.ndarray:
        return self.stds + self.epsilon


def standardize(x: ObservedMatrix, epsilon: float = DEFAULT_EPSILON):
    """Center and scale every column by the mean and population std of its
    observed entries.

    Parameters
    ----------
    x : ObservedMatrix
        Input matrix.
    epsilon : float
        Guard added to each column std before dividing.

    Returns
    -------
    x_std : ObservedMatrix
        Standardized matrix with the same mask.
    stats : ColumnStats
        What is needed to undo the transform with :func:`destandardize`.
    """
    if not np.isfinite(epsilon) or epsilon < 0:
        raise InvalidArgumentError(f"epsilon must be a nonnegative finite number, got {epsilon}")
    require_observed(x)
    mask = x.mask
    counts = mask.sum(axis=0)
    empty = counts == 0
    safe_counts = np.where(empty, 1, counts)
    means = (x.values * mask).sum(axis=0) / safe_counts
    centered = np.where(mask, x.values - means, 0.0)
    stds = np.sqrt((centered**2).sum(axis=0) / safe_counts)
    means[empty] = 0.0
    stds[empty] = 0.0

    scales = stds + epsilon
    # a constant column with epsilon=0 centers to exactly 0; leave it there
    safe_scales = np.where(scales > 0, scales, 1.0)
    out = np.where(mask, centered / safe_scales, 0.0)
    stats = ColumnStats(means, stds, float(epsilon), empty)
    return ObservedMatrix(out, mask), stats


def destandardize(m, stats: ColumnStats) -> np.ndarray:
    """Map a dense grid from standardized back to original units."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != stats.means.shape[0]:
        raise InvalidArgumentError(
            f"grid with shape {m.shape} does not match stats for "
            f"{stats.means.shape[0]} columns"
        )
    return m * stats.scales + stats.means


def require_observed(x: ObservedMatrix) -> None:
    if not x.mask.any():
        raise InvalidArgumentError("matrix has no observed entries")


def _count_for_fraction(total: int, fraction: float) -> int:
    return int(np.floor(fraction * total + 0.5))


def random_mask(m: int, n: int, missing_fraction: float, seed: int) -> np.ndarray:
    """Mask with exactly ``round(missing_fraction * m * n)`` unobserved cells.

    The unobserved cells are the first entries of a seeded uniform
    permutation of the flat (row-major) cell indices.
    """
    if m < 1 or n < 1:
        raise InvalidArgumentError(f"dimensions must be positive, got {m}x{n}")
    if not 0.0 <= missing_fraction < 1.0:
        raise InvalidArgumentError(
            f"missing_fraction must lie in [0, 1), got {missing_fraction}"
        )
    rng = np.random.default_rng(seed)
    k = _count_for_fraction(m * n, missing_fraction)
    mask = np.ones(m * n, dtype=bool)
    mask[rng.permutation(m * n)[:k]] = False
    return mask.reshape(m, n)


def holdout_mask(mask, fraction: float, seed: int) -> np.ndarray:
    """Hide ``round(fraction * |observed|)`` of the currently observed cells.

    Returns the training mask; the held-out cells are ``mask & ~train``.
    Cells that are already unobserved are never selected.
    """
    mask = np.asarray(mask, dtype=bool)
    if not 0.0 <= fraction < 1.0:
        raise InvalidArgumentError(f"holdout fraction must lie in [0, 1), got {fraction}")
    observed = np.flatnonzero(mask)
    k = _count_for_fraction(observed.size, fraction)
    rng = np.random.default_rng(seed)
    train = mask.copy().ravel()
    train[observed[rng.permutation(observed.size)[:k]]] = False
    return train.reshape(mask.shape)
