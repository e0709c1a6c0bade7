"""Initial estimate, top-r Gram eigenvectors, and component projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError
from .observation import ObservedMatrix

# full eigendecomposition up to this Gram size, partial (subset) solver above
DENSE_EIG_LIMIT = 1024


@dataclass(frozen=True, eq=False)
class FactorPair:
    """Components ``P`` (m x r) and loadings ``U`` (r x n) with ``M = P @ U``."""

    components: np.ndarray
    loadings: np.ndarray

    def __post_init__(self):
        p, u = self.components, self.loadings
        if p.ndim != 2 or u.ndim != 2 or p.shape[1] != u.shape[0]:
            raise InvalidArgumentError(
                f"components {p.shape} and loadings {u.shape} do not compose"
            )

    @property
    def rank(self) -> int:
        return self.loadings.shape[0]

    def product(self) -> np.ndarray:
        return self.components @ self.loadings


def init_estimate(x_std: ObservedMatrix, seed: int) -> np.ndarray:
    """Observed cells copied, unobserved cells filled with N(0, 1) draws.

    The draws are taken from ``default_rng(seed)`` in row-major order of the
    unobserved cells.
    """
    rng = np.random.default_rng(seed)
    m0 = np.array(x_std.values, dtype=np.float64)
    missing = ~x_std.mask
    m0[missing] = rng.standard_normal(int(missing.sum()))
    return m0


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first nonzero coordinate of every row made nonnegative
    for row in vecs:
        nz = np.flatnonzero(row)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return vecs


def top_r_eig(m0, r: int):
    """Top-``r`` eigenpairs of the Gram matrix ``m0.T @ m0``.

    Parameters
    ----------
    m0 : array_like, shape (m, n)
        Finite dense matrix.
    r : int
        Number of eigenpairs, ``1 <= r <= n``.

    Returns
    -------
    loadings : ndarray, shape (r, n)
        Orthonormal eigenvectors as rows, the first nonzero coordinate of
        each one nonnegative.
    eigenvalues : ndarray, shape (r,)
        Descending.
    """
    m0 = np.asarray(m0, dtype=np.float64)
    if m0.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-D matrix, got shape {m0.shape}")
    n = m0.shape[1]
    if not 1 <= r <= n:
        raise InvalidArgumentError(f"rank r={r} outside [1, {n}]")
    if not np.all(np.isfinite(m0)):
        raise InvalidArgumentError("matrix contains non-finite entries")

    gram = m0.T @ m0
    gram = 0.5 * (gram + gram.T)
    if n <= DENSE_EIG_LIMIT:
        w, v = np.linalg.eigh(gram)
        w, v = w[n - r :], v[:, n - r :]
    else:
        w, v = scipy.linalg.eigh(gram, subset_by_index=[n - r, n - 1])
    order = np.argsort(w)[::-1]
    w = np.maximum(w[order], 0.0)
    loadings = _fix_signs(np.ascontiguousarray(v[:, order].T))
    return loadings, w


def project_components(m, u) -> np.ndarray:
    """``P = M @ U.T``."""
    m = np.asarray(m, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if m.ndim != 2 or u.ndim != 2 or m.shape[1] != u.shape[1]:
        raise InvalidArgumentError(
            f"cannot project a {m.shape} matrix on loadings of shape {u.shape}"
        )
    return m @ u.T
