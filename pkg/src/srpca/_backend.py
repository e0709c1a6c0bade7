"""Kernel selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback. Setting ``SRPCA_PURE_PYTHON=1`` forces the fallback.
``SRPCA_THREADS`` caps the threads used by the compiled column solves.
"""

import logging
import os

_log = logging.getLogger(__name__)

from . import _fallback

try:
    if os.environ.get("SRPCA_PURE_PYTHON", "").strip() not in ("", "0"):
        raise ImportError("disabled by SRPCA_PURE_PYTHON")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError as exc:  # pragma: no cover - depends on the build
    _log.debug("compiled kernels unavailable (%s); using NumPy fallback", exc)
    _impl = _fallback
    BACKEND = "python"


def thread_count() -> int:
    raw = os.environ.get("SRPCA_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            _log.warning("ignoring non-integer SRPCA_THREADS=%r", raw)
    return os.cpu_count() or 1


def solve_loadings_csc(P, indptr, indices, data, ridge, rel_pivot):
    return _impl.solve_loadings_csc(P, indptr, indices, data, ridge, rel_pivot, thread_count())
