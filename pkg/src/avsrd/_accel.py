"""Backend selection for the hot kernels.

Numba is used when importable unless ``AVSRD_NO_NUMBA`` is set to a truthy
value, in which case every kernel runs its pure-numpy implementation.
"""

import os

_FLAG = os.environ.get("AVSRD_NO_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:  # pragma: no cover - depends on the environment
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged.

    Compilation is attempted even when the numpy path is selected so the
    benchmark can compare both; callers pick the path through ``USE_NUMBA``.
    """
    if not HAVE_NUMBA:
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
