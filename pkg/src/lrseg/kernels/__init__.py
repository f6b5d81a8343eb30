"""Hot grid kernels with a numba path and a pure-numpy fallback.

The backend is chosen at import time from the ``LRSEG_BACKEND`` environment
variable (``numba`` or ``numpy``; default ``numba`` when it is importable) and
can be switched at runtime with :func:`set_backend`.
"""
import os

from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

_BACKENDS = {"numpy": _numpy}
if _numba is not None:
    _BACKENDS["numba"] = _numba

_active = None


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; "
                         f"choose from {sorted(_BACKENDS)}")
    _active = _BACKENDS[name]


def get_backend():
    return "numba" if _active is _numba else "numpy"


set_backend(os.environ.get("LRSEG_BACKEND",
                           "numba" if _numba is not None else "numpy").lower())


def ball_sum(field, rows, widths, where=None):
    """Sum of ``field`` over a row-decomposed ball around every cell.

    ``rows`` holds the offsets on the leading axes, ``widths`` the half-width
    along the last axis for each row. Cells outside the array read as 0.
    Only cells where ``where`` is True are computed; others are 0.
    """
    return _active.ball_sum(field, rows, widths, where)


def ball_max(field, rows, widths, where=None):
    """Maximum of a nonnegative ``field`` over the same ball decomposition."""
    return _active.ball_max(field, rows, widths, where)


def relax_jacobi(u, c, omega, h2, damping):
    return _active.relax_jacobi(u, c, omega, h2, damping)


def relax_redblack(u, c, omega, h2, damping):
    return _active.relax_redblack(u, c, omega, h2, damping)


def laplacian(u, h2):
    """Standard (2n+1)-point Laplacian; edge cells see missing neighbours as 0."""
    return _active.laplacian(u, h2)


def squared_edt(mask):
    return _active.squared_edt(mask)
