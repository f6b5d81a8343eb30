"""Vectorised numpy implementations of the hot grid kernels.

Every function here has a twin in :mod:`lrseg.kernels._numba` with the same
signature and the same results (bitwise for the EDT and the sup kernel,
to rounding for the ball sums).
"""
import numpy as np
from scipy import ndimage


def _shift_slices(offsets, shape):
    """Target/source slices that realise ``out[t] += src[t + offsets]``."""
    tgt, src = [], []
    for d, n in zip(offsets, shape):
        d = int(d)
        if d >= 0:
            tgt.append(slice(0, n - d))
            src.append(slice(d, n))
        else:
            tgt.append(slice(-d, n))
            src.append(slice(0, n + d))
    return tuple(tgt), tuple(src)


def _window_sums(field, widths):
    nx = field.shape[-1]
    P = np.zeros(field.shape[:-1] + (nx + 1,))
    np.cumsum(field, axis=-1, out=P[..., 1:])
    j = np.arange(nx)
    sums = {}
    for w in np.unique(widths):
        hi = np.minimum(j + w + 1, nx)
        lo = np.maximum(j - w, 0)
        sums[int(w)] = P[..., hi] - P[..., lo]
    return sums


def ball_sum(field, rows, widths, where=None):
    field = np.ascontiguousarray(field, dtype=np.float64)
    sums = _window_sums(field, widths)
    out = np.zeros_like(field)
    lead = field.shape[:-1]
    for row, w in zip(rows, widths):
        tgt, src = _shift_slices(row, lead)
        out[tgt] += sums[int(w)][src]
    if where is not None:
        out[~where] = 0.0
    return out


def ball_max(field, rows, widths, where=None):
    field = np.ascontiguousarray(field, dtype=np.float64)
    maxes = {
        int(w): ndimage.maximum_filter1d(field, 2 * int(w) + 1, axis=-1,
                                         mode="constant", cval=0.0)
        for w in np.unique(widths)
    }
    out = np.zeros_like(field)
    lead = field.shape[:-1]
    for row, w in zip(rows, widths):
        tgt, src = _shift_slices(row, lead)
        np.maximum(out[tgt], maxes[int(w)][src], out=out[tgt])
    if where is not None:
        out[~where] = 0.0
    return out


def _neighbour_sum(u):
    s = np.zeros_like(u)
    for ax in range(u.ndim):
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        s[tuple(lo)] += u[tuple(hi)]
        s[tuple(hi)] += u[tuple(lo)]
    return s


def relax_jacobi(u, c, omega, h2, damping):
    nb = _neighbour_sum(u)
    new = u.copy()
    upd = (1.0 - damping) * u + damping * nb / (2 * u.ndim + h2 * c)
    new[omega] = upd[omega]
    return new


def relax_redblack(u, c, omega, h2, damping):
    new = u.copy()
    parity = np.indices(u.shape).sum(axis=0) % 2
    for colour in (0, 1):
        nb = _neighbour_sum(new)
        upd = (1.0 - damping) * new + damping * nb / (2 * u.ndim + h2 * c)
        sel = omega & (parity == colour)
        new[sel] = upd[sel]
    return new


def laplacian(u, h2):
    return (_neighbour_sum(u) - 2 * u.ndim * u) / h2


def squared_edt(mask):
    """Squared distance (in cells) from every cell to the nearest True cell."""
    idx = ndimage.distance_transform_edt(~mask, return_distances=False,
                                         return_indices=True)
    grid = np.indices(mask.shape)
    d2 = np.zeros(mask.shape, dtype=np.int64)
    for ax in range(mask.ndim):
        d2 += (idx[ax].astype(np.int64) - grid[ax]) ** 2
    return d2.astype(np.float64)
