"""Numba-compiled grid kernels (2D and 3D variants, dispatched by ndim)."""
import numpy as np
from numba import njit

_opts = {"cache": True, "nogil": True}


@njit(**_opts)
def _prefix_last(f):
    n0 = f.size // f.shape[-1]
    nx = f.shape[-1]
    flat = f.reshape(n0, nx)
    P = np.zeros((n0, nx + 1))
    for a in range(n0):
        s = 0.0
        for j in range(nx):
            s += flat[a, j]
            P[a, j + 1] = s
    return P


@njit(**_opts)
def _ball_sum_2d(f, rows, widths, where):
    n0, n1 = f.shape
    P = _prefix_last(f)
    out = np.zeros_like(f)
    for i in range(n0):
        for j in range(n1):
            if not where[i, j]:
                continue
            s = 0.0
            for r in range(widths.shape[0]):
                ii = i + rows[r, 0]
                if ii < 0 or ii >= n0:
                    continue
                w = widths[r]
                hi = min(j + w + 1, n1)
                lo = max(j - w, 0)
                s += P[ii, hi] - P[ii, lo]
            out[i, j] = s
    return out


@njit(**_opts)
def _ball_sum_3d(f, rows, widths, where):
    n0, n1, n2 = f.shape
    P = _prefix_last(f)
    out = np.zeros_like(f)
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                if not where[i, j, k]:
                    continue
                s = 0.0
                for r in range(widths.shape[0]):
                    ii = i + rows[r, 0]
                    jj = j + rows[r, 1]
                    if ii < 0 or ii >= n0 or jj < 0 or jj >= n1:
                        continue
                    w = widths[r]
                    hi = min(k + w + 1, n2)
                    lo = max(k - w, 0)
                    a = ii * n1 + jj
                    s += P[a, hi] - P[a, lo]
                out[i, j, k] = s
    return out


@njit(**_opts)
def _sliding_max(line, w, out):
    # van Herk / Gil-Werman on a zero-padded line; window = 2w+1
    n = line.shape[0]
    k = 2 * w + 1
    m = n + 2 * w
    nb = (m + k - 1) // k
    L = np.zeros(nb * k)
    Rr = np.zeros(nb * k)
    for b in range(nb):
        base = b * k
        run = 0.0
        for t in range(k):
            p = base + t - w
            v = line[p] if 0 <= p < n else 0.0
            if t == 0 or v > run:
                run = v
            L[base + t] = run
        run = 0.0
        for t in range(k - 1, -1, -1):
            p = base + t - w
            v = line[p] if 0 <= p < n else 0.0
            if t == k - 1 or v > run:
                run = v
            Rr[base + t] = run
    for j in range(n):
        a = Rr[j]
        b = L[j + k - 1]
        out[j] = a if a > b else b


@njit(**_opts)
def _line_maxes(f, uw):
    nx = f.shape[-1]
    n0 = f.size // nx
    flat = f.reshape(n0, nx)
    M = np.zeros((uw.shape[0], n0, nx))
    for q in range(uw.shape[0]):
        for a in range(n0):
            _sliding_max(flat[a], uw[q], M[q, a])
    return M


@njit(**_opts)
def _ball_max_2d(f, rows, widths, where, uw, widx):
    n0, n1 = f.shape
    M = _line_maxes(f, uw)
    out = np.zeros_like(f)
    for i in range(n0):
        for j in range(n1):
            if not where[i, j]:
                continue
            best = 0.0
            for r in range(widths.shape[0]):
                ii = i + rows[r, 0]
                if ii < 0 or ii >= n0:
                    continue
                v = M[widx[r], ii, j]
                if v > best:
                    best = v
            out[i, j] = best
    return out


@njit(**_opts)
def _ball_max_3d(f, rows, widths, where, uw, widx):
    n0, n1, n2 = f.shape
    M = _line_maxes(f, uw)
    out = np.zeros_like(f)
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                if not where[i, j, k]:
                    continue
                best = 0.0
                for r in range(widths.shape[0]):
                    ii = i + rows[r, 0]
                    jj = j + rows[r, 1]
                    if ii < 0 or ii >= n0 or jj < 0 or jj >= n1:
                        continue
                    v = M[widx[r], ii * n1 + jj, k]
                    if v > best:
                        best = v
                out[i, j, k] = best
    return out


def _where(field, where):
    if where is None:
        return np.ones(field.shape, dtype=np.bool_)
    return np.ascontiguousarray(where, dtype=np.bool_)


def ball_sum(field, rows, widths, where=None):
    field = np.ascontiguousarray(field, dtype=np.float64)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    widths = np.ascontiguousarray(widths, dtype=np.int64)
    fn = _ball_sum_2d if field.ndim == 2 else _ball_sum_3d
    return fn(field, rows, widths, _where(field, where))


def ball_max(field, rows, widths, where=None):
    field = np.ascontiguousarray(field, dtype=np.float64)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    widths = np.ascontiguousarray(widths, dtype=np.int64)
    uw, widx = np.unique(widths, return_inverse=True)
    fn = _ball_max_2d if field.ndim == 2 else _ball_max_3d
    return fn(field, rows, widths, _where(field, where), uw.astype(np.int64),
              widx.astype(np.int64))


@njit(**_opts)
def _relax_2d(u, c, omega, h2, damping, redblack):
    n0, n1 = u.shape
    new = u.copy()
    src = new if redblack else u
    for colour in range(2 if redblack else 1):
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                if not omega[i, j]:
                    continue
                if redblack and (i + j) % 2 != colour:
                    continue
                nb = src[i - 1, j] + src[i + 1, j] + src[i, j - 1] + src[i, j + 1]
                new[i, j] = ((1.0 - damping) * src[i, j]
                             + damping * nb / (4.0 + h2 * c[i, j]))
    return new


@njit(**_opts)
def _relax_3d(u, c, omega, h2, damping, redblack):
    n0, n1, n2 = u.shape
    new = u.copy()
    src = new if redblack else u
    for colour in range(2 if redblack else 1):
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                for k in range(1, n2 - 1):
                    if not omega[i, j, k]:
                        continue
                    if redblack and (i + j + k) % 2 != colour:
                        continue
                    nb = (src[i - 1, j, k] + src[i + 1, j, k] + src[i, j - 1, k]
                          + src[i, j + 1, k] + src[i, j, k - 1] + src[i, j, k + 1])
                    new[i, j, k] = ((1.0 - damping) * src[i, j, k]
                                    + damping * nb / (6.0 + h2 * c[i, j, k]))
    return new


def relax_jacobi(u, c, omega, h2, damping):
    fn = _relax_2d if u.ndim == 2 else _relax_3d
    return fn(u, c, omega, h2, damping, False)


def relax_redblack(u, c, omega, h2, damping):
    fn = _relax_2d if u.ndim == 2 else _relax_3d
    return fn(u, c, omega, h2, damping, True)


@njit(**_opts)
def _lap_2d(u, h2):
    n0, n1 = u.shape
    out = np.zeros_like(u)
    for i in range(n0):
        for j in range(n1):
            s = -4.0 * u[i, j]
            if i > 0:
                s += u[i - 1, j]
            if i < n0 - 1:
                s += u[i + 1, j]
            if j > 0:
                s += u[i, j - 1]
            if j < n1 - 1:
                s += u[i, j + 1]
            out[i, j] = s / h2
    return out


@njit(**_opts)
def _lap_3d(u, h2):
    n0, n1, n2 = u.shape
    out = np.zeros_like(u)
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                s = -6.0 * u[i, j, k]
                if i > 0:
                    s += u[i - 1, j, k]
                if i < n0 - 1:
                    s += u[i + 1, j, k]
                if j > 0:
                    s += u[i, j - 1, k]
                if j < n1 - 1:
                    s += u[i, j + 1, k]
                if k > 0:
                    s += u[i, j, k - 1]
                if k < n2 - 1:
                    s += u[i, j, k + 1]
                out[i, j, k] = s / h2
    return out


def laplacian(u, h2):
    u = np.ascontiguousarray(u, dtype=np.float64)
    return (_lap_2d if u.ndim == 2 else _lap_3d)(u, h2)


@njit(**_opts)
def _edt_line(f, d, v, z):
    # Felzenszwalb-Huttenlocher lower envelope; f may contain inf
    n = f.shape[0]
    k = -1
    for q in range(n):
        if f[q] == np.inf:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
            continue
        while True:
            p = v[k]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p)
            if s <= z[k]:
                k -= 1
                if k < 0:
                    break
            else:
                break
        k += 1
        v[k] = q
        z[k] = s if k > 0 else -np.inf
        z[k + 1] = np.inf
    if k < 0:
        for q in range(n):
            d[q] = np.inf
        return
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        p = v[k]
        d[q] = (q - p) * (q - p) + f[p]


@njit(**_opts)
def _edt_axis(a, axis_len, lines):
    # a viewed as (lines, axis_len), transformed in place
    f = np.empty(axis_len)
    d = np.empty(axis_len)
    v = np.empty(axis_len, dtype=np.int64)
    z = np.empty(axis_len + 1)
    for li in range(lines):
        for q in range(axis_len):
            f[q] = a[li, q]
        _edt_line(f, d, v, z)
        for q in range(axis_len):
            a[li, q] = d[q]


def squared_edt(mask):
    """Squared distance (in cells) from every cell to the nearest True cell."""
    a = np.where(mask, 0.0, np.inf)
    for ax in range(mask.ndim):
        moved = np.ascontiguousarray(np.moveaxis(a, ax, -1))
        shp = moved.shape
        flat = moved.reshape(-1, shp[-1])
        _edt_axis(flat, shp[-1], flat.shape[0])
        a = np.moveaxis(flat.reshape(shp), -1, ax)
    return np.ascontiguousarray(a)
