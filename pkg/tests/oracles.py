"""Independent brute-force reference implementations used by the tests.

Nothing here imports the package's kernels: every oracle loops over cells
or directions directly so that agreement is a genuine cross-check.
"""
import math

import numpy as np


def edt_brute(mask):
    """Squared distance (in cells) from every cell to the nearest True cell."""
    pts = np.argwhere(mask).astype(float)
    grid = np.argwhere(np.ones(mask.shape, dtype=bool)).astype(float)
    out = np.empty(len(grid))
    for k in range(0, len(grid), 2048):
        g = grid[k:k + 2048]
        d2 = ((g[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        out[k:k + 2048] = d2.min(axis=1)
    return out.reshape(mask.shape)


def ball_brute(field, r_cells, kind):
    """H over the discrete ball {|z| <= r_cells}, zero outside the array."""
    field = np.asarray(field, dtype=float)
    shape = field.shape
    rr = int(math.floor(r_cells + 1e-9))
    offs = [z for z in np.ndindex(*([2 * rr + 1] * field.ndim))]
    offs = [np.array(z) - rr for z in offs]
    offs = [z for z in offs if (z * z).sum() <= r_cells * r_cells + 1e-9]
    # one zero-padded shift per offset: still a direct scan of every ball cell
    pad = np.pad(field, rr)
    shifted = np.stack([pad[tuple(slice(rr + z[a], rr + z[a] + shape[a])
                                  for a in range(field.ndim))] for z in offs])
    return shifted.max(axis=0) if kind == "sup" else shifted.sum(axis=0) / len(offs)


def dense_residual(v, K, omega, collar_vals, h, r_cells, eps, kind):
    """Full discrete residual Lap_h u_i - eps^-2 u_i sum_{j != i} H(u_j) on omega.

    ``v`` stacks the omega values of every population; exterior cells take
    ``collar_vals`` (zero away from the collar).
    """
    m = int(omega.sum())
    u = np.array(collar_vals, dtype=float)
    for i in range(K):
        u[i][omega] = v[i * m:(i + 1) * m]
    H = [ball_brute(u[i], r_cells, kind) for i in range(K)]
    out = []
    for i in range(K):
        pad = np.pad(u[i], 1)
        lap = np.zeros(u[i].shape)
        for ax in range(u[i].ndim):
            lo = [slice(1, -1)] * u[i].ndim
            hi = [slice(1, -1)] * u[i].ndim
            lo[ax] = slice(0, -2)
            hi[ax] = slice(2, None)
            lap += pad[tuple(lo)] + pad[tuple(hi)]
        lap = (lap - 2 * u[i].ndim * u[i]) / (h * h)
        c = sum(H[j] for j in range(K) if j != i) / eps ** 2
        out.append((lap - c * u[i])[omega])
    return np.concatenate(out)


def angle_2d_brute(dirs, samples=200_000):
    """Measure of the arc of directions d with d.nu <= 0 for all nu (grid scan)."""
    phi = (np.arange(samples) + 0.5) * 2 * math.pi / samples
    d = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    ok = np.all(d @ np.asarray(dirs, dtype=float).T <= 0.0, axis=1)
    return ok.mean() * 2 * math.pi


def reflect_brute(x, x0, y0):
    """Mirror image across the perpendicular bisector of x0-y0 (one point)."""
    x, x0, y0 = (np.asarray(a, dtype=float) for a in (x, x0, y0))
    nrm = (y0 - x0) / np.linalg.norm(y0 - x0)
    mid = 0.5 * (x0 + y0)
    return x - 2.0 * ((x - mid) @ nrm) * nrm
