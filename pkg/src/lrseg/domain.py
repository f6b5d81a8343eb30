"""Discretised domain, boundary collar and boundary-data validation.

Cells are addressed by integer index tuples; the center of cell ``idx`` sits
at ``origin + (idx + 0.5) * h``. The array is padded so that the whole collar
(all exterior cells within ``R`` of the discrete boundary) fits inside it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import kernels

SHAPE_KINDS = ("disk", "ball", "box", "annulus", "mask")


class ResolutionError(ValueError):
    """Interaction radius too small for the grid (R < 4h)."""


class EmptyDomainError(ValueError):
    pass


class EmptyMaskError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridDomain:
    n: int
    shape: tuple
    h: float
    R: float
    origin: np.ndarray
    omega_mask: np.ndarray
    collar_mask: np.ndarray
    boundary_mask: np.ndarray
    shape_kind: str = "mask"
    shape_params: dict = field(default_factory=dict)

    @property
    def bbox(self):
        lo = np.asarray(self.origin, dtype=float)
        return lo, lo + np.asarray(self.shape) * self.h

    @property
    def support_mask(self):
        """Omega together with its collar."""
        return self.omega_mask | self.collar_mask

    def axes(self):
        return [self.origin[a] + (np.arange(s) + 0.5) * self.h
                for a, s in enumerate(self.shape)]

    def centers(self):
        """Cell centers as an array of shape ``(n, *shape)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))

    def center_of(self, idx):
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.h

    def index_of(self, point):
        """Index of the cell containing ``point`` (floor), not range checked."""
        return tuple(np.floor((np.asarray(point) - self.origin) / self.h)
                     .astype(int))

    def to_grid_coords(self, points):
        """Continuous index coordinates; cell centers map to integers."""
        return (np.asarray(points, dtype=float) - self.origin) / self.h - 0.5

    def ball_cell_count(self, radius):
        r = radius / self.h
        rr = int(math.floor(r + 1e-9))
        z = np.arange(-rr, rr + 1)
        g = np.meshgrid(*([z] * self.n), indexing="ij")
        return int((sum(a * a for a in g) <= r * r + 1e-9).sum())


def _inside(kind, params, pts, n):
    """Center-in-set test; ``pts`` has shape (n, ...)."""
    if kind in ("disk", "ball"):
        c = np.asarray(params.get("center", [0.0] * n), dtype=float)
        r = float(params.get("radius", 1.0))
        d2 = sum((pts[a] - c[a]) ** 2 for a in range(n))
        return d2 < r * r
    if kind == "box":
        lo = np.asarray(params.get("lo", [0.0] * n), dtype=float)
        hi = np.asarray(params.get("hi", [1.0] * n), dtype=float)
        out = np.ones(pts.shape[1:], dtype=bool)
        for a in range(n):
            out &= (pts[a] > lo[a]) & (pts[a] < hi[a])
        return out
    if kind == "annulus":
        c = np.asarray(params.get("center", [0.0] * n), dtype=float)
        r0 = float(params["r_inner"])
        r1 = float(params["r_outer"])
        d2 = sum((pts[a] - c[a]) ** 2 for a in range(n))
        return (d2 > r0 * r0) & (d2 < r1 * r1)
    raise ValueError(f"unknown shape kind {kind!r}")


def _extents(kind, params, n):
    if kind in ("disk", "ball"):
        c = np.asarray(params.get("center", [0.0] * n), dtype=float)
        r = float(params.get("radius", 1.0))
        return c - r, c + r
    if kind == "box":
        return (np.asarray(params.get("lo", [0.0] * n), dtype=float),
                np.asarray(params.get("hi", [1.0] * n), dtype=float))
    if kind == "annulus":
        c = np.asarray(params.get("center", [0.0] * n), dtype=float)
        r = float(params["r_outer"])
        return c - r, c + r
    raise ValueError(f"unknown shape kind {kind!r}")


def _check_scales(h, R):
    if not h > 0:
        raise ValueError(f"grid spacing must be positive, got h={h}")
    if not 0 < R <= 1:
        raise ValueError(f"interaction radius must satisfy 0 < R <= 1, got {R}")
    if R < 4 * h * (1 - 1e-12):
        raise ResolutionError(
            f"R={R} is below the resolution floor 4h={4 * h}")


def build_domain(shape, h, R, dimension=None):
    """Build a :class:`GridDomain` from a shape description.

    Parameters
    ----------
    shape : dict
        ``{"kind": "disk"|"ball"|"box"|"annulus"|"mask", ...}`` with the
        kind's parameters (``center``/``radius``, ``lo``/``hi``,
        ``r_inner``/``r_outer``, or ``mask`` (bool array or ``.npy`` path)
        plus ``origin`` of its lower corner).
    h, R : float
        Cell size and interaction radius.
    dimension : int, optional
        2 or 3; inferred from the shape parameters when omitted.
    """
    _check_scales(h, R)
    kind = shape["kind"]
    if kind not in SHAPE_KINDS:
        raise ValueError(f"unknown shape kind {kind!r}; expected one of "
                         f"{SHAPE_KINDS}")
    params = {k: v for k, v in shape.items() if k != "kind"}
    pad = int(math.ceil(R / h - 1e-9)) + 2

    if kind == "mask":
        m = params["mask"]
        if isinstance(m, (str, Path)):
            m = np.load(m)
        m = np.asarray(m, dtype=bool)
        n = m.ndim
        lo = np.asarray(params.get("origin", [0.0] * n), dtype=float)
        omega = np.pad(m, pad)
        origin = lo - pad * h
    else:
        n = dimension
        if n is None:
            for key in ("center", "lo", "hi"):
                if key in params:
                    n = len(params[key])
                    break
            else:
                n = 3 if kind == "ball" else 2
        lo, hi = _extents(kind, params, n)
        cells = np.maximum(np.ceil((hi - lo) / h - 1e-9).astype(int), 1)
        shp = tuple(int(c) + 2 * pad for c in cells)
        origin = lo - pad * h
        axes = [origin[a] + (np.arange(shp[a]) + 0.5) * h for a in range(n)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"))
        omega = _inside(kind, params, pts, n)

    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    if not omega.any():
        raise EmptyDomainError("no cell center lies inside the domain")

    boundary = boundary_cells(omega)
    d2 = kernels.squared_edt(boundary)
    collar = ~omega & (d2 <= (R / h) ** 2 + 1e-9)
    for a in (omega, collar, boundary):
        a.setflags(write=False)
    return GridDomain(n=n, shape=omega.shape, h=float(h), R=float(R),
                      origin=np.asarray(origin, dtype=float),
                      omega_mask=omega, collar_mask=collar,
                      boundary_mask=boundary, shape_kind=kind,
                      shape_params=params)


def boundary_cells(omega):
    """Omega cells with at least one face neighbour outside omega."""
    outside = ~omega
    touch = np.zeros_like(omega)
    for ax in range(omega.ndim):
        for s in (1, -1):
            sh = np.roll(outside, s, axis=ax)
            # cells on the array edge see the outside
            edge = [slice(None)] * omega.ndim
            edge[ax] = 0 if s == 1 else -1
            sh[tuple(edge)] = True
            touch |= sh
    return omega & touch


def distance_field(mask, gd):
    """Exact Euclidean distance from every cell center to the nearest True cell."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("distance_field needs a nonempty mask")
    return np.sqrt(kernels.squared_edt(mask)) * gd.h


# ---------------------------------------------------------------- boundary data


@dataclass(frozen=True, eq=False)
class BoundaryData:
    K: int
    values: np.ndarray  # (K, *shape), zero off the collar
    support_components: tuple

    def support(self, i):
        return self.values[i] > 0


def _orthant_distance(pts, signs):
    # distance to the boundary of {signs[a] * x_a > 0 for all a}, from inside
    comps = [signs[a] * pts[a] for a in range(len(signs))]
    inside = np.all([c > 0 for c in comps], axis=0)
    return np.where(inside, np.min(comps, axis=0), 0.0)


def _sector_distance(pts, theta0, theta1):
    # distance from p to the complement of the wedge theta0 < arg p < theta1
    x, y = pts[0], pts[1]
    rho = np.hypot(x, y)
    ang = np.mod(np.arctan2(y, x) - theta0, 2 * np.pi)
    width = np.mod(theta1 - theta0, 2 * np.pi) or 2 * np.pi
    inside = ang < width

    def to_ray(phi):
        return np.where(np.abs(phi) < np.pi / 2, rho * np.sin(np.abs(phi)), rho)

    d = np.minimum(to_ray(ang), to_ray(width - ang))
    return np.where(inside, d, 0.0)


def evaluate_profile(spec, gd):
    """Evaluate a named analytic boundary profile at every cell center."""
    kind = spec["kind"]
    amp = float(spec.get("amplitude", 1.0))
    pts = gd.centers()
    n = gd.n
    if kind == "constant":
        return np.full(gd.shape, amp)
    if kind == "linear":
        normal = np.asarray(spec["normal"], dtype=float)
        s = sum(normal[a] * pts[a] for a in range(n)) - float(spec.get("offset", 0.0))
        return amp * np.maximum(s, 0.0) / float(spec.get("scale", 1.0))
    if kind == "orthant":
        signs = np.asarray(spec["signs"], dtype=float)
        d = _orthant_distance(pts, signs)
        gap = float(spec.get("gap", 0.0))
        width = float(spec.get("width", 1.0))
        return amp * np.clip((d - gap) / width, 0.0, 1.0)
    if kind == "sector":
        d = _sector_distance(pts, float(spec["theta0"]), float(spec["theta1"]))
        gap = float(spec.get("gap", 0.0))
        width = float(spec.get("width", 1.0))
        return amp * np.clip((d - gap) / width, 0.0, 1.0)
    if kind == "bump":
        c = np.asarray(spec["center"], dtype=float)
        r = float(spec["radius"])
        d2 = sum((pts[a] - c[a]) ** 2 for a in range(n))
        return np.where(d2 <= r * r, amp, 0.0)
    if kind == "zero":
        return np.zeros(gd.shape)
    raise ValueError(f"unknown boundary profile {kind!r}")


def load_csv_values(path, gd):
    """Read ``i,j[,k],value`` rows into a grid array (other cells 0)."""
    out = np.zeros(gd.shape)
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                idx = tuple(int(v) for v in row[:gd.n])
                val = float(row[gd.n])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}")
            out[idx] = val
    return out


def make_boundary_data(gd, values):
    """Restrict per-population grid arrays to the collar and record components."""
    vals = np.array(values, dtype=float)
    if vals.ndim == gd.n:
        vals = vals[None]
    if vals.shape[1:] != gd.shape:
        raise ValueError(f"boundary values have shape {vals.shape[1:]}, "
                         f"grid is {gd.shape}")
    vals = np.where(gd.collar_mask[None], vals, 0.0)
    near = collar_adjacent(gd)
    structure = ndimage.generate_binary_structure(gd.n, gd.n)
    comps = tuple(int(ndimage.label((v > 0) & near, structure)[1]) for v in vals)
    vals.setflags(write=False)
    return BoundaryData(K=vals.shape[0], values=vals, support_components=comps)


def collar_adjacent(gd):
    """Collar cells sharing a face with an omega cell."""
    om = gd.omega_mask
    touch = np.zeros_like(om)
    for ax in range(gd.n):
        for s in (1, -1):
            touch |= np.roll(om, s, axis=ax)
    return gd.collar_mask & touch


# ------------------------------------------------------------------ validation


@dataclass
class ValidationReport:
    flags: dict
    separation: np.ndarray
    hoelder_modulus: np.ndarray
    corkscrew: np.ndarray
    components: tuple
    violations: list

    @property
    def passed(self):
        return all(self.flags.values())

    def to_dict(self):
        K = len(self.components)
        sep = [[None if not np.isfinite(self.separation[i, j])
                else float(self.separation[i, j]) for j in range(K)]
               for i in range(K)]
        records = []
        for name, ok in self.flags.items():
            rec = {"assumption": name, "passed": bool(ok)}
            if name == "separation":
                rec["pairwise_distance"] = sep
            elif name == "hoelder":
                rec["sampled_modulus"] = [float(v) for v in self.hoelder_modulus]
            elif name == "corkscrew":
                rec["measured_constant"] = [float(v) for v in self.corkscrew]
            elif name == "finite_components":
                rec["components"] = list(self.components)
            rec["violations"] = [v for v in self.violations
                                 if v["assumption"] == name]
            records.append(rec)
        return {"passed": self.passed, "records": records}


def _hoelder_modulus(gd, f, alpha, rng, radius_cells=3, random_pairs=20000):
    collar = gd.collar_mask
    best = 0.0
    rr = radius_cells
    z = np.arange(-rr, rr + 1)
    offs = np.stack(np.meshgrid(*([z] * gd.n), indexing="ij")).reshape(gd.n, -1).T
    offs = [o for o in offs if 0 < (o * o).sum() <= rr * rr and tuple(o) > (0,) * gd.n]
    idx = np.argwhere(collar)
    if len(idx) < 2:
        return 0.0
    shape = np.asarray(gd.shape)
    for o in offs:
        j = idx + o
        ok = np.all((j >= 0) & (j < shape), axis=1)
        a, b = idx[ok], j[ok]
        keep = collar[tuple(b.T)]
        a, b = a[keep], b[keep]
        if len(a) == 0:
            continue
        diff = np.abs(f[tuple(a.T)] - f[tuple(b.T)])
        dist = math.sqrt(float((o * o).sum())) * gd.h
        best = max(best, float(diff.max()) / dist ** alpha)
    p = rng.integers(0, len(idx), size=(random_pairs, 2))
    p = p[p[:, 0] != p[:, 1]]
    a, b = idx[p[:, 0]], idx[p[:, 1]]
    dist = np.sqrt(((a - b) ** 2).sum(axis=1)) * gd.h
    diff = np.abs(f[tuple(a.T)] - f[tuple(b.T)])
    best = max(best, float((diff / dist ** alpha).max()))
    return best


def _ball_rows(r_cells, n):
    """Row decomposition of the discrete ball |z| <= r_cells."""
    rr = int(math.floor(r_cells + 1e-9))
    rows, widths = [], []
    z = np.arange(-rr, rr + 1)
    lead = np.stack(np.meshgrid(*([z] * (n - 1)), indexing="ij")).reshape(n - 1, -1).T
    for row in lead:
        rem = r_cells * r_cells + 1e-9 - float((row * row).sum())
        if rem < 0:
            continue
        rows.append(row)
        widths.append(int(math.floor(math.sqrt(rem))))
    return np.asarray(rows, dtype=np.int64), np.asarray(widths, dtype=np.int64)


def validate_boundary_data(gd, bd, hoelder_exponent=1.0, corkscrew_c=0.05,
                           seed=0):
    """Check boundary data against the standing assumptions, discretely.

    Failures are collected in the report; nothing is raised.
    """
    if not 0 < hoelder_exponent <= 1:
        raise ValueError("hoelder_exponent must lie in (0, 1]")
    if not 0 < corkscrew_c < 1:
        raise ValueError("corkscrew_c must lie in (0, 1)")
    K = bd.K
    rng = np.random.default_rng(seed)
    violations = []

    def cells_of(mask, limit=50):
        return [list(map(int, c)) for c in np.argwhere(mask)[:limit]]

    neg = [bd.values[i] < 0 for i in range(K)]
    nonneg = not any(m.any() for m in neg)
    for i, m in enumerate(neg):
        if m.any():
            violations.append({"assumption": "nonnegative", "population": i,
                               "cells": cells_of(m)})

    nontrivial = True
    for i in range(K):
        if not (bd.values[i] > 0).any():
            nontrivial = False
            violations.append({"assumption": "nontrivial", "population": i,
                               "cells": []})

    hoelder = np.array([_hoelder_modulus(gd, bd.values[i], hoelder_exponent, rng)
                        for i in range(K)])
    hoelder_ok = bool(np.all(np.isfinite(hoelder)))

    near = collar_adjacent(gd)
    cork = np.full(K, np.nan)
    radii = []
    r = 2 * gd.h
    while r <= gd.R * (1 + 1e-12):
        radii.append(r)
        r *= 2
    for i in range(K):
        supp = bd.values[i] > 0
        anchors = supp & near
        if not anchors.any():
            continue
        worst = 1.0
        for r in radii:
            rows, widths = _ball_rows(r / gd.h, gd.n)
            count = float(np.sum(2 * widths + 1))
            frac = kernels.ball_sum(supp.astype(float), rows, widths, anchors) / count
            low = anchors & (frac < corkscrew_c)
            if low.any():
                violations.append({"assumption": "corkscrew", "population": i,
                                   "radius": r, "cells": cells_of(low)})
            worst = min(worst, float(frac[anchors].min()))
        cork[i] = worst
    cork_ok = bool(np.all(np.nan_to_num(cork, nan=1.0) >= corkscrew_c))

    sep = np.zeros((K, K))
    sep_ok = True
    limit = gd.R - gd.h - 1e-12
    for i in range(K):
        for j in range(K):
            if i == j:
                continue
            si, sj = bd.values[i] > 0, bd.values[j] > 0
            if not si.any() or not sj.any():
                sep[i, j] = np.inf
                continue
            d = distance_field(sj, gd)
            sep[i, j] = float(d[si].min())
            if j > i and sep[i, j] < limit:
                sep_ok = False
                violations.append({"assumption": "separation", "population": i,
                                   "partner": j,
                                   "cells": cells_of(si & (d < limit))})

    flags = {"nonnegative": nonneg, "nontrivial": nontrivial,
             "hoelder": hoelder_ok, "corkscrew": cork_ok,
             "separation": sep_ok, "finite_components": True}
    return ValidationReport(flags=flags, separation=sep, hoelder_modulus=hoelder,
                            corkscrew=cork, components=bd.support_components,
                            violations=violations)
