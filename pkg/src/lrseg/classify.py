"""Angles, densities and classification of free-boundary points.

The angle at a free-boundary point ``x0`` is the (n-1)-dimensional measure of
the set of unit directions ``d`` with ``d . nu <= 0`` for every realizing
direction ``nu``, i.e. the intersection of closed half-spheres. It ranges over
``[0, n*omega_n/2]`` (``pi`` in 2D, ``2*pi`` in 3D).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, cKDTree

from .geometry import _unit, single_linkage

REGULAR = "Regular"
TYPE1 = "SingularType1"
TYPE2 = "SingularType2"
CUSP = "Cusp"
INDETERMINATE = "Indeterminate"
VERDICTS = (REGULAR, TYPE1, TYPE2, CUSP, INDETERMINATE)

CLOSED_2D = "ClosedForm2D"
LUNE = "LuneClosedForm"
MONTE_CARLO = "MonteCarlo"


def sphere_measure(n):
    """n * omega_n, the surface measure of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def half_sphere(n):
    return sphere_measure(n) / 2


def angle_tolerance(n, tol_rad=0.15):
    """Convert a tolerance in 2D radians into the angle units of dimension n."""
    return tol_rad * half_sphere(n) / math.pi


def anchor_rng(seed, key):
    """Counter-based generator for one anchor, independent of visiting order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, key])))


@dataclass(frozen=True)
class AngleEstimate:
    value: float
    stderr: float
    method: str
    samples: int
    raw: float  # before clamping


def _angle_2d(dirs):
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    off = np.angle(np.exp(1j * (phi - phi[0])))
    spread = float(off.max() - off.min())
    return max(0.0, math.pi - spread)


def _lune(u, v):
    theta = math.acos(float(np.clip(np.dot(u, v), -1.0, 1.0)))
    return 2.0 * (math.pi - theta)


def sphere_directions(rng, M, n):
    d = rng.standard_normal((M, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def angle_monte_carlo(dirs, n, M, rng):
    """Fraction of uniform unit directions in every half-sphere, times n*omega_n."""
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    ok = np.ones(M, dtype=bool)
    chunk = 200_000
    samples = []
    for s in range(0, M, chunk):
        d = sphere_directions(rng, min(chunk, M - s), n)
        samples.append(np.all(d @ dirs.T <= 0.0, axis=1))
    ok = np.concatenate(samples)
    p = float(ok.mean())
    total = sphere_measure(n)
    return p * total, math.sqrt(p * (1 - p) / M) * total


def angle_from_directions(dirs, n, M=100_000, rng=None, method="auto"):
    """Angle spanned by the intersection of half-spheres opposite to ``dirs``.

    One direction gives the half sphere exactly. In 2D the intersection of
    arcs is computed exactly for any number of directions; in 3D two
    directions use the lune area ``2(pi - theta)`` and more use Monte Carlo,
    capped by the smallest pairwise lune so that adding a direction never
    increases the estimate.
    """
    dirs = _unit(np.atleast_2d(np.asarray(dirs, dtype=float)))
    if len(dirs) == 0:
        raise ValueError("angle undefined without realizing directions")
    if n not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    half = half_sphere(n)
    if method == "auto":
        if len(dirs) == 1:
            return AngleEstimate(half, 0.0, CLOSED_2D if n == 2 else LUNE, 0, half)
        if n == 2:
            v = _angle_2d(dirs)
            return AngleEstimate(v, 0.0, CLOSED_2D, 0, v)
        if len(dirs) == 2:
            v = _lune(dirs[0], dirs[1])
            return AngleEstimate(v, 0.0, LUNE, 0, v)
    elif method != "montecarlo":
        raise ValueError(f"unknown angle method {method!r}")
    if M < 10_000:
        raise ValueError("Monte Carlo angle needs at least 10^4 samples")
    rng = rng if rng is not None else anchor_rng(0, 0)
    raw, se = angle_monte_carlo(dirs, n, M, rng)
    val = min(max(raw, 0.0), half)
    if method == "auto" and n == 3:
        cap = min(_lune(dirs[a], dirs[b]) for a in range(len(dirs))
                  for b in range(a + 1, len(dirs)))
        val = min(val, cap)
    return AngleEstimate(val, se, MONTE_CARLO, M, raw)


def angle_at(rs, n, R=None, M=100_000, rng=None):
    """Angle at the anchor of a realizing set, from its cluster directions."""
    if rs.empty or not rs.clusters:
        raise ValueError("angle undefined: realizing set is empty")
    return angle_from_directions(rs.directions, n, M=M, rng=rng)


# ----------------------------------------------------------------- density


@dataclass(frozen=True)
class DensityEstimate:
    radii: np.ndarray
    values: np.ndarray
    extrapolated: float
    slope: float
    center: np.ndarray | None = None  # anchor after projection onto the level set


def dyadic_radii(h, R):
    """2h * 2^m up to R/2 (at least one radius)."""
    out = []
    r = 2 * h
    while r <= R / 2 * (1 + 1e-9):
        out.append(r)
        r *= 2
    return np.array(out or [2 * h])


_UNIT_BALL = {}


def _unit_ball_points(n, q):
    key = (n, q)
    if key not in _UNIT_BALL:
        k = (np.arange(-q, q + 1) + 0.0) / q
        g = np.stack(np.meshgrid(*([k] * n), indexing="ij")).reshape(n, -1).T
        # half-step shift keeps points off the symmetry planes through x0
        g = g + 0.5 / q
        g = g[(g * g).sum(axis=1) <= 1.0]
        _UNIT_BALL[key] = g
    return _UNIT_BALL[key]


def level_function(field, tau, fit=2):
    """``field - tau`` with the first outside layer continued linearly.

    The limit fields vanish outside their supports, so ``field - tau`` has a
    kink at the free boundary and its multilinear interpolant bulges outward
    by a fraction of a cell on slanted facets. Each outside node touching the
    superlevel set is replaced by a least-squares linear fit of the inside
    values within ``fit`` cells, evaluated at the node, whenever that is lower
    than the original value, so the positive set never grows.
    """
    w = np.asarray(field, dtype=float) - tau
    inside = w > 0
    n = w.ndim
    layer = ndimage.binary_dilation(inside, np.ones((3,) * n, dtype=bool)) & ~inside
    nodes = np.argwhere(layer)
    if not len(nodes):
        return w
    offs = np.array(list(np.ndindex(*([2 * fit + 1] * n)))) - fit
    nb = nodes[:, None, :] + offs[None, :, :]
    valid = np.all((nb >= 0) & (nb < np.array(w.shape)), axis=2)
    nb = np.where(valid[..., None], nb, 0)
    flat = tuple(nb[..., a] for a in range(n))
    wt = (valid & inside[flat]).astype(float)
    P = np.concatenate([np.ones(offs.shape[0])[:, None], offs], axis=1).astype(float)
    A = np.einsum("km,mi,mj->kij", wt, P, P) + 1e-12 * np.eye(n + 1)
    rhs = np.einsum("km,mi,km->ki", wt, P, w[flat])
    ok = wt.sum(axis=1) >= n + 2
    coef = np.linalg.solve(A[ok], rhs[ok][..., None])[..., 0, 0]
    out = w.copy()
    sel = tuple(nodes[ok].T)
    out[sel] = np.minimum(out[sel], coef)
    return out


def _project_to_level(x0, level, gd, steps=4):
    """Newton steps onto the zero set of the interpolant; at most one cell away."""
    x = x0.copy()
    e = 1e-3 * gd.h * np.vstack([np.eye(gd.n), -np.eye(gd.n)])
    for _ in range(steps):
        pts = np.vstack([x[None], x + e])
        v = ndimage.map_coordinates(level, gd.to_grid_coords(pts).T, order=1,
                                    mode="nearest")
        g = (v[1:gd.n + 1] - v[gd.n + 1:]) / (2e-3 * gd.h)
        gg = float(g @ g)
        if gg == 0.0:
            return x0
        x = x - v[0] * g / gg
    return x if np.linalg.norm(x - x0) <= gd.h else x0


def density_at(x0, field, tau, gd, radii, points_per_radius=None, level=None):
    """Fraction of B_r(x0) inside the support, per radius, and its r -> 0 limit.

    The support is the positive set of the multilinear interpolant of
    :func:`level_function` (pass ``level`` to reuse a precomputed one). The
    ball center is ``x0`` projected onto that set's boundary. Each ball is
    integrated with a lattice of ``points_per_radius`` steps per radius (24 in
    2D, 10 in 3D, i.e. subcell for r <= 8h). The extrapolated value is a
    weighted linear fit ``d0 + a r`` over the three smallest radii with
    weights proportional to ``r/h``.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.min() < 2 * gd.h * (1 - 1e-9):
        raise ValueError("density radii must be at least 2h")
    if level is None:
        level = level_function(field, tau)
    q = points_per_radius or (24 if gd.n == 2 else 10)
    unit = _unit_ball_points(gd.n, q)
    x0 = _project_to_level(np.asarray(x0, dtype=float), level, gd)
    vals = []
    for r in radii:
        coords = gd.to_grid_coords(x0 + r * unit).T
        v = ndimage.map_coordinates(level, coords, order=1, mode="constant", cval=-1.0)
        vals.append(float(np.mean(v > 0)))
    vals = np.array(vals)
    use = np.argsort(radii)[:3]
    if len(use) == 1:
        return DensityEstimate(radii, vals, float(vals[use[0]]), 0.0, x0)
    w = radii[use] / gd.h
    slope, d0 = np.polyfit(radii[use], vals[use], 1, w=w)
    return DensityEstimate(radii, vals, float(np.clip(d0, 0.0, 1.0)), float(slope), x0)


# ----------------------------------------------------------- classification


@dataclass(frozen=True, eq=False)
class PointClassification:
    anchor: np.ndarray
    population: int
    sample_index: int
    clusters: int
    tags: frozenset
    angle: AngleEstimate
    density: DensityEstimate
    verdict: str
    flags: dict = field(default_factory=dict)
    votes: dict = field(default_factory=dict)
    defect: float = 0.0


def _vote_density(d, tol):
    if abs(d - 0.5) <= tol:
        return "regular"
    return "singular" if d < 0.5 - tol else "anomalous"


def classify_point(rs, angle, density, n, tol_angle=0.15, tol_density=0.05,
                   cusp_threshold=0.05, sample_index=-1):
    """Verdict from the realizing clusters, cross-checked by angle and density."""
    half = half_sphere(n)
    tol_a = angle_tolerance(n, tol_angle)
    k = len(rs.clusters)
    d0 = density.extrapolated
    votes = {
        "clusters": "none" if k == 0 else ("regular" if k == 1 else "singular"),
        "angle": ("regular" if abs(angle.value - half) <= tol_a else "singular")
        if angle is not None else "none",
        "density": _vote_density(d0, tol_density),
    }
    flags = {"cluster_vs_angle": votes["clusters"] == votes["angle"],
             "angle_vs_density": votes["angle"] == votes["density"]}
    tags = rs.populations
    if k == 0:
        verdict = INDETERMINATE
    elif k == 1:
        ok = votes["angle"] == "regular" and votes["density"] == "regular"
        verdict = REGULAR if ok else INDETERMINATE
    else:
        ok = votes["angle"] == "singular" and votes["density"] == "singular"
        if not ok:
            verdict = INDETERMINATE
        elif d0 <= cusp_threshold:
            verdict = CUSP
        elif len(tags) >= 2:
            verdict = TYPE1
        else:
            verdict = TYPE2
    return PointClassification(anchor=rs.anchor, population=rs.population,
                               sample_index=sample_index, clusters=k,
                               tags=frozenset(tags), angle=angle, density=density,
                               verdict=verdict, flags=flags, votes=votes,
                               defect=rs.distance_defect())


def singular_neighborhoods(classes, link):
    """Group non-regular samples of each population by single linkage.

    Returns a list of dicts with the population, member indices into
    ``classes`` and the representative: the member whose realizing distances
    are closest to R (smallest distance defect).
    """
    out = []
    pops = sorted({c.population for c in classes})
    for p in pops:
        idx = [k for k, c in enumerate(classes)
               if c.population == p and c.verdict not in (REGULAR, INDETERMINATE)]
        if not idx:
            continue
        pts = np.array([classes[k].anchor for k in idx])
        labels = single_linkage(pts, link)
        for lab in range(labels.max() + 1):
            mem = [idx[t] for t in np.flatnonzero(labels == lab)]
            rep = min(mem, key=lambda k: (classes[k].defect, k))
            out.append({"population": p, "members": mem, "representative": rep})
    return out


# ------------------------------------------------------------------- cones


@dataclass(frozen=True)
class Cone2D:
    vertex: np.ndarray
    axis: np.ndarray
    opening: float


def _spread_2d(dirs):
    phi = np.sort(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * np.pi))
    gaps = np.diff(np.concatenate([phi, [phi[0] + 2 * np.pi]]))
    g = int(np.argmax(gaps))
    start = phi[(g + 1) % len(phi)]
    spread = 2 * np.pi - float(gaps[g])
    return start, spread


def asymptotic_cone_2d(rs, use_members=False):
    """Cone of points p with (p - x0).nu <= 0 for the realizing directions.

    By default the cluster directions are used; ``use_members`` takes every
    raw member instead, which widens the spread by the arc widths.
    """
    if rs.empty:
        raise ValueError("realizing set is empty")
    if use_members:
        dirs = _unit(rs.members - rs.anchor)
    else:
        dirs = rs.directions
    if dirs.shape[1] != 2:
        raise ValueError("asymptotic_cone_2d needs n = 2")
    return cone_from_directions(rs.anchor, dirs)


def cone_from_directions(vertex, dirs):
    dirs = _unit(np.atleast_2d(np.asarray(dirs, dtype=float)))
    start, spread = _spread_2d(dirs)
    mid = start + spread / 2
    axis = -np.array([math.cos(mid), math.sin(mid)])
    opening = min(max(math.pi - spread, 0.0), math.pi)
    return Cone2D(vertex=np.asarray(vertex, dtype=float), axis=axis, opening=opening)


def _cone_angle(p, cone):
    v = p - cone.vertex
    r = np.linalg.norm(v, axis=1)
    c = (v @ cone.axis) / np.where(r > 0, r, 1.0)
    return r, np.arccos(np.clip(c, -1.0, 1.0))


def cone_sandwich_check(x0, cone, support, gd, margin, r_max, slack=None):
    """Inner cone inside the support, support inside the outer cone, near x0.

    Support cells and free-boundary samples within ``r_max`` must lie within
    ``slack`` (default h) of the cone with opening ``opening + margin``; omega
    cells within ``r_max`` that sit deeper than ``slack`` inside the cone with
    opening ``opening - margin`` must belong to the support. Returns
    ``(passed, witness)``.
    """
    slack = gd.h if slack is None else slack
    x0 = np.asarray(x0, dtype=float)
    cone = Cone2D(vertex=x0, axis=cone.axis, opening=cone.opening)
    a_out = min((cone.opening + margin) / 2, math.pi)
    a_in = (cone.opening - margin) / 2

    lo = np.maximum(np.floor((x0 - r_max - gd.origin) / gd.h).astype(int) - 1, 0)
    hi = np.minimum(np.ceil((x0 + r_max - gd.origin) / gd.h).astype(int) + 1,
                    np.asarray(gd.shape))
    win = tuple(slice(a, b) for a, b in zip(lo, hi))
    idx = np.argwhere(np.ones(hi - lo, dtype=bool))
    pts = gd.origin + (idx + lo + 0.5) * gd.h
    inside = support.indicator[win].ravel()
    omega = gd.omega_mask[win].ravel()
    near = np.linalg.norm(pts - x0, axis=1) <= r_max

    cand = np.concatenate([pts[near & inside],
                           support.samples[np.linalg.norm(support.samples - x0,
                                                          axis=1) <= r_max]])
    r, phi = _cone_angle(cand, cone)
    excess = phi - a_out
    dist_out = np.where(excess <= 0, 0.0,
                        np.where(excess >= np.pi / 2, r, r * np.sin(np.minimum(excess, np.pi / 2))))
    bad = np.flatnonzero(dist_out > slack)
    if len(bad):
        k = bad[np.argmin(r[bad])]
        return False, {"kind": "outside_outer_cone", "point": cand[k].tolist()}

    if a_in > 0:
        sel = near & omega & ~inside
        p = pts[sel]
        r, phi = _cone_angle(p, cone)
        room = a_in - phi
        depth = np.where(room <= 0, 0.0,
                         np.where(room >= np.pi / 2, r, r * np.sin(np.minimum(room, np.pi / 2))))
        bad = np.flatnonzero(depth > slack)
        if len(bad):
            k = bad[np.argmin(r[bad])]
            return False, {"kind": "inner_cone_gap", "point": p[k].tolist()}
    return True, None


# ------------------------------------------------------ convex configurations


def convexity_check(support, gd):
    """Are all free-boundary samples within h*sqrt(n) of the hull boundary?"""
    idx = np.argwhere(support.indicator)
    if len(idx) <= gd.n or not len(support.samples):
        return True, 0.0
    pts = gd.origin + (idx + 0.5) * gd.h
    hull = ConvexHull(pts)
    eq = hull.equations  # a.x + b <= 0 inside
    depth = -(support.samples @ eq[:, :-1].T + eq[:, -1])
    d = float(np.clip(depth.min(axis=1), 0.0, None).max())
    return d <= gd.h * math.sqrt(gd.n), d


def facet_groups(classes, rsets, tol=0.1):
    """Greedy grouping of regular samples by realizing direction (< tol rad)."""
    groups = []  # [population, mean direction, member indices]
    for k, c in enumerate(classes):
        if c.verdict != REGULAR:
            continue
        d = rsets[k].clusters[0].direction
        for g in groups:
            if g[0] == c.population and math.acos(float(np.clip(d @ _unit(g[1]), -1, 1))) < tol:
                g[1] = g[1] + d
                g[2].append(k)
                break
        else:
            groups.append([c.population, d.copy(), [k]])
    return [(p, _unit(v), m) for p, v, m in groups]


def _plane_fit(points):
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    normal = vt[-1]
    return normal, float(np.abs((points - c) @ normal).max())


def convex_structure_report(supports, classes, rsets, gd, tol_angle=0.15,
                            facet_tol=0.1, pairing_min=0.95, min_facet=5):
    """Facet flatness, type-1 angle bound and regular/singular pairing.

    Groups with fewer than ``min_facet`` samples are reported but not counted
    as facets.
    """
    n = gd.n
    convex = {}
    for s in supports:
        ok, depth = convexity_check(s, gd)
        convex[s.population] = {"convex": bool(ok), "max_depth": depth}

    facets = []
    for p, normal_dir, mem in facet_groups(classes, rsets, facet_tol):
        pts = np.array([classes[k].anchor for k in mem])
        if len(mem) >= n:
            normal, dev = _plane_fit(pts)
        else:
            normal, dev = normal_dir, 0.0
        facets.append({"population": p, "direction": normal_dir.tolist(),
                       "samples": len(mem), "max_deviation": dev,
                       "counted": len(mem) >= min_facet,
                       "passed": dev <= 2 * gd.h})
    facet_ok = all(f["passed"] for f in facets if f["counted"])

    bound = sphere_measure(n) / 3 + angle_tolerance(n, tol_angle)
    t1 = [c for c in classes if c.verdict == TYPE1]
    over = [c for c in t1 if c.angle.value > bound]
    type1_ok = not over

    # pairing: partner of each realizing point must share the verdict class
    trees, owners = {}, {}
    for k, c in enumerate(classes):
        owners.setdefault(c.population, []).append(k)
    for p, ks in owners.items():
        trees[p] = cKDTree(np.array([classes[k].anchor for k in ks]))
    checked = agree = 0
    for k, c in enumerate(classes):
        if c.verdict == INDETERMINATE:
            continue
        for cl in rsets[k].clusters:
            for q in sorted(cl.populations):
                if q not in trees:
                    continue
                _, t = trees[q].query(cl.nearest)
                partner = classes[owners[q][t]]
                if partner.verdict == INDETERMINATE:
                    continue
                checked += 1
                agree += (partner.verdict == REGULAR) == (c.verdict == REGULAR)
    frac = agree / checked if checked else 1.0
    pairing_ok = frac >= pairing_min

    counted = {}
    for f in facets:
        if f["counted"]:
            counted[f["population"]] = counted.get(f["population"], 0) + 1
    return {
        "precondition": convex,
        "precondition_passed": all(v["convex"] for v in convex.values()),
        "facets": facets,
        "facets_per_population": counted,
        "facet_flatness_passed": facet_ok,
        "type1_bound": bound,
        "type1_max_angle": max((c.angle.value for c in t1), default=None),
        "type1_bound_passed": type1_ok,
        "pairing_checked": checked,
        "pairing_agreement": frac,
        "pairing_passed": pairing_ok,
    }


def reflect(x, x0, y0):
    """Reflection across the hyperplane bisecting the segment x0-y0."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    d = y0 - x0
    dd = float(d @ d)
    if dd == 0.0:
        raise ValueError("reflection undefined for coincident points")
    z0 = 0.5 * (x0 + y0)
    t = ((z0 - x) @ d) / dd
    return x + 2.0 * np.multiply.outer(t, d)


def _contact(si, sj, R, delta):
    if si.tree is None or sj.tree is None:
        return np.zeros((0, si.samples.shape[1] if si.samples.ndim == 2 else 2)), None
    d, nearest = sj.tree.query(si.samples)
    sel = np.abs(d - R) <= delta
    return si.samples[sel], sj.samples[nearest[sel]]


def _measure(points, n):
    if len(points) == 0:
        return 0.0
    if len(points) == 1:
        return 0.0
    d, _ = cKDTree(points).query(points, k=2)
    s = float(np.median(d[:, 1]))
    return len(points) * s ** (n - 1)


def contact_set_symmetry(supports, i, j, R, delta, gd):
    """Measures of the contact sets D_i, D_j and overlap of T(D_i) with D_j."""
    si, sj = supports[i], supports[j]
    Di, Pi = _contact(si, sj, R, delta)
    Dj, _ = _contact(sj, si, R, delta)
    mi, mj = _measure(Di, gd.n), _measure(Dj, gd.n)
    out = {"measure_i": mi, "measure_j": mj, "count_i": len(Di), "count_j": len(Dj)}
    if len(Di) == 0 or len(Dj) == 0:
        out.update(ratio=1.0 if mi == mj else float("inf"),
                   overlap=1.0 if len(Di) == len(Dj) else 0.0)
        return out
    x0, y0 = Di.mean(axis=0), Pi.mean(axis=0)
    mapped = reflect(Di, x0, y0)
    dist, _ = cKDTree(Dj).query(mapped)
    out.update(ratio=mi / mj if mj > 0 else float("inf"),
               overlap=float(np.mean(dist <= 2 * gd.h)),
               reflection=(x0.tolist(), y0.tolist()))
    return out


def structure_summary(classes, n):
    """Verdict counts, singular angle gap, sampled openness and cusp fraction."""
    pops = sorted({c.population for c in classes})
    counts = {p: {v: 0 for v in VERDICTS} for p in pops}
    for c in classes:
        counts[c.population][c.verdict] += 1
    sing = [c.angle.value for c in classes if c.verdict in (TYPE1, TYPE2, CUSP)]
    sup = max(sing) if sing else None
    gap = half_sphere(n) - sup if sup is not None else None
    openness = None
    reg = [c for c in classes if c.verdict == REGULAR]
    non = [c for c in classes if c.verdict != REGULAR]
    if reg and non:
        best = np.inf
        for p in pops:
            a = np.array([c.anchor for c in reg if c.population == p])
            b = np.array([c.anchor for c in non if c.population == p])
            if len(a) and len(b):
                d, _ = cKDTree(b).query(a)
                best = min(best, float(d.min()))
        openness = None if not np.isfinite(best) else best
    total = len(classes)
    cusps = sum(1 for c in classes if c.verdict == CUSP)
    return {
        "counts": counts,
        "total": total,
        "regular_fraction": len(reg) / total if total else None,
        "singular_angle_sup": sup,
        "singular_angle_gap": gap,
        "min_regular_to_nonregular": openness,
        "cusp_fraction": cusps / total if total else 0.0,
    }


def verdict_agreement(classes):
    """Fraction of samples whose cluster, angle and density votes coincide."""
    if not classes:
        return 1.0
    same = sum(1 for c in classes
               if c.votes["clusters"] == c.votes["angle"] == c.votes["density"])
    return same / len(classes)
