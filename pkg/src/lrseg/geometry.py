"""Supports, free-boundary samples, separations and realizing points.

The support of population ``i`` is the superlevel set ``{u_i > tau}`` inside
omega. Free-boundary samples are the points where ``u_i - tau`` changes sign
along an edge between two face-adjacent omega cells, located by linear
interpolation.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .domain import distance_field


class DegenerateSupportWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SupportSet:
    population: int
    tau: float
    indicator: np.ndarray        # bool, {u_i > tau} within omega
    signed_distance: np.ndarray  # negative inside the indicator
    samples: np.ndarray          # (m, n) free-boundary points

    @property
    def empty(self):
        return not self.indicator.any()

    @cached_property
    def tree(self):
        return cKDTree(self.samples) if len(self.samples) else None


def default_tau(pf, rel):
    return rel * float(np.max(pf.u))


def boundary_samples(u, tau, gd, within=None):
    """Edge-interpolated crossings of ``u = tau`` between omega cells.

    Returns an ``(m, n)`` array of points sorted in a deterministic order.
    """
    om = gd.omega_mask if within is None else within
    pts = []
    for ax in range(gd.n):
        lo = [slice(None)] * gd.n
        hi = [slice(None)] * gd.n
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        a, b = u[tuple(lo)], u[tuple(hi)]
        both = om[tuple(lo)] & om[tuple(hi)]
        cross = both & ((a > tau) != (b > tau))
        idx = np.argwhere(cross)
        if not len(idx):
            continue
        ua, ub = a[cross], b[cross]
        t = (tau - ua) / (ub - ua)
        p = idx.astype(float)
        p[:, ax] += t
        pts.append(gd.origin + (p + 0.5) * gd.h)
    if not pts:
        return np.zeros((0, gd.n))
    out = np.concatenate(pts)
    order = np.lexsort(out.T[::-1])
    return out[order]


def _signed_distance(ind, gd):
    if not ind.any():
        return np.full(gd.shape, np.inf)
    outside = distance_field(ind, gd)
    if ind.all():
        return -np.full(gd.shape, np.inf)
    inside = distance_field(~ind, gd)
    return np.where(ind, -inside, outside)


def support_from_field(u, i, tau, gd):
    ind = (u > tau) & gd.omega_mask
    if not ind.any():
        warnings.warn(f"population {i}: support is empty at tau={tau:g}",
                      DegenerateSupportWarning, stacklevel=3)
    ind.setflags(write=False)
    return SupportSet(population=i, tau=float(tau), indicator=ind,
                      signed_distance=_signed_distance(ind, gd),
                      samples=boundary_samples(u, tau, gd))


def extract_supports(pf, gd, tau):
    """One :class:`SupportSet` per population at absolute threshold ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return [support_from_field(pf.u[i], i, tau, gd) for i in range(pf.K)]


def pairwise_separation(supports):
    """Symmetric matrix of sample-set distances; NaN where a support is empty."""
    K = len(supports)
    out = np.full((K, K), np.nan)
    for i in range(K):
        if supports[i].tree is not None:
            out[i, i] = 0.0
        for j in range(i + 1, K):
            a, b = supports[i], supports[j]
            if a.tree is None or b.tree is None:
                continue
            if len(a.samples) > len(b.samples):
                a, b = b, a
            d, _ = b.tree.query(a.samples)
            out[i, j] = out[j, i] = float(d.min())
    return out


# ------------------------------------------------------------ realizing points


@dataclass(frozen=True, eq=False)
class Cluster:
    members: np.ndarray           # indices into RealizingSet.members
    direction: np.ndarray         # unit vector toward the nearest members
    centroid_direction: np.ndarray
    populations: frozenset
    min_distance: float
    arc_width: float              # max angle between member directions (rad)
    nearest: np.ndarray           # nearest member point


@dataclass(frozen=True, eq=False)
class RealizingSet:
    anchor: np.ndarray
    population: int
    R: float
    delta: float
    rho: float
    members: np.ndarray           # (m, n)
    member_population: np.ndarray
    clusters: list = field(default_factory=list)

    @property
    def empty(self):
        return len(self.members) == 0

    @property
    def directions(self):
        return np.array([c.direction for c in self.clusters])

    @property
    def populations(self):
        out = set()
        for c in self.clusters:
            out |= c.populations
        return out

    def distance_defect(self):
        """max over clusters of |nearest distance - R|."""
        if not self.clusters:
            return np.inf
        return max(abs(c.min_distance - self.R) for c in self.clusters)


def _unit(v):
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(nrm > 0, nrm, 1.0)


def single_linkage(points, rho):
    """Component labels of the graph joining points closer than ``rho``."""
    m = len(points)
    if m == 0:
        return np.zeros(0, dtype=int)
    pairs = cKDTree(points).query_pairs(rho, output_type="ndarray")
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                   shape=(m, m)) if len(pairs) else coo_matrix((m, m))
    _, labels = connected_components(g, directed=False)
    # relabel by first appearance so labels are order-stable
    _, first = np.unique(labels, return_index=True)
    remap = np.empty(labels.max() + 1, dtype=int)
    remap[labels[np.sort(first)]] = np.arange(len(first))
    return remap[labels]


def cluster_members(anchor, members, member_pop, rho, nearest_slack):
    if not len(members):
        return []
    labels = single_linkage(members, rho)
    dvec = members - anchor
    dist = np.linalg.norm(dvec, axis=1)
    dirs = _unit(dvec)
    out = []
    for lab in range(labels.max() + 1):
        sel = np.flatnonzero(labels == lab)
        dmin = float(dist[sel].min())
        near = sel[dist[sel] <= dmin + nearest_slack]
        cosines = np.clip(dirs[sel] @ dirs[sel].T, -1.0, 1.0)
        out.append(Cluster(
            members=sel,
            direction=_unit(dirs[near].mean(axis=0)),
            centroid_direction=_unit(dirs[sel].mean(axis=0)),
            populations=frozenset(int(p) for p in member_pop[sel]),
            min_distance=dmin,
            arc_width=float(np.arccos(cosines.min())),
            nearest=members[sel[np.argmin(dist[sel])]],
        ))
    return out


def realizing_points(x0, supports, R, delta, rho, population, nearest_slack=0.0):
    """Free-boundary samples of the competitors at distance R +- delta from x0.

    Members are clustered by single linkage at ``rho``. Each cluster's
    direction averages the members within ``nearest_slack`` of the cluster's
    minimum distance (default 0, the closest member alone); the plain
    centroid direction is kept alongside.
    """
    x0 = np.asarray(x0, dtype=float)
    pts, tags = [], []
    for s in supports:
        if s.population == population or s.tree is None:
            continue
        idx = s.tree.query_ball_point(x0, R + delta)
        if not idx:
            continue
        cand = s.samples[np.sort(idx)]
        d = np.linalg.norm(cand - x0, axis=1)
        keep = (d >= R - delta) & (d <= R + delta)
        pts.append(cand[keep])
        tags.append(np.full(int(keep.sum()), s.population))
    n = x0.size
    members = np.concatenate(pts) if pts else np.zeros((0, n))
    member_pop = np.concatenate(tags) if tags else np.zeros(0, dtype=int)
    clusters = cluster_members(x0, members, member_pop, rho, nearest_slack)
    return RealizingSet(anchor=x0, population=population, R=R, delta=delta,
                        rho=rho, members=members, member_population=member_pop,
                        clusters=clusters)


def exterior_ball_check(x0, direction, support, R, gd):
    """Check that the support avoids the ball of radius R tangent at x0.

    The ball is centered at ``y = x0 + R * direction``. Returns ``(ok, depth)``
    where depth is how far the deepest support cell center reaches inside the
    ball (0 if none); ok means depth <= h.
    """
    y = np.asarray(x0, dtype=float) + R * _unit(np.asarray(direction, dtype=float))
    return ball_intrusion(y, support, R, gd)


def ball_intrusion(y, support, R, gd):
    y = np.asarray(y, dtype=float)
    lo = np.maximum(np.floor((y - R - gd.origin) / gd.h).astype(int) - 1, 0)
    hi = np.minimum(np.ceil((y + R - gd.origin) / gd.h).astype(int) + 1,
                    np.asarray(gd.shape))
    win = tuple(slice(a, b) for a, b in zip(lo, hi))
    idx = np.argwhere(support.indicator[win])
    if not len(idx):
        return True, 0.0
    pts = gd.origin + (idx + lo + 0.5) * gd.h
    dmin = float(np.linalg.norm(pts - y, axis=1).min())
    depth = max(0.0, R - dmin)
    return depth <= gd.h, depth


def threshold_stability(pf, gd, tau_lo, tau_hi, limit=None):
    """Largest displacement of free-boundary samples between two thresholds.

    Returns per-population symmetric (Hausdorff) distances between the sample
    sets at ``tau_lo`` and ``tau_hi``, and the samples moving more than
    ``limit`` (default 2h).
    """
    limit = 2 * gd.h if limit is None else limit
    moves, bad = [], []
    for i in range(pf.K):
        a = boundary_samples(pf.u[i], tau_lo, gd)
        b = boundary_samples(pf.u[i], tau_hi, gd)
        if not len(a) or not len(b):
            moves.append(float("nan"))
            continue
        da, _ = cKDTree(b).query(a)
        db, _ = cKDTree(a).query(b)
        moves.append(float(max(da.max(), db.max())))
        for p in np.concatenate([a[da > limit], b[db > limit]]):
            bad.append((i, p))
    return np.array(moves), bad
