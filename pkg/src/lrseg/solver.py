"""Fixed-epsilon solves of the segregation system and epsilon continuation.

The discrete problem for populations ``u_1..u_K`` on the omega cells is::

    Lap_h u_i = eps**-2 * u_i * sum_{j != i} H(u_j),   u_i = f_i on the collar

Two drivers are provided. ``relax`` is damped frozen-coefficient pointwise
relaxation, Gauss-Seidel over populations. ``newton`` is a projected
Jacobian-free Newton-Krylov iteration whose GMRES solves are preconditioned by
the per-population diagonal blocks. Relaxation is exact and simple but its
convergence collapses once eps is small, so continuation runs use Newton.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .domain import distance_field
from .interaction import apply_h_field

log = logging.getLogger(__name__)

SWEEPS = ("jacobi", "redblack")
METHODS = ("newton", "relax")
BLOCK_SOLVERS = ("auto", "direct", "cg")


class NonconvergenceError(RuntimeError):
    def __init__(self, message, residual, epsilon, iterations):
        super().__init__(message)
        self.residual = residual
        self.epsilon = epsilon
        self.iterations = iterations


class NonFiniteError(FloatingPointError):
    pass


@dataclass(frozen=True, eq=False)
class PopulationFields:
    u: np.ndarray  # (K, *shape); collar cells hold f_i, other exterior cells 0
    epsilon: float
    residual: float = float("inf")
    iterations: int = 0

    @property
    def K(self):
        return self.u.shape[0]


@dataclass(frozen=True)
class SolverParams:
    tolerance: float = 1e-6
    max_iterations: int = 50
    damping: float = 0.8
    sweep: str = "jacobi"
    method: str = "newton"
    block_solver: str = "auto"
    gmres_rtol: float = 1e-3

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.block_solver not in BLOCK_SOLVERS:
            raise ValueError(f"block_solver must be one of {BLOCK_SOLVERS}")


@dataclass
class EpsSchedule:
    eps_start: float
    eps_factor: float = 0.5
    eps_min: float = 0.0
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.eps_factor < 1:
            raise ValueError("eps_factor must lie in (0, 1)")
        if not 0 < self.eps_min <= self.eps_start:
            raise ValueError("need 0 < eps_min <= eps_start")

    def levels(self):
        out = []
        eps = self.eps_start
        while eps > self.eps_min * (1 + 1e-9):
            out.append(eps)
            eps *= self.eps_factor
        out.append(self.eps_min)
        return out


# ------------------------------------------------------------------ basics


def initial_fields(gd, bd, eps):
    """Collar pinned to the boundary data, zero elsewhere."""
    u = np.array(bd.values, dtype=float)
    return PopulationFields(u=u, epsilon=float(eps))


def interaction_coefficients(u, gd, st, eps):
    """c_i = eps**-2 * sum_{j != i} H(u_j), evaluated on omega cells."""
    H = np.stack([apply_h_field(ui, st, gd.omega_mask) for ui in u])
    tot = H.sum(axis=0)
    return (tot[None] - H) / eps ** 2, H


def residual(pf, gd, st):
    """Max over populations and omega cells of |Lap_h u_i - eps^-2 u_i sum H(u_j)|."""
    h2 = gd.h * gd.h
    c, _ = interaction_coefficients(pf.u, gd, st, pf.epsilon)
    worst = 0.0
    for i in range(pf.K):
        r = kernels.laplacian(pf.u[i], h2) - c[i] * pf.u[i]
        worst = max(worst, float(np.abs(r[gd.omega_mask]).max()))
    return worst


def _check_finite(u):
    if not np.all(np.isfinite(u)):
        raise NonFiniteError("non-finite value produced by the update")


def relax_step(pf, gd, st, params):
    """One frozen-coefficient sweep per population, Gauss-Seidel over populations."""
    h2 = gd.h * gd.h
    u = pf.u.copy()
    K = u.shape[0]
    step = kernels.relax_redblack if params.sweep == "redblack" else kernels.relax_jacobi
    H = [apply_h_field(u[j], st, gd.omega_mask) for j in range(K)]
    for i in range(K):
        c = np.zeros(gd.shape)
        for j in range(K):
            if j != i:
                c += H[j]
        c /= pf.epsilon ** 2
        u[i] = step(u[i], c, gd.omega_mask, h2, params.damping)
        _check_finite(u[i])
        H[i] = apply_h_field(u[i], st, gd.omega_mask)
    return PopulationFields(u=u, epsilon=pf.epsilon, residual=pf.residual,
                            iterations=pf.iterations + 1)


# ------------------------------------------------------------------ newton


class _System:
    """Omega-cell indexing, Laplacian blocks and boundary terms for one problem."""

    def __init__(self, gd, bd, st):
        self.gd, self.st = gd, st
        self.K = bd.K
        om = gd.omega_mask
        self.idx = np.flatnonzero(om.ravel())
        self.N = self.idx.size
        size = om.size
        pos = -np.ones(size, dtype=np.int64)
        pos[self.idx] = np.arange(self.N)
        lin = np.arange(size).reshape(gd.shape)
        nbrs = []
        for ax in range(gd.n):
            for s in (1, -1):
                nbrs.append(np.roll(lin, -s, axis=ax).ravel()[self.idx])
        nbrs = np.array(nbrs)
        inner = pos[nbrs] >= 0
        rows = np.broadcast_to(np.arange(self.N), nbrs.shape)[inner]
        self.off = sp.csr_matrix((-np.ones(rows.size), (rows, pos[nbrs][inner])),
                                 shape=(self.N, self.N))
        self.diag0 = 2.0 * gd.n
        # Dirichlet contribution of collar (and other exterior) neighbours
        self.bvec = [np.where(inner, 0.0, bd.values[i].ravel()[nbrs]).sum(axis=0)
                     for i in range(self.K)]
        self.f = np.asarray(bd.values)
        self.h2 = gd.h * gd.h

    def full(self, i, vi):
        u = self.f[i].copy().ravel()
        u[self.idx] = vi
        return u.reshape(self.gd.shape)

    def zero_ext(self, wi):
        u = np.zeros(self.gd.omega_mask.size)
        u[self.idx] = wi
        return u.reshape(self.gd.shape)

    def split(self, v):
        return [v[i * self.N:(i + 1) * self.N] for i in range(self.K)]

    def pack(self, u):
        return np.concatenate([u[i].ravel()[self.idx] for i in range(self.K)])

    def unpack(self, v):
        return np.stack([self.full(i, vi) for i, vi in enumerate(self.split(v))])

    def hvals(self, u):
        om = self.gd.omega_mask
        return [apply_h_field(u[i], self.st, om).ravel()[self.idx]
                for i in range(self.K)]

    def F(self, v, eps):
        """Scaled residual h^2 (-Lap u + c u) on omega, plus H values."""
        vs = self.split(v)
        Hs = self.hvals(self.unpack(v))
        tot = sum(Hs)
        out = []
        k = self.h2 / eps ** 2
        for i in range(self.K):
            ci = (tot - Hs[i]) * k
            out.append(self.diag0 * vs[i] + self.off @ vs[i] + ci * vs[i]
                       - self.bvec[i])
        return np.concatenate(out), Hs


def _block_solver(A, kind, n):
    if kind == "auto":
        kind = "direct" if n == 2 else "cg"
    if kind == "direct":
        lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A")
        return lu.solve
    dinv = sp.diags(1.0 / A.diagonal())

    def solve(b):
        x, _ = spla.cg(A, b, rtol=1e-10, atol=0.0, M=dinv, maxiter=4000)
        return x
    return solve


def _newton(pf, gd, bd, st, params, sysm):
    eps = pf.epsilon
    v = sysm.pack(pf.u)
    h2 = sysm.h2
    K, N = sysm.K, sysm.N
    for it in range(params.max_iterations + 1):
        Fv, Hs = sysm.F(v, eps)
        res = float(np.abs(Fv).max()) / h2
        _check_finite(Fv)
        log.debug("newton eps=%.3e it=%d residual=%.3e", eps, it, res)
        if res <= params.tolerance:
            return v, it, res
        if it == params.max_iterations:
            break
        vs = sysm.split(v)
        tot = sum(Hs)
        k = h2 / eps ** 2
        cs = [(tot - Hs[i]) * k for i in range(K)]
        solves = [_block_solver(sysm.off + sp.diags(sysm.diag0 + cs[i]),
                                params.block_solver, gd.n) for i in range(K)]
        us = sysm.unpack(v)
        om = gd.omega_mask

        def jvp(w):
            ws = sysm.split(w)
            if st.kind == "average":
                dH = [apply_h_field(sysm.zero_ext(ws[i]), st, om).ravel()[sysm.idx]
                      for i in range(K)]
            else:
                dH = []
                for i in range(K):
                    wmax = float(np.abs(ws[i]).max())
                    if wmax == 0.0:
                        dH.append(np.zeros(N))
                        continue
                    s = 1e-7 * max(1.0, float(np.abs(vs[i]).max())) / wmax
                    up = us[i] + s * sysm.zero_ext(ws[i])
                    dH.append((apply_h_field(up, st, om).ravel()[sysm.idx]
                               - Hs[i]) / s)
            td = sum(dH)
            out = []
            for i in range(K):
                out.append(sysm.diag0 * ws[i] + sysm.off @ ws[i] + cs[i] * ws[i]
                           + vs[i] * (td - dH[i]) * k)
            return np.concatenate(out)

        J = spla.LinearOperator((K * N, K * N), matvec=jvp)
        M = spla.LinearOperator(
            (K * N, K * N),
            matvec=lambda w: np.concatenate([solves[i](x) for i, x in
                                             enumerate(sysm.split(w))]))
        dv, _ = spla.gmres(J, -Fv, M=M, rtol=params.gmres_rtol, atol=0.0,
                           restart=60, maxiter=5)
        nF = float(np.linalg.norm(Fv))
        alpha = 1.0
        while True:
            trial = np.maximum(v + alpha * dv, 0.0)
            if (np.linalg.norm(sysm.F(trial, eps)[0]) < (1 - 1e-4 * alpha) * nF
                    or alpha < 1e-4):
                break
            alpha *= 0.5
        v = trial
    raise NonconvergenceError(
        f"newton did not reach tolerance {params.tolerance:g} at eps={eps:g} "
        f"(residual {res:.3e})", res, eps, params.max_iterations)


def solve_at_eps(gd, bd, st, eps, params, warm_start=None, _system=None):
    """Solve the fixed-eps system to ``params.tolerance``.

    Raises
    ------
    NonconvergenceError
        When ``params.max_iterations`` is exhausted.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if warm_start is None:
        pf = initial_fields(gd, bd, eps)
    else:
        u = np.array(warm_start.u, dtype=float)
        u[:, gd.collar_mask] = np.asarray(bd.values)[:, gd.collar_mask]
        pf = PopulationFields(u=u, epsilon=float(eps))

    if params.method == "newton":
        sysm = _system or _System(gd, bd, st)
        v, its, _ = _newton(pf, gd, bd, st, params, sysm)
        u = sysm.unpack(v)
    else:
        its = 0
        while True:
            r = residual(pf, gd, st)
            if r <= params.tolerance:
                break
            if its == params.max_iterations:
                raise NonconvergenceError(
                    f"relaxation did not reach tolerance {params.tolerance:g} "
                    f"at eps={eps:g} (residual {r:.3e})", r, eps, its)
            pf = relax_step(pf, gd, st, params)
            its += 1
        u = pf.u
    u.setflags(write=False)
    out = PopulationFields(u=u, epsilon=float(eps), iterations=its)
    return replace(out, residual=residual(out, gd, st))


# ------------------------------------------------------------ continuation


def support_diagnostics(u, gd, tau):
    """Overlap measure and pairwise distances of the tau-superlevel sets."""
    K = u.shape[0]
    cell = gd.h ** gd.n
    sets = [(u[i] > tau) & gd.omega_mask for i in range(K)]
    overlap = 0.0
    for i in range(K):
        for j in range(i + 1, K):
            overlap += float(np.count_nonzero(sets[i] & sets[j])) * cell
    dist = np.full((K, K), np.nan)
    for j in range(K):
        if not sets[j].any():
            continue
        d = distance_field(sets[j], gd)
        for i in range(K):
            if i != j and sets[i].any():
                dist[i, j] = float(d[sets[i]].min())
    np.fill_diagonal(dist, 0.0)
    dist = np.fmin(dist, dist.T)
    return overlap, dist


def run_continuation(gd, bd, st, schedule, params, tau_rel=1e-2, progress=None):
    """Warm-started solves along the eps schedule.

    Per-level diagnostics are appended to ``schedule.diagnostics`` and also
    returned. ``tau_rel`` scales the threshold used for the overlap and
    distance diagnostics by the current field maximum.
    """
    sysm = _System(gd, bd, st) if params.method == "newton" else None
    pf = None
    schedule.diagnostics.clear()
    for eps in schedule.levels():
        t0 = time.perf_counter()
        try:
            pf = solve_at_eps(gd, bd, st, eps, params, warm_start=pf, _system=sysm)
        except NonconvergenceError as exc:
            exc.args = (f"{exc.args[0]} during continuation",)
            raise
        tau = tau_rel * float(pf.u.max())
        overlap, dist = support_diagnostics(pf.u, gd, tau)
        off = dist[~np.eye(pf.K, dtype=bool)] if pf.K > 1 else np.array([])
        off = off[np.isfinite(off)]
        rec = {"eps": eps, "residual": pf.residual, "iterations": pf.iterations,
               "overlap": overlap,
               "min_distance": float(off.min()) if off.size else float("nan"),
               "distances": dist, "seconds": time.perf_counter() - t0}
        schedule.diagnostics.append(rec)
        log.info("eps=%.3e residual=%.2e its=%d overlap=%.3e dist=%.4f (%.1fs)",
                 eps, pf.residual, pf.iterations, overlap, rec["min_distance"],
                 rec["seconds"])
        if progress is not None:
            progress(rec)
    return pf, schedule.diagnostics


# ------------------------------------------------------------ diagnostics


def interaction_decay(pf, gd, st):
    """max over omega of u_i * sum_{j != i} H(u_j), relative to (max u)^2."""
    _, H = interaction_coefficients(pf.u, gd, st, 1.0)
    tot = H.sum(axis=0)
    prod = max(float((pf.u[i] * (tot - H[i]))[gd.omega_mask].max())
               for i in range(pf.K))
    scale = float(pf.u.max()) ** 2
    return prod, prod / scale if scale > 0 else 0.0


def harmonicity(pf, gd, tau):
    """Max |Lap_h u_i| on {u_i > tau} cells more than 2h inside that set."""
    h2 = gd.h * gd.h
    worst = 0.0
    for i in range(pf.K):
        pos = pf.u[i] > tau
        if not pos.any() or pos.all():
            continue
        depth = distance_field(~pos, gd)
        core = pos & gd.omega_mask & (depth > 2 * gd.h)
        if core.any():
            lap = kernels.laplacian(pf.u[i], h2)
            worst = max(worst, float(np.abs(lap[core]).max()))
    return worst
