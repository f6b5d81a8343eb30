"""Per-sample analysis of a solved configuration."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import (INDETERMINATE, AngleEstimate, PointClassification,
                       anchor_rng, angle_at, classify_point, density_at,
                       dyadic_radii, level_function, singular_neighborhoods)
from .geometry import default_tau, extract_supports, pairwise_separation, realizing_points


@dataclass(frozen=True)
class AnalysisParams:
    tau_rel: float = 3e-4
    delta_cells: float = 2.0
    rho_fraction: float = 0.25
    mc_samples: int = 100_000
    tol_angle: float = 0.15
    tol_density: float = 0.05
    cusp_threshold: float = 0.05
    seed: int = 0
    max_anchors: int = 0  # per population; 0 keeps every sample
    neighborhood_cells: float = 4.0

    def __post_init__(self):
        if not 0 < self.tau_rel < 1:
            raise ValueError("tau_rel must lie in (0, 1)")
        if self.delta_cells <= 0 or self.rho_fraction <= 0:
            raise ValueError("delta_cells and rho_fraction must be positive")
        if self.mc_samples < 10_000:
            raise ValueError("mc_samples must be at least 10^4")
        if self.max_anchors < 0:
            raise ValueError("max_anchors must be nonnegative")


@dataclass
class Analysis:
    tau: float
    delta: float
    rho: float
    supports: list
    separation: np.ndarray
    classes: list = field(default_factory=list)
    rsets: list = field(default_factory=list)
    neighborhoods: list = field(default_factory=list)


def anchor_indices(count, limit):
    if limit <= 0 or count <= limit:
        return np.arange(count)
    return np.unique(np.linspace(0, count - 1, limit).round().astype(int))


def classify_sample(x0, i, k, level, supports, gd, params, tau, delta, rho, radii):
    rs = realizing_points(x0, supports, gd.R, delta, rho, i)
    if rs.clusters:
        ang = angle_at(rs, gd.n, gd.R, M=params.mc_samples,
                       rng=anchor_rng(params.seed, i * 10_000_000 + k))
    else:
        ang = AngleEstimate(float("nan"), 0.0, "none", 0, float("nan"))
    dens = density_at(x0, None, tau, gd, radii, level=level)
    pc = classify_point(rs, ang, dens, gd.n, params.tol_angle,
                        params.tol_density, params.cusp_threshold, sample_index=k)
    return rs, pc


def analyze(pf, gd, params=AnalysisParams()):
    """Supports, realizing sets and a classification for each sampled anchor."""
    tau = default_tau(pf, params.tau_rel)
    delta = params.delta_cells * gd.h
    rho = params.rho_fraction * gd.R
    supports = extract_supports(pf, gd, tau)
    out = Analysis(tau=tau, delta=delta, rho=rho, supports=supports,
                   separation=pairwise_separation(supports))
    radii = dyadic_radii(gd.h, gd.R)
    for s in supports:
        level = level_function(pf.u[s.population], tau)
        for k in anchor_indices(len(s.samples), params.max_anchors):
            rs, pc = classify_sample(s.samples[k], s.population, int(k),
                                     level, supports, gd, params,
                                     tau, delta, rho, radii)
            out.rsets.append(rs)
            out.classes.append(pc)
    out.neighborhoods = singular_neighborhoods(out.classes,
                                               params.neighborhood_cells * gd.h)
    return out


def indeterminate_count(classes):
    return sum(1 for c in classes if c.verdict == INDETERMINATE)


__all__ = ["AnalysisParams", "Analysis", "analyze", "classify_sample",
           "anchor_indices", "indeterminate_count", "PointClassification"]
