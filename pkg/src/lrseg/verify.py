"""Pass/fail checks on a solved and analyzed configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classify import (REGULAR, TYPE1, contact_set_symmetry, convex_structure_report,
                       half_sphere, structure_summary, verdict_agreement)
from .geometry import exterior_ball_check, threshold_stability
from .solver import harmonicity, interaction_decay


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None
    limit: object = None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "limit": self.limit, "detail": self.detail}


def exterior_ball_fraction(analysis, gd):
    """Fraction of anchors whose tangent balls at every cluster hold no support."""
    total = ok = 0
    worst = 0.0
    for pc, rs in zip(analysis.classes, analysis.rsets):
        if not rs.clusters:
            continue
        s = analysis.supports[pc.population]
        total += 1
        depths = [exterior_ball_check(pc.anchor, c.direction, s, gd.R, gd)[1]
                  for c in rs.clusters]
        d = max(depths)
        worst = max(worst, d)
        ok += d <= gd.h
    return (ok / total if total else 1.0), worst, total


def dichotomy_stats(classes):
    """Median and 90th percentile of |density - angle / (2 pi)| (2D)."""
    diffs = np.array([abs(c.density.extrapolated - c.angle.value / (2 * math.pi))
                      for c in classes if np.isfinite(c.angle.value)])
    if not len(diffs):
        return float("nan"), float("nan")
    return float(np.median(diffs)), float(np.percentile(diffs, 90))


def contact_pairs(analysis, gd):
    """Population pairs whose supports come within R + delta of each other."""
    sep = analysis.separation
    K = sep.shape[0]
    return [(i, j) for i in range(K) for j in range(i + 1, K)
            if np.isfinite(sep[i, j]) and sep[i, j] <= gd.R + analysis.delta]


def run_checks(pf, gd, st, analysis, tolerance, decay_limit=1e-3):
    """All verification checks; returns ``(checks, reports)``."""
    checks, reports = [], {}
    n = gd.n

    prod, rel = interaction_decay(pf, gd, st)
    checks.append(Check("interaction_decay", rel <= decay_limit, rel, decay_limit,
                        {"max_product": prod}))

    lap = harmonicity(pf, gd, analysis.tau)
    checks.append(Check("harmonicity", lap <= 10 * tolerance, lap, 10 * tolerance))

    frac, worst, total = exterior_ball_fraction(analysis, gd)
    checks.append(Check("exterior_ball", frac >= 0.99, frac, 0.99,
                        {"worst_depth": worst, "anchors": total}))

    agree = verdict_agreement(analysis.classes)
    checks.append(Check("equivalence", agree >= 0.95, agree, 0.95))

    half = half_sphere(n)
    vals = [c.angle.value for c in analysis.classes if np.isfinite(c.angle.value)]
    in_range = all(0.0 <= v <= half for v in vals)
    checks.append(Check("angle_range", in_range, max(vals, default=None), half))

    if n == 2:
        med, p90 = dichotomy_stats(analysis.classes)
        checks.append(Check("dichotomy", med <= 0.05 and p90 <= 0.1,
                            {"median": med, "p90": p90}, {"median": 0.05, "p90": 0.1}))

    conv = convex_structure_report(analysis.supports, analysis.classes,
                                   analysis.rsets, gd)
    reports["convex_structure"] = conv
    checks.append(Check("type1_angle_bound", conv["type1_bound_passed"],
                        conv["type1_max_angle"], conv["type1_bound"]))
    if conv["precondition_passed"]:
        checks.append(Check("facet_flatness", conv["facet_flatness_passed"],
                            max((f["max_deviation"] for f in conv["facets"]
                                 if f["counted"]), default=0.0), 2 * gd.h))
        checks.append(Check("regular_pairing", conv["pairing_passed"],
                            conv["pairing_agreement"], 0.95))
        contacts = {}
        for i, j in contact_pairs(analysis, gd):
            cs = contact_set_symmetry(analysis.supports, i, j, gd.R,
                                      analysis.delta, gd)
            contacts[f"{i}-{j}"] = cs
            ok = 0.9 <= cs["ratio"] <= 1.1 and cs["overlap"] >= 0.9
            checks.append(Check(f"contact_symmetry_{i}_{j}", ok,
                                {"ratio": cs["ratio"], "overlap": cs["overlap"]},
                                {"ratio": [0.9, 1.1], "overlap": 0.9}))
        reports["contact_sets"] = contacts

    summary = structure_summary(analysis.classes, n)
    reports["structure"] = summary
    reports["neighborhoods"] = [
        {"population": nb["population"], "size": len(nb["members"]),
         "anchor": analysis.classes[nb["representative"]].anchor,
         "verdict": analysis.classes[nb["representative"]].verdict,
         "angle": analysis.classes[nb["representative"]].angle.value,
         "density": analysis.classes[nb["representative"]].density.extrapolated}
        for nb in analysis.neighborhoods]

    umax = float(pf.u.max())
    moves, bad = threshold_stability(pf, gd, 1e-3 * umax, 1e-2 * umax)
    reports["threshold_stability"] = {
        "tau_range": [1e-3 * umax, 1e-2 * umax],
        "max_displacement": moves, "limit": 2 * gd.h,
        "violations": len(bad)}
    return checks, reports


def regular_fraction(classes):
    return sum(c.verdict == REGULAR for c in classes) / max(len(classes), 1)


def type1_count(classes):
    return sum(c.verdict == TYPE1 for c in classes)
