"""Stage orchestration (validate, solve, analyze, verify) and the run manifest."""
from __future__ import annotations

import hashlib
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as aio
from .analysis import analyze
from .config import config_to_dict, emit_config
from .domain import (build_domain, evaluate_profile, load_csv_values,
                     make_boundary_data, validate_boundary_data)
from .interaction import build_stencil
from .solver import EpsSchedule, PopulationFields, run_continuation
from .verify import run_checks

log = logging.getLogger(__name__)

STAGES = ("validate", "solve", "analyze", "verify")
OUT_ENV = "LRSEG_OUT_DIR"


class StageError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class DependencyError(StageError):
    pass


@dataclass
class RunManifest:
    config_hash: str
    version: str
    artifacts: dict = field(default_factory=dict)  # relative path -> sha256
    timings: dict = field(default_factory=dict)
    scales: dict = field(default_factory=dict)
    checks_passed: bool | None = None
    validation_passed: bool | None = None

    def to_dict(self):
        return {"config_hash": self.config_hash, "version": self.version,
                "artifacts": [{"path": k, "sha256": v}
                              for k, v in sorted(self.artifacts.items())],
                "timings": self.timings, "pgm_scales": self.scales,
                "checks_passed": self.checks_passed,
                "validation_passed": self.validation_passed}

    @property
    def exit_code(self):
        return 1 if self.checks_passed is False else 0


def config_hash(cfg):
    return hashlib.sha256(emit_config(cfg).encode()).hexdigest()


def output_dir(cfg, override=None):
    return Path(override or os.environ.get(OUT_ENV) or cfg.output.directory)


def build_problem(cfg):
    """Domain, boundary data and stencil described by a config."""
    shape = dict(cfg.domain.shape)
    if shape["kind"] == "mask":
        shape["mask"] = shape.pop("path")
    gd = build_domain(shape, cfg.domain.h, cfg.domain.R, cfg.domain.dimension)
    vals = []
    for p in cfg.populations:
        if p.csv is not None:
            vals.append(load_csv_values(p.csv, gd))
        else:
            vals.append(evaluate_profile(p.profile, gd))
    bd = make_boundary_data(gd, vals)
    st = build_stencil(gd, cfg.solver.kernel)
    return gd, bd, st


def schedule_for(cfg):
    return EpsSchedule(eps_start=cfg.eps_start(), eps_factor=cfg.solver.eps_factor,
                       eps_min=cfg.eps_min())


class Pipeline:
    """Runs stages against one output directory, reusing on-disk artifacts."""

    def __init__(self, cfg, out=None, seed=None, table_format=None):
        self.cfg = cfg
        self.out = output_dir(cfg, out)
        self.seed = cfg.solver.seed if seed is None else seed
        fmts = cfg.output.formats
        self.table_format = table_format or ("json" if "json" in fmts and "csv" not in fmts
                                             else "csv")
        self.pgm = "pgm" in fmts
        self.gd, self.bd, self.st = build_problem(cfg)
        self.pf = None
        self.analysis = None
        self.manifest = RunManifest(config_hash=config_hash(cfg), version=__version__)

    # -------------------------------------------------------------- helpers

    def _path(self, rel):
        p = self.out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def _record(self, rel):
        self.manifest.artifacts[rel] = aio.sha256(self.out / rel)

    def _table(self, stem, header, rows):
        rows = list(rows)
        if self.table_format == "json":
            rel = f"{stem}.json"
            aio.write_json(self._path(rel), [dict(zip(header, r)) for r in rows])
        else:
            rel = f"{stem}.csv"
            aio.write_csv(self._path(rel), header, rows)
        self._record(rel)

    def _field_path(self, i):
        return f"fields/u_{i}.csv"

    def _coords(self, n):
        return ["x", "y", "z"][:n]

    # --------------------------------------------------------------- stages

    def validate(self):
        rep = validate_boundary_data(self.gd, self.bd, seed=self.seed)
        aio.write_json(self._path("validation.json"), rep.to_dict())
        self._record("validation.json")
        self.manifest.validation_passed = rep.passed
        if not rep.passed:
            log.warning("boundary data violate: %s",
                        ", ".join(k for k, v in rep.flags.items() if not v))
        return rep

    def solve(self):
        sched = schedule_for(self.cfg)
        pf, diag = run_continuation(self.gd, self.bd, self.st, sched,
                                    self.cfg.solver.params(),
                                    tau_rel=self.cfg.analysis.tau_rel)
        self.pf = pf
        self._table("diagnostics",
                    ["eps", "residual", "iterations", "overlap", "min_distance"],
                    [[d["eps"], d["residual"], d["iterations"], d["overlap"],
                      d["min_distance"]] for d in diag])
        mask = self.gd.omega_mask | self.gd.collar_mask
        for i in range(pf.K):
            rel = self._field_path(i)
            aio.write_field_csv(self._path(rel), pf.u[i], mask)
            self._record(rel)
            if self.pgm and self.gd.n == 2:
                prel = f"fields/u_{i}.pgm"
                self.manifest.scales[prel] = aio.write_pgm(self._path(prel), pf.u[i])
                self._record(prel)
        return pf

    def _load_fields(self):
        paths = [self.out / self._field_path(i) for i in range(self.bd.K)]
        if not all(p.exists() for p in paths):
            raise DependencyError("analyze", "solved fields not found; run 'solve' first")
        u = np.stack([aio.read_field_csv(p, self.gd.shape) for p in paths])
        u[:, self.gd.collar_mask] = np.asarray(self.bd.values)[:, self.gd.collar_mask]
        diag = self.out / "diagnostics.csv"
        eps = self.cfg.eps_min()
        if diag.exists():
            _, rows = aio.read_csv(diag)
            if rows:
                eps = float(rows[-1][0])
        from .solver import residual
        pf = PopulationFields(u=u, epsilon=eps)
        return PopulationFields(u=u, epsilon=eps, residual=residual(pf, self.gd, self.st))

    def analyze(self):
        if self.pf is None:
            self.pf = self._load_fields()
        an = analyze(self.pf, self.gd, self.cfg.analysis.params(seed=self.seed))
        self.analysis = an
        n = self.gd.n
        self._table("boundary_samples", ["population"] + self._coords(n),
                    [[s.population] + list(p) for s in an.supports for p in s.samples])
        K = len(an.supports)
        self._table("separation", ["population"] + [str(j) for j in range(K)],
                    [[i] + list(an.separation[i]) for i in range(K)])
        records = []
        for pc, rs in zip(an.classes, an.rsets):
            records.append({
                "population": pc.population, "sample": pc.sample_index,
                "anchor": pc.anchor, "members": len(rs.members),
                "clusters": [{"direction": c.direction,
                              "centroid_direction": c.centroid_direction,
                              "populations": sorted(c.populations),
                              "size": len(c.members), "min_distance": c.min_distance,
                              "arc_width": c.arc_width} for c in rs.clusters]})
        aio.write_json(self._path("realizing_sets.json"),
                       {"tau": an.tau, "delta": an.delta, "rho": an.rho,
                        "anchors": records})
        self._record("realizing_sets.json")
        return an

    def verify(self):
        needed = [self.out / "realizing_sets.json"]
        if self.analysis is None and not all(p.exists() for p in needed):
            raise DependencyError("verify", "analysis artifacts not found; run 'analyze' first")
        if self.analysis is None:
            if self.pf is None:
                self.pf = self._load_fields()
            self.analysis = analyze(self.pf, self.gd,
                                    self.cfg.analysis.params(seed=self.seed))
        an = self.analysis
        n = self.gd.n
        self._table("classification",
                    ["population"] + self._coords(n)
                    + ["clusters", "angle", "angle_err", "density", "verdict", "flags"],
                    [[c.population] + list(c.anchor)
                     + [c.clusters, c.angle.value, c.angle.stderr,
                        c.density.extrapolated, c.verdict,
                        ";".join(k for k, v in sorted(c.flags.items()) if not v) or "ok"]
                     for c in an.classes])
        checks, reports = run_checks(self.pf, self.gd, self.st, an,
                                     self.cfg.solver.tolerance)
        aio.write_json(self._path("structure_summary.json"),
                       {"structure": reports["structure"],
                        "neighborhoods": reports["neighborhoods"],
                        "threshold_stability": reports["threshold_stability"]})
        aio.write_json(self._path("convex_report.json"),
                       {"convex_structure": reports["convex_structure"],
                        "contact_sets": reports.get("contact_sets", {})})
        aio.write_json(self._path("checks.json"),
                       {"passed": all(c.passed for c in checks),
                        "checks": [c.to_dict() for c in checks]})
        for rel in ("structure_summary.json", "convex_report.json", "checks.json"):
            self._record(rel)
        self.manifest.checks_passed = all(c.passed for c in checks)
        return checks, reports

    # ------------------------------------------------------------------ run

    def run(self, stages=STAGES):
        stages = [s for s in STAGES if s in set(stages)]
        unknown = set(stages) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown stages {sorted(unknown)}")
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.yaml").write_text(emit_config(self.cfg))
        self._record("config.yaml")
        for name in stages:
            t0 = time.perf_counter()
            try:
                getattr(self, name)()
            except StageError:
                raise
            except Exception as exc:  # surface the stage name
                raise StageError(name, f"{type(exc).__name__}: {exc}") from exc
            self.manifest.timings[name] = time.perf_counter() - t0
        prev = self.out / "manifest.json"
        if prev.exists():
            old = aio.read_json(prev)
            if old.get("config_hash") == self.manifest.config_hash:
                for a in old.get("artifacts", []):
                    self.manifest.artifacts.setdefault(a["path"], a["sha256"])
                for k, v in old.get("timings", {}).items():
                    self.manifest.timings.setdefault(k, v)
                if self.manifest.validation_passed is None:
                    self.manifest.validation_passed = old.get("validation_passed")
        aio.write_json(prev, self.manifest.to_dict())
        return self.manifest


def run_pipeline(cfg, stages=STAGES, out=None, seed=None, table_format=None):
    """Execute ``stages`` in order and write the manifest; returns it."""
    return Pipeline(cfg, out=out, seed=seed, table_format=table_format).run(stages)


__all__ = ["Pipeline", "RunManifest", "run_pipeline", "build_problem", "STAGES",
           "StageError", "DependencyError", "config_to_dict"]
