"""Run configuration: strict YAML parsing with line-numbered errors.

A configuration has five sections::

    domain:      dimension, shape {kind, ...}, h, R
    populations: list of {profile: {kind, ...}} or {csv: path}
    solver:      kernel, method, eps_start, eps_factor, eps_min, tolerance,
                 max_iterations, damping, sweep, block_solver, seed
    analysis:    tau_rel, delta_cells, rho_fraction, mc_samples, tol_angle,
                 tol_density, cusp_threshold, max_anchors, neighborhood_cells
    output:      directory, formats

Unknown keys are rejected. ``eps_start`` defaults to R and ``eps_min`` to h.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .analysis import AnalysisParams
from .solver import BLOCK_SOLVERS, METHODS, SWEEPS, SolverParams

SHAPE_KEYS = {
    "disk": {"center", "radius"},
    "ball": {"center", "radius"},
    "box": {"lo", "hi"},
    "annulus": {"center", "r_inner", "r_outer"},
    "mask": {"path", "origin"},
}
PROFILE_KEYS = {
    "constant": {"amplitude"},
    "zero": set(),
    "linear": {"normal", "offset", "scale", "amplitude"},
    "orthant": {"signs", "gap", "width", "amplitude"},
    "sector": {"theta0", "theta1", "gap", "width", "amplitude"},
    "bump": {"center", "radius", "amplitude"},
}
FORMATS = ("csv", "json", "pgm")


class ConfigError(ValueError):
    def __init__(self, key, message, line=None):
        where = f" (line {line})" if line else ""
        super().__init__(f"{key}: {message}{where}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class DomainConfig:
    shape: dict
    h: float
    R: float
    dimension: int | None = None


@dataclass(frozen=True)
class PopulationSpec:
    profile: dict | None = None
    csv: str | None = None


@dataclass(frozen=True)
class SolverConfig:
    kernel: str = "average"
    method: str = "newton"
    eps_start: float | None = None
    eps_factor: float = 0.5
    eps_min: float | None = None
    tolerance: float = 1e-6
    max_iterations: int = 50
    damping: float = 0.8
    sweep: str = "jacobi"
    block_solver: str = "auto"
    seed: int = 0

    def params(self):
        return SolverParams(tolerance=self.tolerance,
                            max_iterations=self.max_iterations,
                            damping=self.damping, sweep=self.sweep,
                            method=self.method, block_solver=self.block_solver)


@dataclass(frozen=True)
class AnalysisConfig:
    tau_rel: float = 3e-4
    delta_cells: float = 2.0
    rho_fraction: float = 0.25
    mc_samples: int = 100_000
    tol_angle: float = 0.15
    tol_density: float = 0.05
    cusp_threshold: float = 0.05
    max_anchors: int = 0
    neighborhood_cells: float = 4.0

    def params(self, seed=0):
        return AnalysisParams(seed=seed, **asdict(self))


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "lrseg-out"
    formats: tuple = ("csv", "pgm")


@dataclass(frozen=True)
class RunConfig:
    domain: DomainConfig
    populations: tuple
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def K(self):
        return len(self.populations)

    def eps_start(self):
        return self.solver.eps_start if self.solver.eps_start is not None else self.domain.R

    def eps_min(self):
        return self.solver.eps_min if self.solver.eps_min is not None else self.domain.h


# ------------------------------------------------------------------ parsing


def _plain(node, path, marks):
    """YAML node -> python objects, recording the line of every dotted key."""
    marks[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            sub = f"{path}.{key}" if path else key
            if key in out:
                raise ConfigError(sub, "duplicate key", k.start_mark.line + 1)
            marks[sub] = k.start_mark.line + 1
            out[key] = _plain(v, sub, marks)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, f"{path}[{i}]", marks) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


class _Reader:
    def __init__(self, marks, base):
        self.marks = marks
        self.base = base

    def err(self, key, msg):
        line = self.marks.get(key)
        while line is None and "." in key:
            key = key.rsplit(".", 1)[0]
            line = self.marks.get(key)
        return ConfigError(key, msg, line)

    def mapping(self, obj, key, allowed, required=()):
        if not isinstance(obj, dict):
            raise self.err(key, "expected a mapping")
        for k in obj:
            if k not in allowed:
                raise self.err(f"{key}.{k}" if key else k, "unknown key")
        for k in required:
            if k not in obj:
                raise self.err(key, f"missing key '{k}'")
        return obj

    def number(self, obj, key, integer=False, check=None, what=""):
        v = obj
        if isinstance(v, bool):
            raise self.err(key, "type mismatch: expected a number")
        if isinstance(v, str) and not integer:
            try:
                v = float(v)  # PyYAML reads '1e7' as a string
            except ValueError:
                raise self.err(key, "type mismatch: expected a number") from None
        if integer:
            if not isinstance(v, int):
                raise self.err(key, "type mismatch: expected an integer")
        elif not isinstance(v, (int, float)):
            raise self.err(key, "type mismatch: expected a number")
        else:
            v = float(v)
            if not math.isfinite(v):
                raise self.err(key, "range violation: must be finite")
        if check is not None and not check(v):
            raise self.err(key, f"range violation: must be {what}")
        return v

    def choice(self, obj, key, options):
        if obj not in options:
            raise self.err(key, f"must be one of {list(options)}")
        return obj

    def vector(self, obj, key, n=None):
        if not isinstance(obj, list) or not obj:
            raise self.err(key, "type mismatch: expected a list of numbers")
        out = [self.number(v, f"{key}[{i}]") for i, v in enumerate(obj)]
        if n is not None and len(out) != n:
            raise self.err(key, f"expected {n} components")
        return out

    def path(self, obj, key):
        if not isinstance(obj, str):
            raise self.err(key, "type mismatch: expected a path")
        p = Path(obj)
        if not p.is_absolute():
            p = (self.base / p).resolve()
        if not p.exists():
            raise self.err(key, f"file not found: {p}")
        return str(p)


def _shape(rd, obj, n):
    rd.mapping(obj, "domain.shape", {"kind"} | set().union(*SHAPE_KEYS.values()),
               required=("kind",))
    kind = rd.choice(obj["kind"], "domain.shape.kind", tuple(SHAPE_KEYS))
    rd.mapping(obj, "domain.shape", {"kind"} | SHAPE_KEYS[kind])
    out = {"kind": kind}
    for k, v in obj.items():
        key = f"domain.shape.{k}"
        if k in ("center", "lo", "hi", "origin"):
            out[k] = rd.vector(v, key, n)
        elif k in ("radius", "r_inner", "r_outer"):
            out[k] = rd.number(v, key, check=lambda x: x > 0, what="> 0")
        elif k == "path":
            out[k] = rd.path(v, key)
    if kind == "mask" and "path" not in out:
        raise rd.err("domain.shape", "missing key 'path'")
    if kind == "annulus":
        for k in ("r_inner", "r_outer"):
            if k not in out:
                raise rd.err("domain.shape", f"missing key '{k}'")
        if out["r_inner"] >= out["r_outer"]:
            raise rd.err("domain.shape.r_inner", "range violation: must be < r_outer")
    if kind == "box" and "lo" in out and "hi" in out:
        if any(a >= b for a, b in zip(out["lo"], out["hi"])):
            raise rd.err("domain.shape.hi", "range violation: must exceed lo")
    return out


def _profile(rd, obj, key, n):
    rd.mapping(obj, key, {"kind"} | set().union(*PROFILE_KEYS.values()),
               required=("kind",))
    kind = rd.choice(obj["kind"], f"{key}.kind", tuple(PROFILE_KEYS))
    rd.mapping(obj, key, {"kind"} | PROFILE_KEYS[kind])
    out = {"kind": kind}
    for k, v in obj.items():
        sub = f"{key}.{k}"
        if k in ("normal", "signs", "center"):
            out[k] = rd.vector(v, sub, n)
        elif k == "amplitude":
            out[k] = rd.number(v, sub, check=lambda x: x >= 0, what=">= 0")
        elif k in ("scale", "width", "radius"):
            out[k] = rd.number(v, sub, check=lambda x: x > 0, what="> 0")
        elif k in ("gap",):
            out[k] = rd.number(v, sub, check=lambda x: x >= 0, what=">= 0")
        elif k != "kind":
            out[k] = rd.number(v, sub)
    required = {"linear": ("normal",), "orthant": ("signs",),
                "sector": ("theta0", "theta1"), "bump": ("center", "radius")}
    for k in required.get(kind, ()):
        if k not in out:
            raise rd.err(key, f"missing key '{k}'")
    return out


def _section(rd, raw, name, cls, spec):
    obj = raw.get(name, {}) or {}
    rd.mapping(obj, name, {f.name for f in fields(cls)})
    kw = {}
    for k, v in obj.items():
        key = f"{name}.{k}"
        kind, *rest = spec[k]
        if v is None and kind in ("optfloat",):
            kw[k] = None
        elif kind in ("float", "optfloat"):
            check, what = rest if rest else (None, "")
            kw[k] = rd.number(v, key, check=check, what=what)
        elif kind == "int":
            check, what = rest if rest else (None, "")
            kw[k] = rd.number(v, key, integer=True, check=check, what=what)
        elif kind == "choice":
            kw[k] = rd.choice(v, key, rest[0])
        elif kind == "str":
            if not isinstance(v, str):
                raise rd.err(key, "type mismatch: expected a string")
            kw[k] = v
        elif kind == "formats":
            if not isinstance(v, list):
                raise rd.err(key, "type mismatch: expected a list")
            kw[k] = tuple(rd.choice(x, f"{key}[{i}]", FORMATS) for i, x in enumerate(v))
    return cls(**kw)


_pos = (lambda x: x > 0, "> 0")
_unit_open = (lambda x: 0 < x < 1, "in (0, 1)")

SOLVER_SPEC = {
    "kernel": ("choice", ("average", "sup")),
    "method": ("choice", METHODS),
    "eps_start": ("optfloat", *_pos),
    "eps_factor": ("float", *_unit_open),
    "eps_min": ("optfloat", *_pos),
    "tolerance": ("float", *_pos),
    "max_iterations": ("int", lambda x: x >= 1, ">= 1"),
    "damping": ("float", lambda x: 0 < x <= 1, "in (0, 1]"),
    "sweep": ("choice", SWEEPS),
    "block_solver": ("choice", BLOCK_SOLVERS),
    "seed": ("int", lambda x: x >= 0, ">= 0"),
}
ANALYSIS_SPEC = {
    "tau_rel": ("float", *_unit_open),
    "delta_cells": ("float", *_pos),
    "rho_fraction": ("float", *_pos),
    "mc_samples": ("int", lambda x: x >= 10_000, ">= 10000"),
    "tol_angle": ("float", *_pos),
    "tol_density": ("float", *_pos),
    "cusp_threshold": ("float", *_unit_open),
    "max_anchors": ("int", lambda x: x >= 0, ">= 0"),
    "neighborhood_cells": ("float", *_pos),
}
OUTPUT_SPEC = {"directory": ("str",), "formats": ("formats",)}


def config_from_dict(raw, marks=None, base="."):
    """Validate a plain mapping (as read from YAML) into a :class:`RunConfig`."""
    rd = _Reader(marks or {}, Path(base))
    rd.mapping(raw, "", {"domain", "populations", "solver", "analysis", "output"},
               required=("domain", "populations"))
    d = rd.mapping(raw["domain"], "domain", {"dimension", "shape", "h", "R"},
                   required=("shape", "h", "R"))
    n = None
    if "dimension" in d:
        n = rd.number(d["dimension"], "domain.dimension", integer=True,
                      check=lambda x: x in (2, 3), what="2 or 3")
    h = rd.number(d["h"], "domain.h", check=lambda x: x > 0, what="> 0")
    R = rd.number(d["R"], "domain.R", check=lambda x: 0 < x <= 1, what="in (0, 1]")
    if R < 4 * h * (1 - 1e-12):
        raise rd.err("domain.R", f"range violation: must be >= 4h = {4 * h:g}")
    shape = _shape(rd, d["shape"], n)
    if n is None:
        for k in ("center", "lo", "hi", "origin"):
            if k in shape:
                n = len(shape[k])
                break
    dom = DomainConfig(shape=shape, h=h, R=R, dimension=n)

    pops = raw["populations"]
    if not isinstance(pops, list) or not pops:
        raise rd.err("populations", "expected a nonempty list")
    specs = []
    for i, p in enumerate(pops):
        key = f"populations[{i}]"
        rd.mapping(p, key, {"profile", "csv"})
        if ("profile" in p) == ("csv" in p):
            raise rd.err(key, "exactly one of 'profile' or 'csv' is required")
        if "csv" in p:
            specs.append(PopulationSpec(csv=rd.path(p["csv"], f"{key}.csv")))
        else:
            specs.append(PopulationSpec(profile=_profile(rd, p["profile"],
                                                         f"{key}.profile", n)))
    solver = _section(rd, raw, "solver", SolverConfig, SOLVER_SPEC)
    if solver.eps_start is not None and solver.eps_min is not None \
            and solver.eps_min > solver.eps_start:
        raise rd.err("solver.eps_min", "range violation: must be <= eps_start")
    return RunConfig(domain=dom, populations=tuple(specs), solver=solver,
                     analysis=_section(rd, raw, "analysis", AnalysisConfig, ANALYSIS_SPEC),
                     output=_section(rd, raw, "output", OutputConfig, OUTPUT_SPEC))


def parse_config_text(text, base="."):
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<document>", f"malformed YAML: {exc}",
                          mark.line + 1 if mark else None) from None
    if node is None:
        raise ConfigError("<document>", "empty configuration")
    marks = {}
    return config_from_dict(_plain(node, "", marks), marks, base)


def parse_config(path):
    path = Path(path)
    return parse_config_text(path.read_text(), base=path.parent)


def config_to_dict(cfg):
    out = {
        "domain": {k: v for k, v in asdict(cfg.domain).items() if v is not None},
        "populations": [{k: v for k, v in asdict(p).items() if v is not None}
                        for p in cfg.populations],
        "solver": asdict(cfg.solver),
        "analysis": asdict(cfg.analysis),
        "output": {"directory": cfg.output.directory,
                   "formats": list(cfg.output.formats)},
    }
    return out


def emit_config(cfg):
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
