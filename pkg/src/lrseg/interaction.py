"""Long-range interaction operators: ball average and ball supremum.

A discrete ball of radius R is the set of integer offsets ``z`` with
``|z| h <= R``. Values outside the grid array read as zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .domain import ResolutionError

KINDS = ("average", "sup")


@dataclass(frozen=True, eq=False)
class BallStencil:
    radius: float
    offsets: np.ndarray  # (cell_count, n) integer offsets
    kind: str
    rows: np.ndarray     # leading-axis offsets of each row, (M, n-1)
    widths: np.ndarray   # half-width along the last axis, (M,)

    @property
    def cell_count(self):
        return int(self.offsets.shape[0])

    @property
    def n(self):
        return int(self.offsets.shape[1])


def _offsets(r_cells, n):
    rr = int(math.floor(r_cells + 1e-9))
    z = np.arange(-rr, rr + 1)
    g = np.stack(np.meshgrid(*([z] * n), indexing="ij")).reshape(n, -1).T
    keep = (g * g).sum(axis=1) <= r_cells * r_cells + 1e-9
    return g[keep].astype(np.int64)


def stencil_from_radius(radius, h, n, kind):
    """Build a stencil without a domain (radius in length units)."""
    if kind not in KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}; expected 'average' or 'sup'")
    if radius < 4 * h * (1 - 1e-12):
        raise ResolutionError(f"R={radius} is below the resolution floor 4h={4 * h}")
    offs = _offsets(radius / h, n)
    lead = np.unique(offs[:, :-1], axis=0)
    widths = np.array([offs[np.all(offs[:, :-1] == row, axis=1), -1].max()
                       for row in lead], dtype=np.int64)
    for a in (offs, lead, widths):
        a.setflags(write=False)
    return BallStencil(radius=float(radius), offsets=offs, kind=kind,
                       rows=lead.astype(np.int64), widths=widths)


def build_stencil(gd, kind):
    return stencil_from_radius(gd.R, gd.h, gd.n, kind)


def apply_h(field, x, st):
    """H_R(field) at the single cell index ``x``."""
    field = np.asarray(field)
    idx = np.asarray(x, dtype=np.int64) + st.offsets
    shape = np.asarray(field.shape)
    inside = np.all((idx >= 0) & (idx < shape), axis=1)
    vals = field[tuple(idx[inside].T)]
    if st.kind == "sup":
        return float(vals.max()) if vals.size else 0.0
    return float(vals.sum()) / st.cell_count


def apply_h_field(field, st, where=None):
    """H_R(field) at every cell (or only where ``where`` is True)."""
    if st.kind == "sup":
        return kernels.ball_max(field, st.rows, st.widths, where)
    return kernels.ball_sum(field, st.rows, st.widths, where) / st.cell_count
