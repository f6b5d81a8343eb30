"""Canned benchmark configurations.

Boundary data carry a large amplitude ``A``. Scaling every ``f_i`` by ``A``
is equivalent to replacing eps by ``eps / sqrt(A)``, so continuing eps down to
h reaches an effective eps of ``h / sqrt(A)``, small enough that the interfaces
are sharp at grid scale. The schedule starts at ``R * sqrt(A)``, where the
scaled problem has effective eps R.
"""
from __future__ import annotations

import math

from .config import (AnalysisConfig, DomainConfig, OutputConfig, PopulationSpec,
                     RunConfig, SolverConfig)

AMPLITUDE = 1e7
DEMOS = ("two_slab_2d", "four_quadrant_2d", "two_slab_3d", "three_pop_disk_2d")


def _solver(R, kernel, amplitude, **kw):
    return SolverConfig(kernel=kernel, eps_start=R * math.sqrt(amplitude),
                        eps_factor=0.5, eps_min=None,
                        tolerance=1e-6 * amplitude, **kw)


def two_slab_2d(kernel="average", h=1 / 128, R=0.25, amplitude=AMPLITUDE):
    """Unit square; f_1 on the left, f_2 on the right, supports exactly R apart.

    Each f_i is the restriction of a linear function vanishing on a vertical
    line, so the segregated limit is piecewise linear with flat interfaces.
    """
    a, b = 0.5 - R / 2, 0.5 + R / 2
    pops = (
        PopulationSpec(profile={"kind": "linear", "normal": [-1.0, 0.0],
                                "offset": -a, "scale": a + R, "amplitude": amplitude}),
        PopulationSpec(profile={"kind": "linear", "normal": [1.0, 0.0],
                                "offset": b, "scale": a + R, "amplitude": amplitude}),
    )
    return RunConfig(
        domain=DomainConfig(shape={"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
                            h=h, R=R, dimension=2),
        populations=pops, solver=_solver(R, kernel, amplitude),
        analysis=AnalysisConfig(), output=OutputConfig(directory="two_slab_2d"))


def four_quadrant_2d(kernel="average", h=1 / 128, R=0.25, amplitude=AMPLITUDE):
    """Unit disk, K = 4, f_i supported where the collar meets quadrant i.

    f_i grows from zero at distance R/2 from the quadrant's bounding axes,
    so supports of neighbouring quadrants are exactly R apart.
    """
    signs = ([1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0])
    pops = tuple(PopulationSpec(profile={"kind": "orthant", "signs": s, "gap": R / 2,
                                         "width": R / 2, "amplitude": amplitude})
                 for s in signs)
    return RunConfig(
        domain=DomainConfig(shape={"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
                            h=h, R=R, dimension=2),
        populations=pops, solver=_solver(R, kernel, amplitude),
        analysis=AnalysisConfig(), output=OutputConfig(directory="four_quadrant_2d"))


def two_slab_3d(kernel="average", h=1 / 48, R=0.25, amplitude=AMPLITUDE):
    """Unit cube analogue of :func:`two_slab_2d`."""
    a, b = 0.5 - R / 2, 0.5 + R / 2
    pops = (
        PopulationSpec(profile={"kind": "linear", "normal": [-1.0, 0.0, 0.0],
                                "offset": -a, "scale": a + R, "amplitude": amplitude}),
        PopulationSpec(profile={"kind": "linear", "normal": [1.0, 0.0, 0.0],
                                "offset": b, "scale": a + R, "amplitude": amplitude}),
    )
    return RunConfig(
        domain=DomainConfig(shape={"kind": "box", "lo": [0.0] * 3, "hi": [1.0] * 3},
                            h=h, R=R, dimension=3),
        populations=pops, solver=_solver(R, kernel, amplitude),
        analysis=AnalysisConfig(max_anchors=600),
        output=OutputConfig(directory="two_slab_3d"))


def three_pop_disk_2d(kernel="average", h=1 / 128, R=0.25, amplitude=AMPLITUDE):
    """Unit disk, K = 3, each f_i on one third of the collar."""
    pops = []
    for i in range(3):
        t0 = math.pi / 2 + 2 * math.pi * i / 3
        pops.append(PopulationSpec(profile={
            "kind": "sector", "theta0": t0, "theta1": t0 + 2 * math.pi / 3,
            "gap": R / 2, "width": R / 2, "amplitude": amplitude}))
    return RunConfig(
        domain=DomainConfig(shape={"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
                            h=h, R=R, dimension=2),
        populations=tuple(pops), solver=_solver(R, kernel, amplitude),
        analysis=AnalysisConfig(), output=OutputConfig(directory="three_pop_disk_2d"))


_BUILDERS = {"two_slab_2d": two_slab_2d, "four_quadrant_2d": four_quadrant_2d,
             "two_slab_3d": two_slab_3d, "three_pop_disk_2d": three_pop_disk_2d}


def demo(name, **overrides):
    """Canned :class:`RunConfig` for one of :data:`DEMOS`."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown demo {name!r}; choose from {list(DEMOS)}") from None
    return builder(**overrides)
