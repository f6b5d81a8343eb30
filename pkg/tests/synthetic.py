"""Analytic fields with known supports, shared by geometry and classify tests."""
import numpy as np

from lrseg.domain import build_domain
from lrseg.geometry import support_from_field

H = 1 / 64
R = 0.25
DISK = {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0}
SQUARE = {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}


def domain(shape=DISK, h=H, r=R):
    return build_domain(shape, h, r)


def quadrant_fields(gd, gap=R):
    """Signed fields, positive on the four shifted quadrants (K = 4)."""
    x, y = gd.centers()
    g = gap / 2
    out = []
    for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
        out.append(np.minimum(sx * x - g, sy * y - g))
    return np.stack(out)


def slab_fields(gd, gap=R, center=0.5):
    x = gd.centers()[0]
    a, b = center - gap / 2, center + gap / 2
    return np.stack([a - x, x - b])


def supports(gd, fields, tau=0.0):
    return [support_from_field(fields[i], i, tau, gd) for i in range(len(fields))]
