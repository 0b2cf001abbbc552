"""Planar domains used to cut lattices and meshes: disks and rectangles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"disk radius must be positive, got {self.r}")

    @property
    def center(self):
        return (self.cx, self.cy)

    @property
    def area(self):
        return math.pi * self.r**2

    def contains(self, x, y, tol=1e-12):
        """Closed-disk membership, vectorized over ``x`` and ``y``."""
        dx = np.asarray(x, dtype=float) - self.cx
        dy = np.asarray(y, dtype=float) - self.cy
        return np.hypot(dx, dy) <= self.r * (1.0 + tol)

    def boundary_distance(self, x, y):
        """Unsigned distance to the circle."""
        d = np.hypot(np.asarray(x, dtype=float) - self.cx, np.asarray(y, dtype=float) - self.cy)
        return np.abs(self.r - d)

    def describe(self):
        return f"disk:{self.cx:g},{self.cy:g},{self.r:g}"


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def center(self):
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, x, y, tol=1e-12):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ex = tol * (self.x1 - self.x0)
        ey = tol * (self.y1 - self.y0)
        return (
            (x >= self.x0 - ex) & (x <= self.x1 + ex) & (y >= self.y0 - ey) & (y <= self.y1 + ey)
        )

    def boundary_distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = self.contains(x, y, tol=0.0)
        din = np.minimum.reduce([x - self.x0, self.x1 - x, y - self.y0, self.y1 - y])
        dx = np.maximum.reduce([self.x0 - x, np.zeros_like(x), x - self.x1])
        dy = np.maximum.reduce([self.y0 - y, np.zeros_like(y), y - self.y1])
        return np.where(inside, din, np.hypot(dx, dy))

    def describe(self):
        return f"rect:{self.x0:g},{self.y0:g},{self.x1:g},{self.y1:g}"


def parse_domain(text: str):
    """Parse ``disk:cx,cy,r`` or ``rect:x0,y0,x1,y1``."""
    kind, _, rest = text.partition(":")
    try:
        values = [float(v) for v in rest.split(",")]
    except ValueError:
        raise ValueError(f"bad domain descriptor {text!r}") from None
    kind = kind.strip().lower()
    if kind == "disk" and len(values) == 3:
        return Disk(*values)
    if kind == "rect" and len(values) == 4:
        return Rect(*values)
    raise ValueError(f"bad domain descriptor {text!r}; use disk:cx,cy,r or rect:x0,y0,x1,y1")
