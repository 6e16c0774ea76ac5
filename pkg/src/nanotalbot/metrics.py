"""Distinguishability of two pattern densities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InterfaceError

ALEPH_THRESHOLD = 0.05
DEFAULT_WINDOW = 1e-7


@dataclass(frozen=True)
class MetricResult:
    value: float
    window: float
    samples: int
    pair: tuple


def aleph_values(z, p1, p2, L=DEFAULT_WINDOW):
    """(1/L) int_{-L/2}^{L/2} |p1 - p2| / |p1 + p2| dz on the shared grid (trapezoid)."""
    z = np.asarray(z, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != z.shape or p2.shape != z.shape:
        raise InterfaceError("pattern values do not match the grid")
    tol = 1e-9 * L
    if z[0] > -L / 2 + tol or z[-1] < L / 2 - tol:
        raise InterfaceError("grid does not cover the metric window")
    inside = (z >= -L / 2 - tol) & (z <= L / 2 + tol)
    zs, a, b = z[inside], p1[inside], p2[inside]
    den = np.abs(a + b)
    if np.any(den == 0):
        raise DegenerateInputError("both densities vanish at a grid point")
    return float(np.trapezoid(np.abs(a - b) / den, zs) / (zs[-1] - zs[0])), int(zs.size)


def aleph(pat1, pat2, L=DEFAULT_WINDOW):
    if pat1.z.shape != pat2.z.shape or not np.allclose(pat1.z, pat2.z, rtol=0, atol=1e-15):
        raise InterfaceError("patterns are sampled on different grids")
    value, n = aleph_values(pat1.z, pat1.values, pat2.values, L)
    return MetricResult(value, L, n, (pat1.kind, pat2.kind))
