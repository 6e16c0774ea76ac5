"""Special functions and quadrature helpers.

Thin, validated wrappers over :mod:`scipy.special` and
:func:`scipy.integrate.quad`, plus a couple of vectorised kernels that the
decoherence code evaluates on large grids.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as _integrate
from scipy import special

from .errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def bessel_j(order, x):
    """Cylindrical Bessel function of the first kind, J_order(x)."""
    order = int(order)
    if abs(order) > 10_000:
        raise DomainError(f"|order| = {abs(order)} exceeds 1e4")
    if not np.all(np.isfinite(x)):
        raise DomainError("bessel_j requires a finite argument")
    return special.jv(order, x)


def sine_integral(x):
    """Si(x) = int_0^x sin(u)/u du (odd in x)."""
    if not np.all(np.isfinite(x)):
        raise DomainError("sine_integral requires a finite argument")
    return special.sici(x)[0]


def sinc(x):
    """Unnormalised sinc, sin(x)/x."""
    return np.sinc(np.asarray(x) / np.pi)


def si_over_x(x):
    """Si(x)/x with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    big = np.abs(x) > 1e-4
    out[big] = special.sici(x[big])[0] / x[big]
    small = ~big
    x2 = x[small] ** 2
    out[small] = 1.0 - x2 / 18.0 + x2 * x2 / 600.0
    return out


def spherical_j1(x):
    return special.spherical_jn(1, x)


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre_interval(a, b, n):
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _quad_checked(f, a, b, q):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        out = _integrate.quad(f, a, b, epsabs=q.abs_tol, epsrel=q.rel_tol,
                              limit=q.max_subdivisions, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3 or err > max(q.abs_tol, q.rel_tol * abs(value)):
        raise ConvergenceError(
            f"quadrature on [{a}, {b}] did not converge (estimate {value:.6g}, "
            f"error {err:.3g})", estimate=value, error=err, module="mathkit")
    return value, err


def integrate(f, a, b, q=DEFAULT_QUAD, scale=1.0):
    """Integrate ``f`` over [a, b]; either limit may be infinite.

    Semi-infinite ranges use x = a + scale*u/(1-u) so that u in [0, 1); pick
    ``scale`` near the decay length of the integrand (k_B T/hbar for thermal
    spectra).
    """
    if math.isnan(a) or math.isnan(b) or not a < b:
        raise DomainError(f"integrate needs a < b, got [{a}, {b}]")
    if math.isinf(a) and math.isinf(b):
        left = integrate(lambda x: f(-x), 0.0, math.inf, q, scale)
        right = integrate(f, 0.0, math.inf, q, scale)
        return left + right
    if math.isinf(a):
        return integrate(lambda x: f(-x), -b, math.inf, q, scale)
    if math.isinf(b):
        def mapped(u):
            if u >= 1.0:
                return 0.0
            x = a + scale * u / (1.0 - u)
            return f(x) * scale / (1.0 - u) ** 2
        return _quad_checked(mapped, 0.0, 1.0, q)[0]
    return _quad_checked(f, a, b, q)[0]
