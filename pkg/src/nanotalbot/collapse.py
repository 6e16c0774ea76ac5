"""Collapse-model noise: CSL kernel and CSL/DP momentum-diffusion constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.constants import G, hbar

from .errors import ConvergenceError, DomainError
from .mathkit import gauss_legendre_interval, si_over_x, sinc
from .decoherence import shift_length
from .specs import NUCLEON_MASS

# Gamma_CSL prefactor in units of lambda r_c^3 / (hbar^3 m0^2).  Fixed by the
# point-particle limit of the diffusion constant: Gamma (1 - f(x)) ~ Lambda x^2
# with Lambda -> lambda M^2 / (2 m0^2 r_c^2) as R/r_c -> 0.
CSL_PREFACTOR = 8.0 / math.sqrt(math.pi)
_Y_MAX = 9.0  # e^{-y^2} cutoff for the dimensionless momentum y = q r_c / hbar
_PANEL_NODES = 20
_MAX_PANELS = 20000


def sphere_form_factor(p, q):
    """Mass-density transform of a homogeneous sphere, mu(q) = 3 M j1(u)/u, u = qR/hbar [kg]."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise DomainError("momentum must be non-negative")
    u = q * p.radius / hbar
    out = np.empty_like(u)
    small = u < 1e-3
    us = u[small] ** 2
    out[small] = 1.0 - us / 10.0 + us * us / 280.0
    ub = u[~small]
    out[~small] = 3.0 * special.spherical_jn(1, ub) / ub
    out = p.mass * out
    return float(out) if out.ndim == 0 else out


def _weight(y, eta):
    """y^2 (mu/M)^2 e^{-y^2} with u = eta y."""
    u = eta * y
    with np.errstate(invalid="ignore", divide="ignore"):
        ff = np.where(u < 1e-3, 1.0 - u * u / 10.0, 3.0 * special.spherical_jn(1, u) / np.where(u == 0, 1, u))
    return y * y * ff * ff * np.exp(-y * y)


@dataclass(frozen=True)
class CslRates:
    """Gamma_CSL and the correlation function of the CSL noise for one sphere."""
    gamma: float
    eta: float
    r_c: float
    norm: float  # int w(y) dy

    def f(self, x):
        """Instantaneous correlation f(x): 1 at x = 0, -> 0 for x >> r_c, R."""
        return self._avg(x, sinc)

    def f_averaged(self, x):
        """f averaged over a separation growing linearly from 0 to x."""
        return 1.0 - self.one_minus_f_averaged(x)

    def one_minus_f(self, x):
        """1 - f(x), evaluated without cancellation."""
        return self._avg(x, _one_minus_sinc)

    def one_minus_f_averaged(self, x):
        # Si(z)/z has no oscillating leading term, so the eta-resolved grid
        # suffices for any x (no z-dependent refinement needed)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y, wt = _weighted_grid(self.eta)
        z = np.abs(x) / self.r_c
        out = np.empty(x.shape)
        step = max(1, 4_000_000 // y.size)
        for i in range(0, x.size, step):
            out[i:i + step] = _one_minus_si_over_x(np.outer(z[i:i + step], y)) @ wt
        return out / self.norm

    def _avg(self, x, kern):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape)
        zs = np.abs(x) / self.r_c
        for i, z in enumerate(zs):
            y, w = _y_grid(_panels_for(self.eta, z))
            out[i] = np.sum(w * _weight(y, self.eta) * kern(z * y)) / self.norm
        return out

    def __call__(self, x):
        out = self.f(x)
        return float(out[0]) if np.ndim(x) == 0 else out


def _one_minus_sinc(z):
    z = np.asarray(z, dtype=float)
    z2 = z * z
    return np.where(z < 1e-3, z2 / 6.0 - z2 * z2 / 120.0, 1.0 - sinc(z))


def _one_minus_si_over_x(z):
    z = np.asarray(z, dtype=float)
    z2 = z * z
    return np.where(z < 1e-3, z2 / 18.0 - z2 * z2 / 600.0, 1.0 - si_over_x(z))


def _panels_for(eta, z=0.0):
    """One Gauss-Legendre panel per oscillation of j1(eta y) and sinc(z y)."""
    n = 30 + int(math.ceil((eta + z) * _Y_MAX / (2 * math.pi)))
    return min(n, _MAX_PANELS)


@lru_cache(maxsize=64)
def _weighted_grid(eta):
    y, w = _y_grid(_panels_for(eta))
    wt = w * _weight(y, eta)
    wt.flags.writeable = False
    return y, wt


@lru_cache(maxsize=32)
def _y_grid(n_panels=30):
    edges = np.linspace(0.0, _Y_MAX, n_panels + 1)
    y, w = gauss_legendre_interval(0.0, 1.0, _PANEL_NODES)
    width = np.diff(edges)
    ys = (edges[:-1, None] + width[:, None] * y[None, :]).ravel()
    ws = (width[:, None] * w[None, :]).ravel()
    ys.flags.writeable = False
    ws.flags.writeable = False
    return ys, ws


@lru_cache(maxsize=512)
def csl_rates(p, params):
    eta = p.radius / params.r_c
    n = _panels_for(eta)
    y, w = _y_grid(n)
    grid = float(np.sum(w * _weight(y, eta)))
    y2, w2 = _y_grid(2 * n)
    norm = float(np.sum(w2 * _weight(y2, eta)))
    if abs(grid - norm) > 1e-9 * norm:
        raise ConvergenceError("CSL momentum grid under-resolved", estimate=norm,
                               error=abs(grid - norm), module="collapse")
    gamma = CSL_PREFACTOR * params.lambda_csl * (p.mass / NUCLEON_MASS) ** 2 * norm
    return CslRates(gamma, eta, params.r_c, grid)


def csl_gamma_and_f(p, params):
    """(Gamma_CSL [1/s], f_CSL) with f_CSL(0) = 1 and f_CSL(inf) = 0."""
    r = csl_rates(p, params)
    return r.gamma, r


def csl_log_kernel(ns, protocol, p, params, d):
    """ln R_n^CSL = Gamma (fbar(s_n) - 1)(t1 + t2), fbar the linear-ramp average of f."""
    ns = np.atleast_1d(np.asarray(ns, dtype=float))
    if np.any(ns < 0):
        raise DomainError("n must be non-negative")
    if params.lambda_csl == 0:
        return np.zeros(ns.shape)
    r = csl_rates(p, params)
    s = shift_length(ns, protocol, p.mass, d)
    return -r.gamma * r.one_minus_f_averaged(s) * protocol.total_time


def csl_kernel(n, protocol, p, params, d):
    out = np.exp(csl_log_kernel(n, protocol, p, params, d))
    return float(out[0]) if np.ndim(n) == 0 else out


def csl_absolute_factor(protocol, p, params):
    """exp(-Gamma_CSL (t1 + t2)): the large-separation limit of the kernel."""
    return math.exp(-csl_rates(p, params).gamma * protocol.total_time)


def _csl_bracket(eta):
    """[(1 + eta^2/2) e^{-eta^2} + eta^2/2 - 1] / eta^4, series below eta = 0.1."""
    eta = float(eta)
    e2 = eta * eta
    if eta < 0.1:
        return e2 / 12.0 - e2 ** 2 / 24.0 + e2 ** 3 / 80.0 - e2 ** 4 / 360.0 + e2 ** 5 / 2016.0
    return ((1 + e2 / 2) * math.exp(-e2) + e2 / 2 - 1) / (e2 * e2)


def csl_diffusion(p, params):
    """Lambda_CSL [1/(m^2 s)]."""
    eta = p.radius / params.r_c
    return 6.0 * params.lambda_csl * p.mass ** 2 / (NUCLEON_MASS ** 2 * p.radius ** 2) * _csl_bracket(eta)


def _dp_bracket(eta):
    if eta < 0.05:
        # leading terms of the expansion; the closed form cancels catastrophically here
        return eta ** 3 / 6.0 - eta ** 5 / 20.0 + 3.0 * eta ** 7 / 280.0
    return (math.sqrt(math.pi) * math.erf(eta) - 3.0 / eta + 2.0 / eta ** 3
            + math.exp(-eta * eta) / eta * (1.0 - 2.0 / eta ** 2))


def dp_diffusion(p, params):
    """Lambda_DP [1/(m^2 s)] for the Diosi-Penrose model with resolution R0."""
    eta = p.radius / params.R0
    if not eta > 0:
        raise DomainError("eta_DP must be positive")
    return p.mass ** 2 * G / (2 * hbar * math.sqrt(math.pi) * p.radius ** 3) * _dp_bracket(eta)
