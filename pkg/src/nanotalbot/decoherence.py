"""Environmental decoherence during free fall.

Thermal-photon rates are spectral densities (per unit angular frequency);
every frequency integral runs on a composite Gauss-Legendre grid in log(omega),
split at the permittivity-table nodes so the piecewise-linear material data
never sits inside a panel.  The grid is checked against one with twice the
nodes when it is built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.constants import c, h, hbar, k as k_B
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, DomainError
from .material import c6_coefficient, permittivity
from .mathkit import gauss_legendre, gauss_legendre_interval, si_over_x, sinc
from .mie import cross_sections, solve_mie

SPECTRAL_TOL = 1e-7
_LOW, _HIGH = 1e-4, 80.0  # integration window in units of k_B T / hbar
_GAMMA_PREFACTOR = 4 * math.pi * special.gamma(0.9) / (5 * math.sin(math.pi / 5))


def collision_rate(p, env):
    """Total rate of van der Waals collisions with the residual gas [1/s]."""
    if env.pressure == 0 or env.temperature == 0:
        return 0.0
    C6 = c6_coefficient(p.material, p.radius, env.gas)
    n_gas = env.pressure / (k_B * env.temperature)
    v = env.gas_mean_velocity
    # (3 pi C6 / 2 hbar)^(2/5) has units m^(12/5) s^(-2/5); v^(3/5) closes 1/s
    return float(_GAMMA_PREFACTOR * (3 * math.pi * C6 / (2 * hbar)) ** 0.4 * n_gas * v ** 0.6)


def gas_diffusion(p, env):
    """Quadratic-regime gas coefficient Lambda_gas = Gamma_coll (m_g v_g / hbar)^2."""
    q = env.gas.mass * env.gas_mean_velocity / hbar
    return collision_rate(p, env) * q * q


def _sigmas(p, omega):
    sca = np.empty_like(omega)
    ab = np.empty_like(omega)
    eps = permittivity(p.material, omega)
    for i, (w, e) in enumerate(zip(omega, np.atleast_1d(eps))):
        s = solve_mie(p.radius, w / c, np.sqrt(complex(e)))
        sca[i], ab[i] = cross_sections(s, w / c)[:2]
    return sca, ab, np.atleast_1d(eps)


@dataclass(frozen=True)
class SpectralGrid:
    omega: np.ndarray
    weight: np.ndarray
    sigma_sca: np.ndarray
    sigma_abs: np.ndarray
    eps: np.ndarray


def _panels(material, lo, hi, n):
    edges = np.unique(np.concatenate([
        np.geomspace(lo, hi, int(np.ceil(np.log10(hi / lo) * 2)) + 1),
        material.omega[(material.omega > lo) & (material.omega < hi)]]))
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre_interval(math.log(a), math.log(b), n)
        xs.append(np.exp(x))
        ws.append(w * np.exp(x))
    return np.concatenate(xs), np.concatenate(ws)


@lru_cache(maxsize=128)
def spectral_grid(p, temperature, nodes=16):
    """Frequency grid covering the thermal spectrum at ``temperature``."""
    if not temperature > 0:
        raise DomainError("spectral grid needs a positive temperature")
    wT = k_B * temperature / hbar
    omega, weight = _panels(p.material, _LOW * wT, _HIGH * wT, nodes)
    sca, ab, eps = _sigmas(p, omega)
    return SpectralGrid(omega, weight, sca, ab, eps)


def _checked_grid(p, temperature, rate):
    """Grid whose integral of ``rate(grid)`` matches the doubled-node grid."""
    g1 = spectral_grid(p, temperature, 16)
    g2 = spectral_grid(p, temperature, 32)
    i1, i2 = np.sum(g1.weight * rate(g1)), np.sum(g2.weight * rate(g2))
    if abs(i1 - i2) > SPECTRAL_TOL * abs(i2) + 1e-300:
        raise ConvergenceError("spectral integral not converged", estimate=i2,
                               error=abs(i1 - i2), module="decoherence")
    return g2


def _occupation(omega, T):
    if T <= 0:
        return np.zeros_like(omega)
    return 1.0 / np.expm1(hbar * omega / (k_B * T))


def _emission_factor(omega, T_int, eps, form):
    if T_int <= 0:
        return np.zeros_like(omega)
    boltz = np.exp(-hbar * omega / (k_B * T_int))
    if form == "literal":
        return boltz * np.imag((eps - 1) / (eps + 2))
    return boltz


def _rates_on(grid, T_env, T_int, form):
    pref = (grid.omega / (math.pi * c)) ** 2
    occ = _occupation(grid.omega, T_env)
    return (pref * grid.sigma_sca * occ, pref * grid.sigma_abs * occ,
            pref * grid.sigma_abs * _emission_factor(grid.omega, T_int, grid.eps, form))


def bb_rates(p, omega, T, T_int=None, emission_form="kirchhoff"):
    """Spectral rates (gamma_sca, gamma_abs, gamma_emi) at ``omega``.

    gamma_sca and gamma_abs use the Planck occupation at the environment
    temperature T; gamma_emi uses the particle temperature (defaults to the
    particle's internal temperature).  ``emission_form="literal"`` adds the
    extra Im[(eps-1)/(eps+2)] factor.
    """
    if emission_form not in ("kirchhoff", "literal"):
        raise DomainError(f"unknown emission form {emission_form!r}")
    if T < 0:
        raise DomainError("temperature must be non-negative")
    T_int = p.internal_temperature if T_int is None else T_int
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    sca, ab, eps = _sigmas(p, omega)
    grid = SpectralGrid(omega, np.ones_like(omega), sca, ab, eps)
    out = _rates_on(grid, T, T_int, emission_form)
    if out[0].size == 1:
        return tuple(float(x[0]) for x in out)
    return out


def emitted_power(p, T_int, emission_form="kirchhoff"):
    """Radiated power int d(omega) hbar omega gamma_emi [W]."""
    if T_int <= 0:
        return 0.0
    def integrand(g):
        return hbar * g.omega * _rates_on(g, 0.0, T_int, emission_form)[2]
    g = _checked_grid(p, T_int, integrand)
    return float(np.sum(g.weight * integrand(g)))


@lru_cache(maxsize=64)
def _cooling_solution(p, t_end, emission_form):
    T0 = p.internal_temperature
    if T0 <= 0:
        return None
    heat_capacity = p.mass * p.material.specific_heat
    # emission on a fixed grid spanning the initial temperature
    g = spectral_grid(p, T0, 32)
    base = hbar * g.omega * (g.omega / (math.pi * c)) ** 2 * g.sigma_abs
    if emission_form == "literal":
        base = base * np.imag((g.eps - 1) / (g.eps + 2))
    if not np.any(base > 0):
        return None

    def rhs(_, y):
        T = max(y[0], 1e-9)
        return [-np.sum(g.weight * base * np.exp(-hbar * g.omega / (k_B * T))) / heat_capacity]

    sol = solve_ivp(rhs, (0.0, t_end), [T0], method="RK45", rtol=1e-10, atol=1e-12,
                    dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"internal-temperature ODE failed: {sol.message}",
                               module="decoherence")
    return sol.sol


def internal_temperature(p, t, emission_form="kirchhoff", horizon=None):
    """Internal temperature t seconds after release [K]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("time must be non-negative")
    if p.temperature_model == "constant":
        out = np.full(t_arr.shape, p.internal_temperature, dtype=float)
    else:
        t_end = float(max(np.max(t_arr), horizon or 0.0, 1e-9))
        # round the horizon up so nearby calls share one trajectory
        t_end = _horizon(t_end)
        sol = _cooling_solution(p, t_end, emission_form)
        out = (np.full(t_arr.shape, p.internal_temperature, dtype=float) if sol is None
               else np.asarray(sol(t_arr.ravel())[0]).reshape(t_arr.shape))
    return float(out) if out.ndim == 0 else out


def _horizon(t):
    return float(2.0 ** math.ceil(math.log2(t)))


def shift_length(n, protocol, mass, d):
    """s_n = n h t1 t2 / (m d (t1 + t2))."""
    t1, t2 = protocol.t1, protocol.t2
    return np.asarray(n, dtype=float) * h * t1 * t2 / (mass * d * (t1 + t2))


def absorption_bracket(a):
    return si_over_x(a) - 1.0


def scattering_bracket(a):
    """Si(2a)/a - sinc(a)^2 - 1, written as 2 Si(2a)/(2a) to stay finite at 0."""
    return 2.0 * si_over_x(2.0 * np.asarray(a, dtype=float)) - sinc(a) ** 2 - 1.0


@dataclass(frozen=True)
class KernelOptions:
    scattering_time: str = "sum"        # "sum" -> (t1+t2); "difference" -> literal (t1-t2)
    collisions: str = "relative"        # "relative" divides out the collision term; "absolute" keeps it for n>=1
    emission_form: str = "kirchhoff"
    theta_nodes: int = 32

    def __post_init__(self):
        if self.scattering_time not in ("sum", "difference"):
            raise DomainError("scattering_time must be 'sum' or 'difference'")
        if self.collisions not in ("relative", "absolute"):
            raise DomainError("collisions must be 'relative' or 'absolute'")
        if self.emission_form not in ("kirchhoff", "literal"):
            raise DomainError("emission_form must be 'kirchhoff' or 'literal'")


DEFAULT_KERNEL = KernelOptions()


def _emission_log(a_grid, g, p, protocol, opts, nodes):
    """int d(omega) int_0^1 d(theta) {t1 gamma(T(t1 - t1 theta)) + t2 gamma(T(t1 + t2 theta))}[sinc(a theta) - 1]."""
    theta, wt = gauss_legendre_interval(0.0, 1.0, nodes)
    t1, t2 = protocol.t1, protocol.t2
    pref = (g.omega / (math.pi * c)) ** 2 * g.sigma_abs
    if opts.emission_form == "literal":
        pref = pref * np.imag((g.eps - 1) / (g.eps + 2))
    if p.temperature_model == "constant":
        T_int = p.internal_temperature
        if T_int <= 0:
            return np.zeros(a_grid.shape[0])
        gam = pref * np.exp(-hbar * g.omega / (k_B * T_int))
        # constant temperature: theta integral in closed form
        return (t1 + t2) * ((si_over_x(a_grid) - 1.0) @ (g.weight * gam))
    T1 = internal_temperature(p, t1 - t1 * theta, opts.emission_form, horizon=t1 + t2)
    T2 = internal_temperature(p, t1 + t2 * theta, opts.emission_form, horizon=t1 + t2)
    boltz = lambda T: np.exp(-hbar * g.omega[None, :] / (k_B * np.maximum(T, 1e-9)[:, None]))
    gam_t = t1 * boltz(T1) + t2 * boltz(T2)  # (theta, omega)
    out = np.empty(a_grid.shape[0])
    for i, a_row in enumerate(a_grid):
        br = sinc(np.outer(theta, a_row)) - 1.0  # (theta, omega)
        out[i] = np.sum(wt[:, None] * br * gam_t * (g.weight * pref)[None, :])
    return out


def env_log_kernel(ns, protocol, p, env, grating, opts=DEFAULT_KERNEL):
    """ln R_n for each n in ``ns`` (array)."""
    ns = np.atleast_1d(np.asarray(ns, dtype=float))
    if np.any(ns < 0):
        raise DomainError("n must be non-negative")
    t1, t2 = protocol.t1, protocol.t2
    s = shift_length(ns, protocol, p.mass, grating.period)
    out = np.zeros(ns.shape)
    if opts.collisions == "absolute":
        out -= np.where(ns > 0, collision_rate(p, env) * (t1 + t2), 0.0)
    if env.temperature > 0:
        g = _checked_grid(p, env.temperature,
                          lambda gr: _rates_on(gr, env.temperature, 0.0, "kirchhoff")[1]
                          + _rates_on(gr, env.temperature, 0.0, "kirchhoff")[0])
        sca, ab, _ = _rates_on(g, env.temperature, 0.0, "kirchhoff")
        a = np.outer(s, g.omega / c)
        t_sca = (t1 + t2) if opts.scattering_time == "sum" else (t1 - t2)
        out += (t1 + t2) * (absorption_bracket(a) @ (g.weight * ab))
        out += t_sca * (scattering_bracket(a) @ (g.weight * sca))
    T_top = p.internal_temperature
    if T_top > 0:
        ge = spectral_grid(p, T_top, 32)
        a = np.outer(s, ge.omega / c)
        out += _emission_log(a, ge, p, protocol, opts, opts.theta_nodes)
    return out


def env_kernel(n, protocol, p, env, grating, opts=DEFAULT_KERNEL):
    """Environmental kernel R_n in (0, 1] (scalar n or array)."""
    out = np.exp(env_log_kernel(n, protocol, p, env, grating, opts))
    return float(out[0]) if np.ndim(n) == 0 else out


def survival_probability(protocol, p, env):
    """exp(-Gamma_coll (t1 + t2)): fraction of runs free of gas collisions."""
    return math.exp(-collision_rate(p, env) * protocol.total_time)


@dataclass(frozen=True)
class BlackbodyDiffusion:
    scattering: float
    absorption: float
    emission: float

    @property
    def total(self):
        return self.scattering + self.absorption + self.emission


def blackbody_diffusion(p, env, emission_form="kirchhoff"):
    """Quadratic-regime blackbody coefficients: int d(omega) k^2 gamma x {1/3, 1/6, 1/6}."""
    parts = [0.0, 0.0, 0.0]
    if env.temperature > 0:
        def f(gr):
            sca, ab, _ = _rates_on(gr, env.temperature, 0.0, "kirchhoff")
            return (gr.omega / c) ** 2 * (sca / 3 + ab / 6)
        g = _checked_grid(p, env.temperature, f)
        sca, ab, _ = _rates_on(g, env.temperature, 0.0, "kirchhoff")
        k2 = (g.omega / c) ** 2
        parts[0] = float(np.sum(g.weight * k2 * sca) / 3)
        parts[1] = float(np.sum(g.weight * k2 * ab) / 6)
    T_int = p.internal_temperature
    if T_int > 0:
        def fe(gr):
            return (gr.omega / c) ** 2 * _rates_on(gr, 0.0, T_int, emission_form)[2]
        g = _checked_grid(p, T_int, fe)
        parts[2] = float(np.sum(g.weight * fe(g)) / 6)
    return BlackbodyDiffusion(*parts)
