"""Non-interferometric tests: wave-packet spreading under momentum diffusion."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import hbar

from . import collapse, decoherence
from .errors import DomainError
from .specs import CslParams

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class DiffusionBudget:
    gas: float
    blackbody: float
    csl: float = 0.0
    dp: float = 0.0

    def __post_init__(self):
        if min(self.gas, self.blackbody, self.csl, self.dp) < 0:
            raise DomainError("diffusion components must be non-negative")

    @property
    def total(self):
        return self.gas + self.blackbody + self.csl + self.dp


def diffusion_budget(p, env, csl=None, dp=None):
    return DiffusionBudget(
        gas=decoherence.gas_diffusion(p, env),
        blackbody=decoherence.blackbody_diffusion(p, env).total,
        csl=collapse.csl_diffusion(p, csl) if csl is not None else 0.0,
        dp=collapse.dp_diffusion(p, dp) if dp is not None else 0.0,
    )


def decoherence_function(x, p, env):
    """Gamma(x) [1/s]: saturating gas term plus quadratic blackbody term."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("separation must be non-negative")
    gamma = decoherence.collision_rate(p, env)
    lam_gas = decoherence.gas_diffusion(p, env)
    lam_bb = decoherence.blackbody_diffusion(p, env).total
    gas = gamma * -np.expm1(-lam_gas * x * x / gamma) if gamma > 0 else np.zeros_like(x)
    out = gas + lam_bb * x * x
    return float(out) if out.ndim == 0 else out


def variance_growth(lam, m, t):
    """<Delta sigma^2> = 2 Lambda hbar^2 t^3 / (3 m^2) [m^2]."""
    if t < 0 or lam < 0:
        raise DomainError("time and diffusion constant must be non-negative")
    return 2.0 * lam * hbar ** 2 * t ** 3 / (3.0 * m ** 2)


def _angular(omega, nu):
    if (omega is None) == (nu is None):
        raise DomainError("give exactly one of omega [rad/s] or nu [Hz]")
    return omega if omega is not None else 2 * math.pi * nu


def statistical_limit(t, T_total, m, omega=None, nu=None):
    """Delta x_f [m] from Delta x_f^2 = sqrt(2 t/T) x_s^2, x_s^2 = t^2 omega hbar/(2 m)."""
    w = _angular(omega, nu)
    if not (T_total > t > 0):
        raise DomainError("need T_total > t > 0")
    xs2 = t * t * w * hbar / (2 * m)
    return math.sqrt(math.sqrt(2 * t / T_total) * xs2)


def accel_noise_requirement(d, T):
    """sqrt(S_aa) [m s^-2 / sqrt(Hz)] = sqrt(3 d^2 / (8 pi T^3))."""
    if not (d > 0 and T > 0):
        raise DomainError("d and T must be positive")
    return math.sqrt(3 * d * d / (8 * math.pi * T ** 3))


@dataclass(frozen=True)
class StatisticsMode:
    t: float = 100.0
    T_total: float = 30 * SECONDS_PER_DAY
    omega: float = 1e5
    resolution: float = 1e-12


def csl_bound_noninterf(r_c, p, env, mode="environment"):
    """Smallest excluded lambda_CSL [1/s] at r_c.

    ``mode="environment"``: Lambda_CSL equals the gas plus blackbody budget.
    A :class:`StatisticsMode` instead equates the CSL-induced variance with the
    statistical floor Delta x_f^2 + resolution^2.
    """
    unit = collapse.csl_diffusion(p, CslParams(1.0, r_c))
    if mode == "environment":
        budget = diffusion_budget(p, env)
        return (budget.gas + budget.blackbody) / unit
    if isinstance(mode, StatisticsMode):
        floor = statistical_limit(mode.t, mode.T_total, p.mass, omega=mode.omega) ** 2 \
            + mode.resolution ** 2
        return floor / variance_growth(unit, p.mass, mode.t)
    raise DomainError(f"unknown bound mode {mode!r}")


def bound_curve(r_c_values, p, env, mode="environment"):
    return np.array([csl_bound_noninterf(rc, p, env, mode) for rc in r_c_values])


def write_bound_csv(path, r_c_values, lambdas, mode_name):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["r_c_m", "lambda_min_per_s", "mode"])
        for rc, lam in zip(r_c_values, lambdas):
            w.writerow([f"{rc:.17g}", f"{lam:.17g}", mode_name])
    return path
