import math

import numpy as np
import pytest
from scipy.constants import c, hbar, k as k_B
from scipy.special import zeta

from nanotalbot import decoherence as dec, material, specs
from nanotalbot.errors import DomainError

EPS = 2.1 + 0.05j


@pytest.fixture(scope="module")
def flat():
    # frequency-independent permittivity, for textbook Rayleigh-regime formulas
    return material.Material("flat", 2000.0, 700.0, 5e-19,
                             ((1e8, EPS.real, EPS.imag), (1e16, EPS.real, EPS.imag)))


def test_blackbody_rates_match_rayleigh_closed_forms(flat, hydrogen):
    R, T = 5e-9, 20.0
    p = specs.ParticleSpec.from_radius(R, flat, internal_temperature=0.0)
    bb = dec.blackbody_diffusion(p, specs.EnvironmentSpec(T, 0.0, hydrogen))
    cm = material.cm_factor(EPS)
    x = k_B * T / (hbar * c)
    sca = 8 * math.factorial(8) * zeta(9) * c * R ** 6 / (9 * math.pi) * abs(cm) ** 2 * x ** 9
    ab = 16 * math.pi ** 5 * c * R ** 3 / 189 * cm.imag * x ** 6
    assert bb.scattering == pytest.approx(sca, rel=1e-6)
    assert bb.absorption == pytest.approx(ab, rel=1e-6)
    assert bb.emission == 0.0


def test_emission_equals_absorption_in_equilibrium(flat, hydrogen):
    p = specs.ParticleSpec.from_radius(5e-9, flat, internal_temperature=20.0)
    bb = dec.blackbody_diffusion(p, specs.EnvironmentSpec(20.0, 0.0, hydrogen))
    # Kirchhoff form: emitted and absorbed spectra differ only by the Bose factor
    assert bb.emission == pytest.approx(bb.absorption, rel=0.05)


def test_collision_rate_scalings(sphere, hydrogen):
    p = sphere(1e9)
    base = dec.collision_rate(p, specs.EnvironmentSpec(20.0, 1e-11, hydrogen))
    assert dec.collision_rate(p, specs.EnvironmentSpec(20.0, 2e-11, hydrogen)) == pytest.approx(2 * base)
    # n ~ 1/T and v^(3/5) ~ T^(3/10)
    assert dec.collision_rate(p, specs.EnvironmentSpec(40.0, 1e-11, hydrogen)) == pytest.approx(
        base * 2 ** -0.7)
    assert dec.collision_rate(p, specs.EnvironmentSpec(20.0, 0.0, hydrogen)) == 0.0


def test_gas_diffusion_definition(sphere, env):
    p = sphere(1e9)
    q = env.gas.mass * env.gas_mean_velocity / hbar
    assert dec.gas_diffusion(p, env) == pytest.approx(dec.collision_rate(p, env) * q * q)


def test_kernel_small_shift_limit(sphere, hydrogen):
    p = sphere(1e9, internal_temperature=0.0)
    e = specs.EnvironmentSpec(20.0, 0.0, hydrogen)
    prot, g = specs.ProtocolSpec(10, 10), specs.GratingSpec()
    lam = dec.blackbody_diffusion(p, e).total
    n = 1e-2
    s = dec.shift_length(n, prot, p.mass, g.period)
    ratio = -dec.env_log_kernel([n], prot, p, e, g)[0] / (lam * s * s * prot.total_time)
    assert ratio == pytest.approx(1 / 3, rel=1e-5)


def test_kernel_bounds_and_unit_at_zero(sphere, env):
    p, prot, g = sphere(1e9), specs.ProtocolSpec(10, 10), specs.GratingSpec()
    R = dec.env_kernel(np.arange(0, 50), prot, p, env, g)
    assert R[0] == 1.0
    assert np.all((R > 0) & (R <= 1))


def test_kernel_monotone_in_temperature(sphere, hydrogen):
    p, prot, g = sphere(1e9, internal_temperature=0.0), specs.ProtocolSpec(10, 10), specs.GratingSpec()
    ns = np.arange(1, 20)
    cold = dec.env_kernel(ns, prot, p, specs.EnvironmentSpec(10.0, 0.0, hydrogen), g)
    warm = dec.env_kernel(ns, prot, p, specs.EnvironmentSpec(30.0, 0.0, hydrogen), g)
    assert np.all(warm <= cold)


def test_absolute_collisions_option(sphere, env):
    p, prot, g = sphere(1e9), specs.ProtocolSpec(10, 10), specs.GratingSpec()
    rel = dec.env_log_kernel([0, 3], prot, p, env, g)
    ab = dec.env_log_kernel([0, 3], prot, p, env, g, dec.KernelOptions(collisions="absolute"))
    assert ab[0] == rel[0] == 0.0
    assert ab[1] - rel[1] == pytest.approx(-dec.collision_rate(p, env) * prot.total_time)


def test_literal_scattering_time_option(sphere, hydrogen):
    p = sphere(1e9, internal_temperature=0.0)
    e = specs.EnvironmentSpec(20.0, 0.0, hydrogen)
    g = specs.GratingSpec()
    opts = dec.KernelOptions(scattering_time="difference")
    # with t1 = t2 the literal form switches scattering off entirely
    lit = dec.env_log_kernel([5], specs.ProtocolSpec(10, 10), p, e, g, opts)[0]
    assert lit <= 0
    with pytest.raises(DomainError):
        dec.KernelOptions(scattering_time="bogus")


def test_radiative_cooling_is_monotone(sphere):
    p = sphere(1e9, temperature_model="radiative")
    t = np.array([0.0, 10.0, 50.0, 100.0])
    T = np.array([dec.internal_temperature(p, ti) for ti in t])
    assert T[0] == pytest.approx(40.0)
    assert np.all(np.diff(T) < 0) and T[-1] > 35.0


def test_survival_probability(sphere, env):
    p, prot = sphere(1e9), specs.ProtocolSpec(10, 10)
    assert dec.survival_probability(prot, p, env) == pytest.approx(
        math.exp(-dec.collision_rate(p, env) * 20))
