import math

import numpy as np
import pytest
from scipy.constants import hbar

from nanotalbot import collapse, noninterf as ni, specs
from nanotalbot.errors import DomainError


def test_accel_noise_formula():
    assert ni.accel_noise_requirement(2e-6, 10.0) == pytest.approx(
        math.sqrt(3 * 4e-12 / (8 * math.pi * 1000)))
    with pytest.raises(DomainError):
        ni.accel_noise_requirement(0.0, 1.0)


def test_variance_growth_cubic():
    assert ni.variance_growth(2.0, 1e-17, 20.0) / ni.variance_growth(2.0, 1e-17, 10.0) == pytest.approx(8)
    assert ni.variance_growth(1.0, 1.0, 1.0) == pytest.approx(2 * hbar ** 2 / 3)


def test_statistical_limit_requires_one_frequency():
    with pytest.raises(DomainError):
        ni.statistical_limit(100, 1e6, 1e-17)
    with pytest.raises(DomainError):
        ni.statistical_limit(100, 1e6, 1e-17, omega=1.0, nu=1.0)
    a = ni.statistical_limit(100, 1e6, 1e-17, omega=2 * math.pi * 5)
    assert a == pytest.approx(ni.statistical_limit(100, 1e6, 1e-17, nu=5))


def test_decoherence_function_regimes(sphere, env):
    p = sphere(1e9)
    b = ni.diffusion_budget(p, env)
    x = 1e-15
    assert ni.decoherence_function(x, p, env) == pytest.approx((b.gas + b.blackbody) * x * x, rel=1e-6)
    from nanotalbot.decoherence import collision_rate
    big = ni.decoherence_function(1e-3, p, env)
    assert big == pytest.approx(collision_rate(p, env) + b.blackbody * 1e-6, rel=1e-9)


def test_bounds_are_consistent(sphere, env):
    p = sphere(1e9)
    r_c = np.geomspace(1e-9, 1e-5, 5)
    env_bound = ni.bound_curve(r_c, p, env)
    for rc, lam in zip(r_c, env_bound):
        b = ni.diffusion_budget(p, env, specs.CslParams(lam, rc))
        assert b.csl == pytest.approx(b.gas + b.blackbody, rel=1e-12)
    stats = ni.bound_curve(r_c, p, env, ni.StatisticsMode())
    assert np.all(stats > 0)


def test_bound_csv(tmp_path):
    path = ni.write_bound_csv(tmp_path / "b.csv", [1e-7], [2.5e-9], "environment")
    lines = path.read_text().splitlines()
    assert lines[0] == "r_c_m,lambda_min_per_s,mode" and float(lines[1].split(",")[1]) == 2.5e-9


def test_negative_budget_rejected():
    with pytest.raises(DomainError):
        ni.DiffusionBudget(-1.0, 0.0)


def test_statistics_limit_scaling():
    a = ni.statistical_limit(10.0, 1e9, 1e-17, omega=1e5)
    b = ni.statistical_limit(20.0, 1e9, 1e-17, omega=1e5)
    assert b / a == pytest.approx(2 ** 1.25)


def test_decoherence_function_monotone(sphere, env):
    x = np.geomspace(1e-12, 1e-2, 200)
    g = ni.decoherence_function(x, sphere(1e9), env)
    assert ni.decoherence_function(0.0, sphere(1e9), env) == 0.0
    assert np.all(np.diff(g) >= 0)


def test_bound_curves_shape(silica, hydrogen):
    p = specs.ParticleSpec.from_radius(60e-9, silica)
    r_c = np.geomspace(1e-9, 1e-3, 25)
    env_curve = ni.bound_curve(r_c, p, specs.EnvironmentSpec(20.0, 1e-11, hydrogen))
    low_p = specs.EnvironmentSpec(20.0, 3e-14, hydrogen)
    stats_curve = ni.bound_curve(r_c, p, low_p, ni.StatisticsMode())
    assert np.all(stats_curve < env_curve)
    # U shape with the minimum near the particle size
    i = int(np.argmin(env_curve))
    assert 0 < i < len(r_c) - 1 and 1e-8 < r_c[i] < 1e-6
    assert np.all(np.diff(env_curve[:i + 1]) < 0) and np.all(np.diff(env_curve[i:]) > 0)


def test_environment_bound_linear_in_budget(sphere, hydrogen):
    p = sphere(1e9, internal_temperature=0.0)
    assert ni.csl_bound_noninterf(1e-7, p, specs.EnvironmentSpec(0.0, 0.0, hydrogen)) == 0.0
    bound = lambda pr: ni.csl_bound_noninterf(1e-7, p, specs.EnvironmentSpec(20.0, pr, hydrogen))
    zero = bound(0.0)
    assert bound(1e-11) > zero
    assert bound(2e-11) - zero == pytest.approx(2 * (bound(1e-11) - zero), rel=1e-9)
