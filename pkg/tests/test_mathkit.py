import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nanotalbot import mathkit
from nanotalbot.errors import ConvergenceError, DomainError


def test_bessel_reference_values():
    # Abramowitz & Stegun table values
    assert mathkit.bessel_j(0, 1.0) == pytest.approx(0.7651976865579666, rel=1e-14)
    assert mathkit.bessel_j(1, 2.5) == pytest.approx(0.4970941024642741, rel=1e-13)
    assert mathkit.bessel_j(-3, 1.0) == pytest.approx(-0.019563353982668405, rel=1e-13)


def test_bessel_rejects_huge_order_and_nonfinite():
    with pytest.raises(DomainError):
        mathkit.bessel_j(20000, 1.0)
    with pytest.raises(DomainError):
        mathkit.bessel_j(0, np.inf)


@given(st.integers(-50, 50), st.floats(-200, 200))
def test_bessel_reflection(n, x):
    assert mathkit.bessel_j(-n, x) == pytest.approx((-1) ** n * mathkit.bessel_j(n, x), abs=1e-14)


def test_sine_integral_values():
    assert mathkit.sine_integral(1.0) == pytest.approx(0.9460830703671830, rel=1e-14)
    assert mathkit.sine_integral(1e6) == pytest.approx(math.pi / 2, abs=1e-5)
    assert mathkit.sine_integral(-2.0) == -mathkit.sine_integral(2.0)


@given(st.floats(0, 1e-3))
def test_si_over_x_series_matches_direct(x):
    direct = mathkit.sine_integral(max(x, 2e-4)) / max(x, 2e-4)
    if x >= 2e-4:
        assert mathkit.si_over_x(np.array([x]))[0] == pytest.approx(direct, rel=1e-13)
    assert 0.9999 < mathkit.si_over_x(np.array([x]))[0] <= 1.0


def test_sinc_limits():
    assert mathkit.sinc(0.0) == 1.0
    assert mathkit.sinc(math.pi) == pytest.approx(0.0, abs=1e-16)


def test_gauss_legendre_exact_for_polynomials():
    x, w = mathkit.gauss_legendre_interval(0.0, 2.0, 10)
    assert np.sum(w * x ** 19) == pytest.approx(2 ** 20 / 20, rel=1e-13)
    x, _ = mathkit.gauss_legendre(8)
    assert not x.flags.writeable


def test_integrate_semi_infinite_planck():
    val = mathkit.integrate(lambda x: x ** 3 * math.exp(-x) / -math.expm1(-x) if x > 0 else 0.0, 0, math.inf, scale=3.0)
    assert val == pytest.approx(math.pi ** 4 / 15, rel=1e-10)


def test_integrate_both_infinite_gaussian():
    assert mathkit.integrate(lambda x: math.exp(-x * x), -math.inf, math.inf) == pytest.approx(
        math.sqrt(math.pi), rel=1e-10)


def test_integrate_reports_non_convergence():
    q = mathkit.QuadratureSpec(rel_tol=1e-14, abs_tol=1e-300, max_subdivisions=2)
    with pytest.raises(ConvergenceError) as exc:
        mathkit.integrate(lambda x: math.sin(1 / x) if x else 0.0, 0.0, 1.0, q)
    assert exc.value.estimate is not None


def test_integrate_bad_interval():
    with pytest.raises(DomainError):
        mathkit.integrate(math.sin, 1.0, 1.0)
