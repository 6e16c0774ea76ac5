"""Optical phase grating: grating functions and generalized Talbot coefficients.

The grating acts on the density matrix through a mask in the centre
coordinate theta = 2 pi z/d, evaluated at the shift s between the two
density-matrix arguments::

    M(theta) = exp(F - c/2 + (a + c/2) cos(theta) + i (zeta - b) sin(theta))

and B_n(s/d) is the n-th Fourier coefficient of M.  Two independent
constructions are provided.  The exact path convolves the coherent
coefficients, built from the Fourier series of t(z) = exp(-i phi0 cos^2 kz),
with a DFT of the incoherent part of the mask.  The closed form sums
products of Bessel functions.  They must agree; :func:`talbot_quantum`
can cross-check every call.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.constants import c, hbar

from .errors import DomainError, InternalConsistencyError
from .mie import azimuthal_kernels, cross_sections, particle_mie, particle_phase

# zeta_coh = ZETA_NORMALIZATION * phi0 * sin(pi s/d); see calibrate_zeta_normalization
ZETA_NORMALIZATION = -1.0
CONSISTENCY_TOL = 1e-6
_ZETA_CANDIDATES = (-4.0, -1.0, -0.25, 0.25, 1.0, 4.0)


@dataclass(frozen=True)
class GratingFunctions:
    """Grating functions sampled at the shifts in ``shift`` (arrays, same shape)."""
    shift: np.ndarray
    period: float
    phi0: float
    a: np.ndarray
    b: np.ndarray
    F: np.ndarray
    c_abs: np.ndarray
    zeta_coh: np.ndarray

    def __len__(self):
        return np.size(self.shift)

    def at(self, i):
        """Scalar view of the i-th shift."""
        pick = lambda v: np.atleast_1d(v)[i:i + 1]
        return GratingFunctions(pick(self.shift), self.period, self.phi0, pick(self.a),
                                pick(self.b), pick(self.F), pick(self.c_abs),
                                pick(self.zeta_coh))


@dataclass(frozen=True)
class TalbotCoefficients:
    values: np.ndarray  # B_0..B_N
    shift: float
    truncation: int
    kind: str


def photon_fluence(grating):
    """Photons per unit area in each travelling wave, E_L/(hbar omega a_L)."""
    return grating.pulse_energy_per_area / (hbar * c * grating.k)


@lru_cache(maxsize=256)
def _particle_optics(particle, grating):
    s = particle_mie(particle, grating.k)
    sigma_abs = cross_sections(s, grating.k)[1]
    return s, sigma_abs, particle_phase(particle, grating)


def grating_functions(particle, grating, s, classical=False):
    """a, b, F, c_abs and zeta_coh at shift(s) ``s`` [m].

    With ``classical=True`` the hbar -> 0 limit is returned instead: only the
    linearised momentum-kick parts of zeta_coh and b survive.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    k, d = grating.k, grating.period
    mie_sol, sigma_abs, phi0 = _particle_optics(particle, grating)
    mu, w, g, f2 = azimuthal_kernels(mie_sol, k)
    pref = 2.0 * photon_fluence(grating)
    ks = k * s[:, None]
    if classical:
        zero = np.zeros_like(s)
        b = pref * (ks * mu) @ (w * g.imag)
        zeta = ZETA_NORMALIZATION * phi0 * np.pi * s / d
        return GratingFunctions(s, d, phi0, zero, b, zero.copy(), zero.copy(), zeta)
    a = pref * (np.cos(ks * mu) - np.cos(ks)) @ (w * g.real)
    b = pref * np.sin(ks * mu) @ (w * g.imag)
    F = pref * (np.cos((1.0 - mu) * ks) - 1.0) @ (w * f2)
    c_abs = 4.0 * sigma_abs * photon_fluence(grating) * (1.0 - np.cos(np.pi * s / d))
    zeta = ZETA_NORMALIZATION * phi0 * np.sin(np.pi * s / d)
    return GratingFunctions(s, d, phi0, a, b, F, c_abs, zeta)


def synthetic_functions(phi0, xi, a=0.0, b=0.0, F=0.0, c_abs=0.0, period=1.0):
    """GratingFunctions from explicit values (used by oracles and tests)."""
    arr = lambda v: np.atleast_1d(np.asarray(v, dtype=float))
    xi = arr(xi)
    zeta = ZETA_NORMALIZATION * phi0 * np.sin(np.pi * xi)
    one = np.ones_like(xi)
    return GratingFunctions(xi * period, period, float(phi0), arr(a) * one, arr(b) * one,
                            arr(F) * one, arr(c_abs) * one, zeta)


def _order_cutoff(x):
    x = abs(x)
    return int(np.ceil(x + 10.0 * (1.0 + x ** (1 / 3)))) + 4


def coherent_fourier_coefficients(phi0, N=None):
    """b_k, k = -N..N, of t(z) = exp(-i phi0 cos^2(k z)) over one period d."""
    N = _order_cutoff(phi0 / 2) if N is None else int(N)
    if N < 0:
        raise DomainError("N must be non-negative")
    k = np.arange(-N, N + 1)
    return np.exp(-0.5j * phi0) * (-1j) ** k * special.jv(k, 0.5 * phi0)


def coherent_talbot(n_orders, phi0, xi):
    """B^coh_n(xi) = sum_k b_k b*_{k-n} exp(i pi (n - 2k) xi) for each n in n_orders."""
    K = _order_cutoff(phi0 / 2)
    bk = coherent_fourier_coefficients(phi0, K)
    k = np.arange(-K, K + 1)
    out = []
    for n in np.atleast_1d(n_orders):
        n = int(n)
        j = k - n
        ok = np.abs(j) <= K
        terms = bk[ok] * np.conj(bk[j[ok] + K]) * np.exp(1j * np.pi * (n - 2 * k[ok]) * xi)
        out.append(terms.sum())
    return np.array(out)


def _mask_samples(gf, M):
    theta = 2 * np.pi * np.arange(M) / M
    A = gf.a[0] + 0.5 * gf.c_abs[0]
    return np.exp(gf.F[0] - 0.5 * gf.c_abs[0] + A * np.cos(theta) - 1j * gf.b[0] * np.sin(theta))


def talbot_exact(n, gf, M=None):
    """Exact-path B_n for a single shift: coherent series convolved with the mask DFT."""
    if len(gf) != 1:
        raise DomainError("talbot_exact takes a single shift")
    n = int(n)
    xi = gf.shift[0] / gf.period
    A = abs(gf.a[0] + 0.5 * gf.c_abs[0])
    J = _order_cutoff(abs(gf.b[0]) + A)
    if M is None:
        M = 1 << int(np.ceil(np.log2(max(256, 4 * J + 64))))
    R = np.fft.fft(_mask_samples(gf, M)) / M
    if ZETA_NORMALIZATION * np.sin(np.pi * xi) == 0 or gf.phi0 == 0:
        bc = {0: 1.0 + 0j}
    else:
        K = 2 * _order_cutoff(gf.phi0 / 2)
        orders = np.arange(n - J, n + J + 1)
        orders = orders[np.abs(orders) <= K]
        bc = dict(zip(orders.tolist(), coherent_talbot(orders, gf.phi0, xi)))
    total = 0j
    for m, value in bc.items():
        j = n - m
        if abs(j) > J or abs(j) >= M // 2:
            continue
        total += value * R[j % M]
    return complex(total)


def _bessel_tau_power(m, x, tau, zeta, A):
    """J_m(x) * tau**m with the x -> 0 limit handled."""
    if abs(x) < 1e-8 * max(1.0, abs(zeta), abs(A)):
        if m >= 0:
            return (0.5 * (zeta + A)) ** m / special.factorial(m)
        return (-0.5 * (zeta - A)) ** (-m) / special.factorial(-m)
    return special.jv(m, x) * tau ** m


def _bessel_tau_series(m, zeta, A, log_scale=0.0, terms=80):
    """exp(log_scale) J_m(x) tau^m from its power series in zeta +- A.

    Uses x tau = zeta + A and x / tau = zeta - A; taken where J_m underflows
    or tau^m overflows, which happens for |m| >> |x| where the series
    converges quickly.
    """
    m = np.asarray(m)
    am = np.abs(m).astype(float)
    base = np.where(m >= 0, 0.5 * (zeta + A), -0.5 * (zeta - A)).astype(complex)
    q = -0.25 * complex(zeta * zeta - A * A)
    with np.errstate(divide="ignore"):
        lead = np.exp(am * np.log(base) - special.gammaln(am + 1) + log_scale)
    lead = np.where(base == 0, np.where(am == 0, np.exp(log_scale), 0.0), lead)
    total = np.ones(m.shape, dtype=complex)
    t = np.ones(m.shape, dtype=complex)
    for j in range(1, terms):
        t = t * q / (j * (am + j))
        total += t
        if np.all(np.abs(t) <= 1e-17 * np.abs(total)):
            break
    return lead * total


def talbot_closed_form(n, gf):
    """Closed-form B_n (Bessel-product series) for each shift in ``gf``."""
    n = int(n)
    out = np.empty(len(gf), dtype=complex)
    for i in range(len(gf)):
        A = gf.a[i] + 0.5 * gf.c_abs[i]
        zeta, b = gf.zeta_coh[i], gf.b[i]
        log_pref = gf.F[i] - 0.5 * gf.c_abs[i]
        x = np.sqrt(complex(zeta * zeta - A * A))
        tau = (zeta + A) / x if x != 0 else 0.0
        K = _order_cutoff(b)
        k = np.arange(-K, K + 1)
        jb = special.jv(k, b)
        m = n + k
        if abs(x) < 1e-8 * max(1.0, abs(zeta), abs(A)):
            terms = np.exp(log_pref) * np.array(
                [_bessel_tau_power(mm, x, tau, zeta, A) for mm in m])
        else:
            # jve removes exp(|Im x|); fold it into the prefactor so that
            # large absorption or loss channels cannot overflow
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                jm = special.jve(m, x)
                terms = jm * tau ** m * np.exp(log_pref + abs(x.imag))
            bad = ~np.isfinite(terms) | (jm == 0)
            if np.any(bad):
                terms[bad] = _bessel_tau_series(m[bad], zeta, A, log_pref)
        out[i] = np.sum(jb * terms)
    return out


def talbot_quantum(n, s, particle, grating, check=False):
    """Quantum B_n at shift ``s`` [m] (closed form, optionally cross-checked)."""
    gf = grating_functions(particle, grating, s)
    value = talbot_closed_form(n, gf)
    if check:
        for i in range(len(gf)):
            exact = talbot_exact(n, gf.at(i))
            if abs(exact - value[i]) > CONSISTENCY_TOL:
                raise InternalConsistencyError(
                    f"Talbot coefficient paths disagree at n={n}, s={gf.shift[i]:.3e}: "
                    f"|diff| = {abs(exact - value[i]):.2e}")
    return value[0] if value.size == 1 else value


def talbot_classical(n, s, particle, grating):
    """Classical (ballistic) B_n^cl at shift ``s`` [m]; real valued."""
    gf = grating_functions(particle, grating, s, classical=True)
    value = special.jv(int(n), gf.zeta_coh - gf.b)
    return float(value[0]) if value.size == 1 else value


def talbot_series(kind, orders, gf):
    """B_n for paired arrays: order orders[i] evaluated at gf shift i."""
    orders = np.atleast_1d(orders)
    if len(orders) != len(gf):
        raise DomainError("orders and shifts must pair up")
    if kind == "classical":
        return special.jv(orders, gf.zeta_coh - gf.b).astype(complex)
    return np.array([talbot_closed_form(n, gf.at(i))[0] for i, n in enumerate(orders)])


def talbot_coefficients(kind, s, particle, grating, N):
    """TalbotCoefficients B_0..B_N at a single shift."""
    if kind not in ("quantum", "classical", "coherent"):
        raise DomainError(f"unknown kind {kind!r}")
    orders = np.arange(N + 1)
    if kind == "classical":
        values = np.array([talbot_classical(n, s, particle, grating) for n in orders], complex)
    elif kind == "coherent":
        phi0 = particle_phase(particle, grating)
        values = coherent_talbot(orders, phi0, s / grating.period)
    else:
        gf = grating_functions(particle, grating, s)
        values = np.array([talbot_closed_form(n, gf)[0] for n in orders])
    return TalbotCoefficients(values, float(s), int(N), kind)


def calibrate_zeta_normalization(phi0=1.0, xis=(0.13, 0.37, 0.61, 0.88), orders=range(-3, 4)):
    """Pick the zeta_coh prefactor (in units of phi0) that matches the exact path.

    For a pure phase grating the closed form collapses to J_n(zeta_coh); the
    candidate minimising the mismatch with the Fourier-series construction is
    returned with its residual.
    """
    exact = np.array([coherent_talbot(list(orders), phi0, xi) for xi in xis])
    best = None
    for eta in _ZETA_CANDIDATES:
        trial = np.array([special.jv(list(orders), eta * phi0 * np.sin(np.pi * xi)) for xi in xis])
        resid = float(np.max(np.abs(trial - exact)))
        if best is None or resid < best[1]:
            best = (eta, resid)
    return best
