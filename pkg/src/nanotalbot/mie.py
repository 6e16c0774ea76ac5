"""Mie scattering by a homogeneous sphere and the standing-wave grating force.

Conventions follow Bohren & Huffman (time dependence exp(-i w t), absorbing
media have Im(m) > 0).  Vector far-field amplitudes are returned in metres,
so the scattered field is ``E0 * f(n) * exp(i k r) / r`` and
``dsigma/dOmega = |f|^2``.

The grating is a standing wave of two counter-propagating plane waves,
both linearly polarised along x.  ``I0 = c eps0 |E0|^2 / 2`` refers to the
antinode amplitude E0, so each travelling wave carries E0/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.constants import c, epsilon_0, hbar

from .errors import CapabilityError, DomainError
from .mathkit import gauss_legendre
from .material import permittivity

MAX_SIZE_PARAMETER = 1e4


@dataclass(frozen=True)
class MieSolution:
    size_parameter: float
    relative_index: complex
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    n_max: int

    def __hash__(self):
        return hash((self.size_parameter, self.relative_index, self.n_max))

    def __eq__(self, other):
        return (isinstance(other, MieSolution)
                and self.size_parameter == other.size_parameter
                and self.relative_index == other.relative_index
                and self.n_max == other.n_max)


def default_n_max(x):
    return int(np.ceil(x + 4.05 * x ** (1 / 3) + 2))


def solve_mie(R, k, m_rel, n_max=None):
    """Partial-wave coefficients a_n, b_n (n = 1..n_max)."""
    if not (R > 0 and k > 0):
        raise DomainError("radius and wavenumber must be positive")
    x = k * R
    if x > MAX_SIZE_PARAMETER:
        raise CapabilityError(f"size parameter {x:.3g} beyond the stable range")
    m_rel = complex(m_rel)
    n_max = default_n_max(x) if n_max is None else int(n_max)
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    n = np.arange(1, n_max + 1)
    mx = m_rel * x

    # logarithmic derivative D_n(mx), downward recurrence
    n_start = int(max(n_max, abs(mx))) + 16
    D = np.zeros(n_start + 1, dtype=complex)
    for j in range(n_start, 0, -1):
        D[j - 1] = j / mx - 1.0 / (D[j] + j / mx)
    D = D[1:n_max + 1]

    # Riccati-Bessel psi_n(x), xi_n(x), upward recurrence (x real)
    psi = np.empty(n_max + 1)
    chi = np.empty(n_max + 1)
    psi[0], chi[0] = np.sin(x), np.cos(x)
    psi_m1, chi_m1 = np.cos(x), -np.sin(x)
    prev_psi, prev_chi = psi_m1, chi_m1
    for j in range(1, n_max + 1):
        psi[j] = (2 * j - 1) / x * psi[j - 1] - (prev_psi if j == 1 else psi[j - 2])
        chi[j] = (2 * j - 1) / x * chi[j - 1] - (prev_chi if j == 1 else chi[j - 2])
    xi = psi - 1j * chi

    t_a = D / m_rel + n / x
    t_b = D * m_rel + n / x
    a = (t_a * psi[1:] - psi[:-1]) / (t_a * xi[1:] - xi[:-1])
    b = (t_b * psi[1:] - psi[:-1]) / (t_b * xi[1:] - xi[:-1])
    if m_rel == 1:
        a = np.zeros_like(a)
        b = np.zeros_like(b)
    a.flags.writeable = False
    b.flags.writeable = False
    return MieSolution(x, m_rel, a, b, n_max)


@lru_cache(maxsize=512)
def particle_mie(particle, k):
    """Mie solution for a particle at vacuum wavenumber k (bulk permittivity)."""
    eps = permittivity(particle.material, c * k)
    return solve_mie(particle.radius, k, np.sqrt(complex(eps)))


def angular_functions(n_max, mu):
    """pi_n(mu), tau_n(mu) for n = 1..n_max, shape (n_max, len(mu))."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    pi_n = np.zeros((n_max, mu.size))
    tau_n = np.zeros((n_max, mu.size))
    p_prev = np.zeros_like(mu)
    p = np.ones_like(mu)
    for j in range(1, n_max + 1):
        pi_n[j - 1] = p
        tau_n[j - 1] = j * mu * p - (j + 1) * p_prev
        p_next = ((2 * j + 1) * mu * p - (j + 1) * p_prev) / j
        p_prev, p = p, p_next
    return pi_n, tau_n


def amplitude_functions(s, mu):
    """Bohren-Huffman S1(mu), S2(mu) with mu = cos(scattering angle)."""
    pi_n, tau_n = angular_functions(s.n_max, mu)
    n = np.arange(1, s.n_max + 1)
    w = ((2 * n + 1) / (n * (n + 1)))[:, None]
    a, b = s.a_coeffs[:, None], s.b_coeffs[:, None]
    S1 = np.sum(w * (a * pi_n + b * tau_n), axis=0)
    S2 = np.sum(w * (a * tau_n + b * pi_n), axis=0)
    return S1, S2


def amplitude_vector(s, k, incidence, polarization, direction):
    """Vector far-field amplitude for arbitrary incidence and outgoing directions."""
    u = np.asarray(incidence, dtype=float)
    e = np.asarray(polarization, dtype=complex)
    n = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(n) - 1) > 1e-12 or abs(np.linalg.norm(u) - 1) > 1e-12:
        raise DomainError("directions must be unit vectors")
    mu = float(np.clip(u @ n, -1.0, 1.0))
    cross = np.cross(n, u)
    norm = np.linalg.norm(cross)
    if norm < 1e-12:
        # forward/backward: any perpendicular works
        trial = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        cross = np.cross(trial, u)
        norm = np.linalg.norm(cross)
    e_perp = cross / norm
    e_par_i = np.cross(u, e_perp)
    e_par_s = np.cross(n, e_perp)
    S1, S2 = amplitude_functions(s, [mu])
    return (1j / k) * (S2[0] * (e @ e_par_i) * e_par_s + S1[0] * (e @ e_perp) * e_perp)


def scattering_amplitude(s, incidence_sign, direction, k):
    """Amplitude for an x-polarised plane wave travelling along incidence_sign*z.

    The -z case is the mirror image (z -> -z) of the +z solution, so it reuses
    the same S1, S2 at the reflected angle.
    """
    n = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(n) - 1) > 1e-12:
        raise DomainError("direction must be a unit vector")
    if incidence_sign not in (1, -1):
        raise DomainError("incidence_sign must be +1 or -1")
    theta = np.arccos(np.clip(n[2], -1, 1))
    phi = np.arctan2(n[1], n[0])
    theta_hat = np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)])
    phi_hat = np.array([-np.sin(phi), np.cos(phi), 0.0])
    mu = incidence_sign * n[2]
    S1, S2 = amplitude_functions(s, [mu])
    # mirror reflection flips the polar unit vector
    return (1j / k) * (incidence_sign * np.cos(phi) * S2[0] * theta_hat
                       - np.sin(phi) * S1[0] * phi_hat)


def cross_sections(s, k):
    """(sigma_sca, sigma_abs, sigma_ext) in m^2."""
    n = np.arange(1, s.n_max + 1)
    pref = 2 * np.pi / k**2
    sca = pref * np.sum((2 * n + 1) * (np.abs(s.a_coeffs) ** 2 + np.abs(s.b_coeffs) ** 2))
    ext = pref * np.sum((2 * n + 1) * (s.a_coeffs + s.b_coeffs).real)
    return float(sca), float(ext - sca), float(ext)


def _n_nodes(s):
    return 2 * s.n_max + 40


@lru_cache(maxsize=256)
def azimuthal_kernels(s, k, n_nodes=None):
    """Azimuth-integrated standing-wave kernels on Gauss-Legendre nodes in mu.

    Returns (mu, weights, g, f2) where, for any function h of n_z,
    ``int dOmega f*(k,kn).f(-k,kn) h = sum(w * g * h(mu))`` and
    ``int dOmega |f(k,kn)|^2 h = sum(w * f2 * h(mu))``.
    """
    n_nodes = _n_nodes(s) if n_nodes is None else int(n_nodes)
    mu, w = gauss_legendre(n_nodes)
    S1, S2 = amplitude_functions(s, mu)
    S1r, S2r = amplitude_functions(s, -mu)
    g = np.pi / k**2 * (np.conj(S1) * S1r - np.conj(S2) * S2r)
    f2 = np.pi / k**2 * (np.abs(S1) ** 2 + np.abs(S2) ** 2)
    for arr in (g, f2):
        arr.flags.writeable = False
    return mu, w, g, f2


def axial_force(s, k, I0, z):
    """Longitudinal force [N] on the sphere centred at z in the standing wave.

    Far-field momentum balance: extinction of each travelling wave (forward
    interference with the total scattered field) minus the momentum carried
    off by the scattered field.
    """
    if not I0 > 0:
        raise DomainError("intensity parameter must be positive")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ap = np.exp(1j * k * z)[:, None]
    am = np.exp(-1j * k * z)[:, None]
    mu, w = gauss_legendre(_n_nodes(s))
    S1, S2 = amplitude_functions(s, mu)
    S1r, S2r = amplitude_functions(s, -mu)
    flux = np.pi / k**2 * (np.abs(ap * S2 - am * S2r) ** 2 + np.abs(ap * S1 + am * S1r) ** 2)
    scattered = flux @ (w * mu)
    S2f, S2b = amplitude_functions(s, [1.0, -1.0])[1]
    fwd = (1j / k) * (ap[:, 0] * S2f - am[:, 0] * S2b)
    bwd = -(1j / k) * (ap[:, 0] * S2b - am[:, 0] * S2f)
    extinction = (4 * np.pi / k) * (np.imag(np.conj(ap[:, 0]) * fwd) - np.imag(np.conj(am[:, 0]) * bwd))
    E0_sq = 2 * I0 / (c * epsilon_0)
    force = epsilon_0 * (E0_sq / 4) / 2 * (extinction - scattered)
    return force if force.size > 1 else float(force[0])


def axial_force_amplitude(s, k, I0):
    """F0 = F_z(-lambda/8)."""
    if s.relative_index == 1:
        return 0.0
    return axial_force(s, k, I0, -np.pi / (4 * k))


def eikonal_phase(F0, grating):
    """Grating phase phi0 = 8 F0 E_L / (hbar c eps0 a_L k |E0|^2)."""
    return 8 * F0 * grating.pulse_energy_per_area / (
        hbar * c * epsilon_0 * grating.k * grating.field_amplitude_sq)


def rayleigh_phase(chi, grating):
    """Point-particle limit 2 Re(chi) E_L / (hbar c eps0 a_L)."""
    return 2 * np.real(chi) * grating.pulse_energy_per_area / (hbar * c * epsilon_0)


def particle_phase(particle, grating):
    s = particle_mie(particle, grating.k)
    F0 = axial_force_amplitude(s, grating.k, grating.intensity_parameter)
    return eikonal_phase(F0, grating)
