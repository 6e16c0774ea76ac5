"""Near-field density pattern behind the grating.

    P(z)/delta = 1 + 2 sum_{n>=1} Re[B_n(xi_n) R_n e^{2 pi i n z/D}] exp(-2 (n pi sigma_z t2/(D t1))^2)

with xi_n = n t1 t2/(t_T (t1 + t2)) the grating shift in units of d.  The
sum is cut where a monotone envelope of the remaining terms drops below the
tail tolerance.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.constants import h, hbar, k as k_B

from . import collapse, decoherence, grating as grt
from .errors import ConvergenceError, DomainError, ParseError

KINDS = ("quantum", "classical", "csl")
MAX_ORDER = 10_000
TAIL_TOL = 1e-8


def initial_spreads(nu, T0, m):
    """(sigma_z [m], sigma_p [kg m/s]) of a thermal oscillator state."""
    if not (nu > 0 and m > 0 and T0 >= 0):
        raise DomainError("trap frequency and mass must be positive, T0 non-negative")
    gamma = math.pi * m * nu
    coth = 1.0 if T0 == 0 else 1.0 / math.tanh(h * nu / (2 * k_B * T0))
    return math.sqrt(hbar / (4 * gamma) * coth), math.sqrt(hbar * gamma * coth)


def talbot_time(m, d):
    if not (m > 0 and d > 0):
        raise DomainError("mass and period must be positive")
    return m * d * d / h


def magnification(protocol, d):
    return d * protocol.total_time / protocol.t1


def shift_ratio(n, protocol, m, d):
    """xi_n = s_n / d."""
    return np.asarray(n, dtype=float) * protocol.t1 * protocol.t2 / (
        talbot_time(m, d) * protocol.total_time)


@dataclass
class Pattern:
    z: np.ndarray
    values: np.ndarray
    kind: str
    metadata: dict = field(default_factory=dict)

    @property
    def delta(self):
        return self.metadata["delta"]

    @property
    def period(self):
        return self.metadata["D"]


def specs_digest(*objs):
    parts = []
    for o in objs:
        parts.append(repr(o))
        mat = getattr(o, "material", None) or getattr(o, "gas", None)
        if mat is not None:
            parts.append(repr(mat) + getattr(mat, "name", ""))
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def _damping(n, protocol, sigma_z, D):
    arg = np.asarray(n, dtype=float) * math.pi * sigma_z * protocol.t2 / (D * protocol.t1)
    return np.exp(-2.0 * arg * arg)


def _gauss_cutoff(protocol, sigma_z, D, tol):
    """Smallest N with 2 sum_{n>N} exp(-2 (alpha n)^2) < tol (crude but safe)."""
    alpha = math.pi * sigma_z * protocol.t2 / (D * protocol.t1)
    if alpha == 0:
        return MAX_ORDER + 1
    # sum_{n>N} e^{-2 a^2 n^2} <= e^{-2 a^2 N^2} (1 + 1/(4 a^2 N))
    N = 1
    while N <= MAX_ORDER:
        tail = math.exp(-2 * alpha * alpha * N * N) * (1 + 1 / (4 * alpha * alpha * N))
        if 2 * tail < tol:
            return N
        N = int(N * 1.25) + 1
    return MAX_ORDER + 1


@lru_cache(maxsize=64)
def _env_kernels(N, protocol, particle, env, grating, opts):
    if env is None:
        out = np.ones(N)
    else:
        out = decoherence.env_kernel(np.arange(1, N + 1), protocol, particle, env, grating, opts)
    out.flags.writeable = False
    return out


def harmonics(kind, protocol, particle, grating, env=None, csl=None,
              kernel_opts=decoherence.DEFAULT_KERNEL, tail_tol=TAIL_TOL):
    """Orders n = 1..N and the complex weights B_n R_n g_n of the pattern series."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}")
    if kind == "csl" and csl is None:
        raise DomainError("a CSL pattern needs collapse parameters")
    m, d = particle.mass, grating.period
    sigma_z, _ = initial_spreads(protocol.trap_frequency, protocol.com_temperature, m)
    D = magnification(protocol, d)
    N_env = _gauss_cutoff(protocol, sigma_z, D, tail_tol)
    N_try = min(N_env, MAX_ORDER)
    ns = np.arange(1, N_try + 1)
    g = _damping(ns, protocol, sigma_z, D)
    R = _env_kernels(N_try, protocol, particle, env, grating, kernel_opts)
    xi = shift_ratio(ns, protocol, m, d)
    gf = grt.grating_functions(particle, grating, xi * d, classical=(kind == "classical"))
    if kind == "classical":
        bmax = 1.0
    else:
        bmax = float(np.exp(np.max(gf.F + np.abs(gf.a))))
    envelope = bmax * np.abs(R) * g
    # monotone from the right: largest remaining term bound
    tail = np.cumsum(envelope[::-1])[::-1]
    keep = np.nonzero(2 * tail >= tail_tol)[0]
    N = int(keep[-1]) + 1 if keep.size else 0
    if kind != "classical" and N:
        # quantum coefficients vanish beyond the Bessel cutoff of the mask
        width = np.abs(gf.zeta_coh) + np.abs(gf.b) + np.abs(gf.a + 0.5 * gf.c_abs)
        N = min(N, grt._order_cutoff(float(np.max(width[:N]))) + 10)
    if N >= N_try and N_env > MAX_ORDER:
        raise ConvergenceError(f"pattern series not converged at N = {MAX_ORDER}",
                               module="pattern")
    ns, g, R, gf = ns[:N], g[:N], R[:N], _take(gf, N)
    if kind == "csl" and N:
        # CSL factors are <= 1, so the envelope above stays a valid bound
        R = R * collapse.csl_kernel(ns, protocol, particle, csl, grating.period)
    kind_b = "classical" if kind == "classical" else "quantum"
    B = grt.talbot_series(kind_b, ns, gf) if N else np.zeros(0, complex)
    return ns, B * R * g, dict(N=N, D=D, sigma_z=sigma_z, R=R, B=B)


def _take(gf, N):
    sl = lambda v: np.asarray(v)[:N]
    return grt.GratingFunctions(sl(gf.shift), gf.period, gf.phi0, sl(gf.a), sl(gf.b),
                                sl(gf.F), sl(gf.c_abs), sl(gf.zeta_coh))


def synthesize(z, ns, weights, D):
    """1 + 2 sum Re[w_n e^{2 pi i n z/D}] on the grid z."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    if len(ns) == 0:
        return out
    # chunk over z to bound memory for long series
    step = max(1, 2_000_000 // max(len(ns), 1))
    for i in range(0, z.size, step):
        ph = np.exp(2j * np.pi * np.outer(z[i:i + step], ns) / D)
        out[i:i + step] += 2.0 * np.real(ph @ weights)
    return out


def compute_pattern(kind, protocol, particle, grating, env=None, collapse_params=None,
                    z_window=None, samples=512, kernel_opts=decoherence.DEFAULT_KERNEL,
                    tail_tol=TAIL_TOL):
    """Pattern P(z) [1/m] on ``samples`` equispaced points of ``z_window`` (inclusive)."""
    if samples < 64:
        raise DomainError("samples must be >= 64")
    m, d = particle.mass, grating.period
    ns, w, info = harmonics(kind, protocol, particle, grating, env, collapse_params,
                            kernel_opts, tail_tol)
    D = info["D"]
    if z_window is None:
        z_window = (-D / 2, D / 2)
    z0, z1 = z_window
    if not z1 > z0:
        raise DomainError("z_window must be increasing")
    z = np.linspace(z0, z1, samples)
    _, sigma_p = initial_spreads(protocol.trap_frequency, protocol.com_temperature, m)
    delta = m / (math.sqrt(2 * math.pi) * sigma_p * protocol.total_time)
    values = delta * synthesize(z, ns, w, D)
    meta = dict(kind=kind, N=info["N"], D=D, talbot_time=talbot_time(m, d), delta=delta,
                sigma_z=info["sigma_z"], sigma_p=sigma_p,
                phi0=grt.particle_phase(particle, grating),
                digest=specs_digest(protocol, particle, grating, env, collapse_params))
    if env is not None:
        meta["survival_collisions"] = decoherence.survival_probability(protocol, particle, env)
    if kind == "csl":
        meta["csl_absolute_factor"] = collapse.csl_absolute_factor(protocol, particle,
                                                                   collapse_params)
    return Pattern(z, values, kind, meta)


def write_pattern_csv(pattern, path):
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for key, val in pattern.metadata.items():
            fh.write(f"# {key} = {val!r}\n" if isinstance(val, str) else f"# {key} = {val:.17g}\n")
        fh.write("z_m,p_per_m\n")
        for zi, pi in zip(pattern.z, pattern.values):
            fh.write(f"{zi:.17g},{pi:.17g}\n")
    return path


def read_pattern_csv(path):
    path = Path(path)
    meta, rows, header_seen = {}, [], False
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            val = val.strip()
            meta[key.strip()] = val.strip("'\"") if val[:1] in "'\"" else float(val)
            continue
        if not header_seen:
            if line.strip() != "z_m,p_per_m":
                raise ParseError("expected header 'z_m,p_per_m'", lineno, path)
            header_seen = True
            continue
        try:
            zi, pi = (float(v) for v in line.split(","))
        except ValueError:
            raise ParseError("bad pattern row", lineno, path) from None
        rows.append((zi, pi))
    if not rows:
        raise ParseError("no pattern rows", path=path)
    arr = np.array(rows)
    if "N" in meta:
        meta["N"] = int(meta["N"])
    return Pattern(arr[:, 0], arr[:, 1], str(meta.get("kind", "")), meta)


@dataclass
class MetricPatterns:
    """Normalised densities P/delta of several kinds on one shared grid."""
    z: np.ndarray
    quantum: np.ndarray
    classical: np.ndarray | None
    csl: np.ndarray | None
    quantum_harmonics: tuple
    D: float


def metric_grid(L, D, N, min_samples=1025):
    """Inclusive grid on [-L/2, L/2] with >= 16 points per shortest harmonic."""
    need = int(math.ceil(16 * max(N, 1) * L / D)) + 1
    return np.linspace(-L / 2, L / 2, max(min_samples, need))


def metric_patterns(protocol, particle, grating, env=None, csl=None, L=1e-7,
                    classical=True, kernel_opts=decoherence.DEFAULT_KERNEL,
                    min_samples=1025):
    """Quantum (and optionally classical and CSL) patterns for distinguishability studies."""
    nq, wq, iq = harmonics("quantum", protocol, particle, grating, env, None, kernel_opts)
    D = iq["D"]
    nc = wc = None
    if classical:
        nc, wc, _ = harmonics("classical", protocol, particle, grating, env, None, kernel_opts)
    N = max(len(nq), len(nc) if nc is not None else 0)
    z = metric_grid(L, D, N, min_samples)
    pq = synthesize(z, nq, wq, D)
    pc = synthesize(z, nc, wc, D) if classical else None
    ps = None
    if csl is not None:
        ps = synthesize(z, nq, csl_weights(nq, wq, protocol, particle, grating, csl), D)
    return MetricPatterns(z, pq, pc, ps, (nq, wq), D)


def csl_weights(ns, weights, protocol, particle, grating, csl):
    """Quantum harmonic weights multiplied by the CSL kernel."""
    if len(ns) == 0:
        return weights
    return weights * collapse.csl_kernel(ns, protocol, particle, csl, grating.period)
