"""Material and residual-gas properties.

Material files are plain text: ``key = value`` header lines (density,
specific_heat, ionization_energy), ``#`` comments, then whitespace separated
rows ``omega_rad_per_s  eps_re  eps_im``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import epsilon_0

from .errors import DomainError, ParseError, RangeError

_KV = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^#]+?)\s*(#.*)?$")


@dataclass(frozen=True)
class Material:
    name: str
    density: float
    specific_heat: float
    ionization_energy: float
    permittivity_table: tuple = field(repr=False)

    def __post_init__(self):
        if not self.density > 0:
            raise DomainError("density must be positive")
        if not self.specific_heat > 0:
            raise DomainError("specific_heat must be positive")
        rows = self.permittivity_table
        if len(rows) < 1:
            raise DomainError("permittivity table is empty")
        for prev, cur in zip(rows, rows[1:]):
            if not cur[0] > prev[0]:
                raise DomainError("table frequencies must increase strictly")
        if any(r[2] < 0 for r in rows):
            raise DomainError("Im(eps) must be non-negative for a passive medium")

    @cached_property
    def omega(self):
        return np.array([r[0] for r in self.permittivity_table])

    @cached_property
    def eps(self):
        return np.array([complex(r[1], r[2]) for r in self.permittivity_table])


@dataclass(frozen=True)
class GasSpecies:
    name: str
    mass: float
    static_polarizability_volume: float
    ionization_energy: float

    def __post_init__(self):
        if not (self.mass > 0 and self.static_polarizability_volume > 0
                and self.ionization_energy > 0):
            raise DomainError("gas properties must all be positive")


def _read_lines(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc}", path=path) from None
    return path, text.splitlines()


def _parse(path):
    path, lines = _read_lines(path)
    header, rows = {}, []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _KV.match(line)
        if m:
            try:
                header[m.group(1)] = (float(m.group(2)), lineno)
            except ValueError:
                raise ParseError(f"bad value for {m.group(1)!r}", lineno, path) from None
            continue
        parts = line.split("#", 1)[0].split()
        if len(parts) != 3:
            raise ParseError(f"expected 3 columns, got {len(parts)}", lineno, path)
        try:
            row = tuple(float(p) for p in parts)
        except ValueError:
            raise ParseError("non-numeric table entry", lineno, path) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite table entry", lineno, path)
        if rows and not row[0] > rows[-1][0][0]:
            raise ParseError("frequencies must increase strictly", lineno, path)
        if row[2] < 0:
            raise ParseError("negative Im(eps) (active medium)", lineno, path)
        if row[0] <= 0:
            raise ParseError("frequency must be positive", lineno, path)
        rows.append((row, lineno))
    return path, header, [r for r, _ in rows]


def _require(header, key, path):
    if key not in header:
        raise ParseError(f"missing header key {key!r}", path=path)
    value, lineno = header[key]
    if not value > 0:
        raise ParseError(f"{key} must be positive", lineno, path)
    return value


def load_material(path):
    path, header, rows = _parse(path)
    if not rows:
        raise ParseError("no permittivity rows", path=path)
    unknown = set(header) - {"density", "specific_heat", "ionization_energy"}
    if unknown:
        key = sorted(unknown)[0]
        raise ParseError(f"unknown header key {key!r}", header[key][1], path)
    return Material(
        name=path.stem,
        density=_require(header, "density", path),
        specific_heat=_require(header, "specific_heat", path),
        ionization_energy=_require(header, "ionization_energy", path),
        permittivity_table=tuple(rows),
    )


def load_gas(path):
    path, header, rows = _parse(path)
    if rows:
        raise ParseError("gas files carry no table rows", path=path)
    return GasSpecies(
        name=path.stem,
        mass=_require(header, "mass", path),
        static_polarizability_volume=_require(header, "polarizability_volume", path),
        ionization_energy=_require(header, "ionization_energy", path),
    )


def bundled_path(name):
    return Path(str(resources.files("nanotalbot") / "data" / f"{name}.txt"))


def silica():
    return load_material(bundled_path("silica"))


def hydrogen():
    return load_gas(bundled_path("hydrogen"))


def permittivity(m, omega, policy="clamp", return_flag=False):
    """Linearly interpolated complex permittivity at angular frequency omega.

    Outside the tabulated range the nearest node is used (``policy="clamp"``)
    and the returned flag marks those points; ``policy="error"`` raises.
    """
    w = np.asarray(omega, dtype=float)
    outside = (w < m.omega[0]) | (w > m.omega[-1])
    if policy == "error" and np.any(outside):
        raise RangeError(f"omega outside table range [{m.omega[0]:g}, {m.omega[-1]:g}]")
    eps = np.interp(w, m.omega, m.eps.real) + 1j * np.interp(w, m.omega, m.eps.imag)
    if eps.ndim == 0:
        eps = complex(eps)
        outside = bool(outside)
    return (eps, outside) if return_flag else eps


def cm_factor(eps):
    """(eps - 1)/(eps + 2)."""
    eps = np.asarray(eps, dtype=complex)
    if np.any(eps == -2):
        raise DomainError("Clausius-Mossotti singularity at eps = -2")
    return (eps - 1.0) / (eps + 2.0)


def clausius_mossotti(m, omega, R):
    """Point-dipole polarizability 4 pi eps0 R^3 (eps-1)/(eps+2), SI units."""
    if not R > 0:
        raise DomainError("radius must be positive")
    return 4 * np.pi * epsilon_0 * R**3 * cm_factor(permittivity(m, omega))


def static_polarizability(m, R):
    # lowest tabulated frequency stands in for omega = 0
    return clausius_mossotti(m, m.omega[0], R).real


def c6_coefficient(m, R, gas):
    """Van der Waals constant between the sphere and one gas atom [J m^6]."""
    alpha = static_polarizability(m, R)
    alpha_g = 4 * np.pi * epsilon_0 * gas.static_polarizability_volume
    i, ig = m.ionization_energy, gas.ionization_energy
    return 3 * alpha * alpha_g * i * ig / (32 * np.pi**2 * epsilon_0**2 * (i + ig))
