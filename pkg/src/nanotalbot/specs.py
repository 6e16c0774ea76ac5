"""Immutable parameter records passed between the physics modules.

All records are frozen dataclasses so they can key the memo caches used by
the Mie, grating and kernel code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.constants import atomic_mass, hbar, k as k_B, pi

from .errors import DomainError
from .material import GasSpecies, Material

AMU = atomic_mass
NUCLEON_MASS = atomic_mass  # reference mass m0 of the collapse models


@dataclass(frozen=True)
class ParticleSpec:
    radius: float
    mass: float
    material: Material = field(repr=False)
    internal_temperature: float = 40.0
    temperature_model: str = "constant"

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("radius must be positive")
        expected = 4 * pi / 3 * self.radius**3 * self.material.density
        if abs(self.mass - expected) > 1e-9 * expected:
            raise DomainError("mass inconsistent with radius and density")
        if self.temperature_model not in ("constant", "radiative"):
            raise DomainError(f"unknown temperature model {self.temperature_model!r}")
        if not self.internal_temperature >= 0:
            raise DomainError("internal temperature must be non-negative")

    @classmethod
    def from_mass(cls, mass, material, **kw):
        radius = (3 * mass / (4 * pi * material.density)) ** (1 / 3)
        mass = 4 * pi / 3 * radius**3 * material.density
        return cls(radius=radius, mass=mass, material=material, **kw)

    @classmethod
    def from_radius(cls, radius, material, **kw):
        mass = 4 * pi / 3 * radius**3 * material.density
        return cls(radius=radius, mass=mass, material=material, **kw)

    @property
    def mass_amu(self):
        return self.mass / AMU


@dataclass(frozen=True)
class GratingSpec:
    wavelength: float = 100e-9
    pulse_energy_per_area: float = 8.7e-6
    intensity_parameter: float = 1e9

    def __post_init__(self):
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        if not self.pulse_energy_per_area >= 0:
            raise DomainError("pulse energy per area must be non-negative")
        if not self.intensity_parameter > 0:
            raise DomainError("intensity parameter must be positive")

    @property
    def period(self):
        return self.wavelength / 2

    @property
    def k(self):
        return 2 * pi / self.wavelength

    @property
    def field_amplitude_sq(self):
        """|E0|^2 of the standing wave (antinode amplitude) for I0 = c eps0 |E0|^2/2."""
        from scipy.constants import c, epsilon_0
        return 2 * self.intensity_parameter / (c * epsilon_0)

    def with_fluence(self, fluence):
        return GratingSpec(self.wavelength, fluence, self.intensity_parameter)


FLUENCE_SCAN_RANGE = (1e-6, 5.0)


@dataclass(frozen=True)
class EnvironmentSpec:
    temperature: float
    pressure: float
    gas: GasSpecies = field(repr=False)

    def __post_init__(self):
        if not self.temperature >= 0:
            raise DomainError("temperature must be non-negative")
        if not self.pressure >= 0:
            raise DomainError("pressure must be non-negative")

    @property
    def gas_mean_velocity(self):
        return math.sqrt(2 * k_B * self.temperature / self.gas.mass)


@dataclass(frozen=True)
class ProtocolSpec:
    t1: float
    t2: float
    trap_frequency: float = 1e5 / (2 * pi)
    com_temperature: float = 5e-6
    mission_constrained: bool = False

    def __post_init__(self):
        if not (self.t1 > 0 and self.t2 > 0):
            raise DomainError("free-fall times must be positive")
        if self.mission_constrained and self.t1 + self.t2 > 100.0:
            raise DomainError("t1 + t2 exceeds the 100 s mission limit")
        if not (self.trap_frequency > 0 and self.com_temperature >= 0):
            raise DomainError("trap frequency must be positive")

    @property
    def total_time(self):
        return self.t1 + self.t2

    def reduced_time(self):
        return self.t1 * self.t2 / (self.t1 + self.t2)


@dataclass(frozen=True)
class CslParams:
    lambda_csl: float
    r_c: float = 1e-7

    def __post_init__(self):
        if not self.lambda_csl >= 0:
            raise DomainError("lambda_csl must be non-negative")
        if not self.r_c > 0:
            raise DomainError("r_c must be positive")


GRW = CslParams(1e-16, 1e-7)
ADLER = CslParams(1e-8, 1e-7)

DP_R0_FLOOR = 0.5e-10


@dataclass(frozen=True)
class DpParams:
    R0: float = DP_R0_FLOOR
    enforce_floor: bool = True

    def __post_init__(self):
        if not self.R0 > 0:
            raise DomainError("R0 must be positive")
        if self.enforce_floor and self.R0 < DP_R0_FLOOR:
            raise DomainError(f"R0 below the experimental floor {DP_R0_FLOOR} m")


def thermal_omega(temperature):
    return k_B * temperature / hbar
