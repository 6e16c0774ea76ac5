"""Flat ``section.key = value unit`` run configuration.

Every numeric key has a canonical SI unit and a small table of accepted
alternatives; values are converted on load and written back in SI, so a
manifest produced by :func:`dump_config` loads to an identical config.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from scipy.constants import atomic_mass, pi

from . import decoherence, material
from .errors import ConfigError, NanoTalbotError
from .specs import (CslParams, DpParams, EnvironmentSpec, GratingSpec, ParticleSpec,
                    ProtocolSpec)

PRESETS = ("qppf-1e7", "qppf-1e8", "qppf-1e9", "qppf-1e10", "qppf-1e11")

_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}
_TIME = {"s": 1.0, "ms": 1e-3, "min": 60.0, "h": 3600.0, "d": 86400.0}
_RATE = {"1/s": 1.0, "s^-1": 1.0}

# key -> (canonical unit, {unit: factor to canonical}) or None for strings
SCHEMA = {
    "particle.mass": ("kg", {"kg": 1.0, "amu": atomic_mass, "g": 1e-3}),
    "particle.material": None,
    "particle.internal_temperature": ("K", {"K": 1.0}),
    "particle.temperature_model": None,
    "grating.wavelength": ("m", _LENGTH),
    "grating.fluence": ("J/m2", {"J/m2": 1.0, "J/m^2": 1.0, "J/cm2": 1e4}),
    "grating.intensity": ("W/m2", {"W/m2": 1.0, "W/m^2": 1.0}),
    "environment.temperature": ("K", {"K": 1.0}),
    "environment.pressure": ("Pa", {"Pa": 1.0, "mbar": 100.0, "bar": 1e5}),
    "environment.gas": None,
    "protocol.t1": ("s", _TIME),
    "protocol.t2": ("s", _TIME),
    "protocol.trap_frequency": ("Hz", {"Hz": 1.0, "kHz": 1e3, "rad/s": 1 / (2 * pi)}),
    "protocol.com_temperature": ("K", {"K": 1.0, "mK": 1e-3, "uK": 1e-6}),
    "collapse.lambda": ("1/s", _RATE),
    "collapse.r_c": ("m", _LENGTH),
    "collapse.dp_R0": ("m", _LENGTH),
    "kernel.scattering_time": None,
    "kernel.collisions": None,
    "kernel.emission_form": None,
    "metric.window": ("m", _LENGTH),
    "output.dir": None,
}

_LINE = re.compile(r"^([a-z_]+\.[A-Za-z_0-9]+)\s*=\s*(.+?)\s*$")


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    source: str = ""

    def get(self, key, default=None):
        return self.values.get(key, default)

    def override(self, key, text):
        """Apply ``key=value unit`` from the command line."""
        self.values[key] = _convert(key, text, None, "<command line>")

    # -- builders -----------------------------------------------------------
    def material(self):
        return _resolve(self.values["particle.material"], material.load_material, self.source)

    def gas(self):
        return _resolve(self.values["environment.gas"], material.load_gas, self.source)

    def particle(self):
        v = self.values
        return ParticleSpec.from_mass(v["particle.mass"], self.material(),
                                      internal_temperature=v["particle.internal_temperature"],
                                      temperature_model=v["particle.temperature_model"])

    def grating(self):
        v = self.values
        return GratingSpec(v["grating.wavelength"], v["grating.fluence"], v["grating.intensity"])

    def environment(self):
        v = self.values
        return EnvironmentSpec(v["environment.temperature"], v["environment.pressure"], self.gas())

    def protocol(self):
        v = self.values
        return ProtocolSpec(v["protocol.t1"], v["protocol.t2"], v["protocol.trap_frequency"],
                            v["protocol.com_temperature"])

    def csl(self):
        return CslParams(self.values["collapse.lambda"], self.values["collapse.r_c"])

    def dp(self):
        return DpParams(self.values["collapse.dp_R0"])

    def kernel_options(self):
        v = self.values
        return decoherence.KernelOptions(scattering_time=v["kernel.scattering_time"],
                                         collisions=v["kernel.collisions"],
                                         emission_form=v["kernel.emission_form"])

    @property
    def window(self):
        return self.values["metric.window"]

    @property
    def output_dir(self):
        return Path(self.values["output.dir"])

    def validate(self):
        missing = [k for k in SCHEMA if k not in self.values]
        if missing:
            raise ConfigError(f"missing keys: {', '.join(missing)}", path=self.source or None)
        try:
            self.particle(), self.grating(), self.environment(), self.protocol()
            self.csl(), self.dp(), self.kernel_options()
        except ConfigError:
            raise
        except (NanoTalbotError, ValueError, OSError) as exc:
            raise ConfigError(str(exc), path=self.source or None) from exc
        return self


def _resolve(name, loader, source):
    if name in ("silica", "hydrogen"):
        return loader(material.bundled_path(name))
    path = Path(name)
    if not path.is_absolute() and source:
        path = Path(source).parent / path
    return loader(path)


def _convert(key, text, line, path):
    if key not in SCHEMA:
        raise ConfigError(f"unknown key {key!r}", line, path)
    spec = SCHEMA[key]
    text = text.split("#", 1)[0].strip()
    if not text:
        raise ConfigError(f"empty value for {key!r}", line, path)
    if spec is None:
        return text
    canonical, units = spec
    parts = text.split()
    if len(parts) > 2:
        raise ConfigError(f"expected 'value unit' for {key!r}", line, path)
    unit = parts[1] if len(parts) == 2 else canonical
    if unit not in units:
        raise ConfigError(f"unit {unit!r} not accepted for {key!r} (use one of "
                          f"{', '.join(units)})", line, path)
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigError(f"bad number {parts[0]!r} for {key!r}", line, path) from None
    if not math.isfinite(value):
        raise ConfigError(f"non-finite value for {key!r}", line, path)
    return value * units[unit]


def parse_config(text, path="<string>", base=None):
    values = dict(base.values) if base is not None else {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"cannot parse {raw.strip()!r}", lineno, path)
        key, val = m.groups()
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        seen.add(key)
        values[key] = _convert(key, val, lineno, path)
    return RunConfig(values, str(path))


def load_config(path, base=None):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path=path) from exc
    return parse_config(text, path, base)


def preset_text(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (choose from {', '.join(PRESETS)})")
    return resources.files("nanotalbot").joinpath("data", f"{name}.cfg").read_text(encoding="utf-8")


def load_preset(name):
    return parse_config(preset_text(name), f"preset:{name}")


def dump_config(cfg, header=()):
    lines = [f"# {h}" for h in header]
    for key in SCHEMA:
        if key not in cfg.values:
            continue
        val = cfg.values[key]
        spec = SCHEMA[key]
        lines.append(f"{key} = {val}" if spec is None else f"{key} = {val:.17g} {spec[0]}")
    return "\n".join(lines) + "\n"
