import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import h, hbar, k as k_B

from nanotalbot import decoherence as dec, pattern as pat, specs
from nanotalbot.errors import DomainError, ParseError

specs_strategy = st.fixed_dictionaries({
    "log_m": st.floats(7.0, 10.0),
    "t": st.floats(1.0, 40.0),
    "ratio": st.floats(0.5, 2.0),
    "log_f": st.floats(-6.0, -2.0),
})


def _setup(silica, hydrogen, d, T_env=20.0, p=1e-11, T_int=40.0):
    particle = specs.ParticleSpec.from_mass(10 ** d["log_m"] * specs.AMU, silica,
                                            internal_temperature=T_int)
    t1 = d["t"]
    prot = specs.ProtocolSpec(t1, t1 * d["ratio"])
    grating = specs.GratingSpec(pulse_energy_per_area=10 ** d["log_f"])
    env = specs.EnvironmentSpec(T_env, p, hydrogen)
    return particle, prot, grating, env


def test_initial_spreads_thermal_oscillator():
    m, nu = 1e-17, 1e4
    sz, sp = pat.initial_spreads(nu, 0.0, m)
    assert sz * sp == pytest.approx(hbar / 2)
    sz_hot, _ = pat.initial_spreads(nu, 1.0, m)
    # high-temperature limit: k_B T / (m omega^2)
    assert sz_hot ** 2 == pytest.approx(k_B / (m * (2 * math.pi * nu) ** 2), rel=1e-3)


def test_talbot_time_and_shift_ratio():
    m, d = 1e-17, 50e-9
    assert pat.talbot_time(m, d) == pytest.approx(m * d * d / h)
    prot = specs.ProtocolSpec(3.0, 6.0)
    assert pat.shift_ratio(1, prot, m, d) == pytest.approx(2.0 / pat.talbot_time(m, d))


@settings(max_examples=12, deadline=None)
@given(specs_strategy, st.sampled_from(["quantum", "classical"]))
def test_pattern_invariants(silica, hydrogen, d, kind):
    particle, prot, grating, env = _setup(silica, hydrogen, d)
    D = pat.magnification(prot, grating.period)
    one = pat.compute_pattern(kind, prot, particle, grating, env, z_window=(0.0, D), samples=1025)
    nxt = pat.compute_pattern(kind, prot, particle, grating, env, z_window=(D, 2 * D), samples=1025)
    v = one.values / one.delta
    assert v.min() >= -1e-8
    assert np.allclose(nxt.values, one.values, rtol=0, atol=1e-9 * one.delta)
    mean = np.trapezoid(one.values, one.z) / D
    assert mean / one.delta == pytest.approx(1.0, abs=1e-8)


def _power(ns, w):
    return float(np.sum(np.abs(w) ** 2))


@settings(max_examples=8, deadline=None)
@given(specs_strategy)
def test_contrast_loss_is_monotone_in_each_channel(silica, hydrogen, d):
    particle, prot, grating, _ = _setup(silica, hydrogen, d)
    absolute = dec.KernelOptions(collisions="absolute")

    def weights(T_env=20.0, p=1e-11, T_int=40.0, csl=None, opts=absolute):
        part = specs.ParticleSpec.from_mass(particle.mass, silica, internal_temperature=T_int)
        env = specs.EnvironmentSpec(T_env, p, hydrogen)
        kind = "csl" if csl is not None else "quantum"
        ns, w, _ = pat.harmonics(kind, prot, part, grating, env, csl, opts, tail_tol=1e-14)
        return ns, w

    def check(a, b):
        (na, wa), (nb, wb) = a, b
        n = min(len(na), len(nb))
        assert np.all(np.abs(wb[:n]) <= np.abs(wa[:n]) * (1 + 1e-9) + 1e-15)
        assert _power(nb, wb) <= _power(na, wa) * (1 + 1e-9) + 1e-15

    # thermal radiation alone (at fixed pressure a hotter gas is thinner)
    check(weights(T_env=10.0, p=0.0), weights(T_env=30.0, p=0.0))
    check(weights(p=1e-12), weights(p=1e-10))
    check(weights(T_int=20.0), weights(T_int=60.0))
    check(weights(csl=specs.CslParams(1e-18)), weights(csl=specs.CslParams(1e-14)))


def test_csl_and_quantum_agree_without_collapse(sphere, env):
    p, prot, g = sphere(1e8), specs.ProtocolSpec(10, 10), specs.GratingSpec(pulse_energy_per_area=3.5e-4)
    q = pat.compute_pattern("quantum", prot, p, g, env)
    c = pat.compute_pattern("csl", prot, p, g, env, specs.CslParams(0.0))
    assert np.allclose(q.values, c.values, rtol=1e-14)


def test_no_grating_gives_flat_pattern(sphere, env):
    p, prot = sphere(1e9), specs.ProtocolSpec(10, 10)
    q = pat.compute_pattern("quantum", prot, p, specs.GratingSpec(pulse_energy_per_area=0.0), env)
    assert np.allclose(q.values, q.delta, rtol=1e-12)


def test_metadata_and_csv_round_trip(tmp_path, sphere, env):
    p, prot, g = sphere(1e8), specs.ProtocolSpec(10, 10), specs.GratingSpec(pulse_energy_per_area=3.5e-4)
    q = pat.compute_pattern("csl", prot, p, g, env, specs.ADLER, samples=128)
    for key in ("N", "D", "talbot_time", "delta", "sigma_z", "phi0", "digest", "csl_absolute_factor"):
        assert key in q.metadata
    path = pat.write_pattern_csv(q, tmp_path / "p.csv")
    back = pat.read_pattern_csv(path)
    assert np.array_equal(back.z, q.z) and np.array_equal(back.values, q.values)
    assert back.kind == "csl" and back.metadata["digest"] == q.metadata["digest"]


def test_csv_reader_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# kind = 'quantum'\nz,p\n0,1\n")
    with pytest.raises(ParseError) as exc:
        pat.read_pattern_csv(path)
    assert exc.value.line == 2


def test_invalid_requests(sphere, env):
    p, prot, g = sphere(1e8), specs.ProtocolSpec(10, 10), specs.GratingSpec()
    with pytest.raises(DomainError):
        pat.compute_pattern("wave", prot, p, g, env)
    with pytest.raises(DomainError):
        pat.compute_pattern("csl", prot, p, g, env)
    with pytest.raises(DomainError):
        pat.compute_pattern("quantum", prot, p, g, env, samples=10)
