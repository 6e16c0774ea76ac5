import pytest

from nanotalbot import material, specs


@pytest.fixture(scope="session")
def silica():
    return material.silica()


@pytest.fixture(scope="session")
def hydrogen():
    return material.hydrogen()


@pytest.fixture(scope="session")
def env(hydrogen):
    return specs.EnvironmentSpec(temperature=20.0, pressure=1e-11, gas=hydrogen)


@pytest.fixture(scope="session")
def sphere(silica):
    def make(mass_amu, **kw):
        return specs.ParticleSpec.from_mass(mass_amu * specs.AMU, silica, **kw)
    return make


# criterion number -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        results = ACCEPTANCE[number]
        status = "PASS" if all(ok for ok, _ in results) else "FAIL"
        details = "; ".join(d for _, d in results)
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {details}")
