import json
import math

import numpy as np
import pytest

from nanotalbot import scan, specs
from nanotalbot.errors import DomainError


@pytest.fixture(scope="module")
def scan_specs(silica, hydrogen):
    p = specs.ParticleSpec.from_mass(1e9 * specs.AMU, silica)
    env = specs.EnvironmentSpec(20.0, 1e-11, hydrogen)
    return scan.ScanSpecs(p, specs.GratingSpec(), env, specs.ProtocolSpec(10, 10), specs.ADLER)


@pytest.fixture(scope="module")
def small_grid(scan_specs):
    return scan.ScanGrid((2.0, 10.0, 60.0), (2.0, 10.0, 60.0), (3e-6, 2e-5), scan_specs.particle.mass)


def test_grid_validation():
    with pytest.raises(DomainError):
        scan.ScanGrid((2.0, 1.0), (1.0,), (1e-5,), 1.0)
    with pytest.raises(DomainError):
        scan.ScanGrid((80.0,), (80.0,), (1e-5,), 1.0)
    g = scan.ScanGrid.regular(1.0, 8, 12)
    assert all(t1 + t2 <= 100 for _, t1, t2 in g.cells())
    assert g.fluence_values[0] == pytest.approx(1e-6) and g.fluence_values[-1] == pytest.approx(5.0)


def test_single_cell_grid(scan_specs):
    g = scan.ScanGrid((10.0,), (10.0,), (8.7e-6,), scan_specs.particle.mass)
    r = scan.optimize_aleph(g, scan_specs)
    assert r.best[:3] == (10.0, 10.0, 8.7e-6)
    assert r.best[3] == pytest.approx(0.0571, abs=1e-3)


def test_checkpoint_resume_is_identical(tmp_path, small_grid, scan_specs):
    full = scan.optimize_aleph(small_grid, scan_specs, "qcsl")
    scan.write_field_csv(full, tmp_path / "full.csv")
    ck = tmp_path / "ck.jsonl"
    part = scan.optimize_aleph(small_grid, scan_specs, "qcsl", checkpoint=ck, max_cells=2)
    assert len(part.records) == 2
    with ck.open("a") as fh:
        fh.write('{"cell": 5, "trunc')  # torn line from an interrupted write
    resumed = scan.optimize_aleph(small_grid, scan_specs, "qcsl", checkpoint=ck)
    scan.write_field_csv(resumed, tmp_path / "resumed.csv")
    assert (tmp_path / "full.csv").read_bytes() == (tmp_path / "resumed.csv").read_bytes()
    assert resumed.best == full.best
    rows = scan.read_field_csv(tmp_path / "full.csv")
    assert rows.shape == (len(small_grid.cells()) * 2, 5)


def test_tie_break_prefers_smallest_inputs(small_grid):
    rec = {i: {"status": "ok", "rows": [[f, 0.2, math.nan] for f in small_grid.fluence_values]}
           for i, _, _ in small_grid.cells()}
    r = scan.ScanResult(small_grid, "qc", rec)
    assert scan._best(r, "qc") == (2.0, 2.0, 3e-6, 0.2)


def test_partial_failures(monkeypatch, small_grid, scan_specs):
    def boom(t1, t2, fluences, specs_):
        if t1 == 60.0:
            raise DomainError("synthetic failure")
        return [(f, 0.1, 0.1) for f in fluences]

    monkeypatch.setattr(scan, "evaluate_cell", boom)
    with pytest.raises(scan.PartialScanError) as exc:
        scan.optimize_aleph(small_grid, scan_specs)
    result = exc.value.result
    assert result.failures and all(result.records[i]["status"] == "failed" for i in result.failures)
    assert any(math.isnan(row[3]) for row in result.rows())


def test_qcsl_needs_parameters(small_grid, scan_specs):
    from dataclasses import replace
    with pytest.raises(DomainError):
        scan.optimize_aleph(small_grid, replace(scan_specs, csl=None), "qcsl")


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv(scan.WORKERS_ENV, "3")
    assert scan.worker_count() == 3
    assert scan.worker_count(2) == 2
    with pytest.raises(DomainError):
        scan.worker_count(0)


def test_threshold_search_on_synthetic_response():
    ev = lambda lam, rc: 1.0 / (1.0 + 1e-12 / lam)  # crosses 0.5 at 1e-12
    lam, status, mono = scan.lambda_threshold(ev, 1e-7, 0.5)
    assert status == "ok" and mono and lam == pytest.approx(1e-12, rel=1e-9)
    lam, status, _ = scan.lambda_threshold(ev, 1e-7, 2.0)
    assert status == "unreachable" and math.isnan(lam)
    assert scan.lambda_threshold(ev, 1e-7, 0.0)[0] == scan.LAMBDA_BRACKET[0]


def test_nonmonotone_response_takes_first_crossing():
    ev = lambda lam, rc: 1.0 if 1e-15 < lam < 1e-13 else (1.0 if lam > 1e-5 else 0.0)
    lam, status, mono = scan.lambda_threshold(ev, 1e-7, 0.5)
    assert not mono and lam < 1e-13


def test_exclusion_curve_and_csv(tmp_path, scan_specs):
    curve = scan.exclusion_curve(scan_specs, specs.ProtocolSpec(10, 10), 8.7e-6, [1e-7], threshold=0.0)
    assert curve.lambda_min[0] == scan.LAMBDA_BRACKET[0] and curve.status == ["ok"]
    path = scan.write_exclusion_csv(curve, tmp_path / "ex.csv")
    assert path.read_text().splitlines()[0] == "r_c_m,lambda_min_per_s,status"


def test_checkpoint_records_are_json(tmp_path, scan_specs):
    g = scan.ScanGrid((10.0,), (10.0,), (8.7e-6,), scan_specs.particle.mass)
    ck = tmp_path / "c.jsonl"
    scan.optimize_aleph(g, scan_specs, checkpoint=ck)
    rec = json.loads(ck.read_text().splitlines()[0])
    assert rec["cell"] == 0 and rec["status"] == "ok" and len(rec["rows"]) == 1


def test_lambda_min_non_increasing_in_mass(silica, scan_specs):
    from dataclasses import replace
    prot = specs.ProtocolSpec(10, 10)
    out = {}
    for m in (1e7, 1e9):
        sp = replace(scan_specs, particle=specs.ParticleSpec.from_mass(m * specs.AMU, silica))
        curve = scan.exclusion_curve(sp, prot, 8.7e-6, [1e-7])
        # an unreachable threshold means no exclusion at all
        out[m] = math.inf if curve.status[0] == "unreachable" else curve.lambda_min[0]
    assert out[1e9] <= out[1e7] and math.isfinite(out[1e9])
