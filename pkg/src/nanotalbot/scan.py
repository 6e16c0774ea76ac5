"""Deterministic, resumable parameter scans.

The unit of work is one (t1, t2) cell; every fluence of that cell is
evaluated by the same worker so the environmental kernel is shared.  Results
are merged by cell index, never by completion order, and every float is
written with 17 significant digits, so the CSV does not depend on the
number of workers.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import decoherence
from .errors import DomainError, NanoTalbotError
from .metrics import ALEPH_THRESHOLD, DEFAULT_WINDOW, aleph_values
from .pattern import metric_patterns, csl_weights, metric_grid, synthesize
from .specs import FLUENCE_SCAN_RANGE, CslParams, ProtocolSpec

WORKERS_ENV = "NANOTALBOT_WORKERS"
FIELD_HEADER = ["t1_s", "t2_s", "fluence_J_per_m2", "aleph_qc", "aleph_qcsl"]
EXCLUSION_HEADER = ["r_c_m", "lambda_min_per_s", "status"]
LAMBDA_BRACKET = (1e-20, 1e-2)
BISECTION_STEPS = 40
FAILURE_FRACTION = 0.01


class PartialScanError(NanoTalbotError):
    """More than the tolerated fraction of scan cells failed."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


def _strictly_increasing(a):
    return a.ndim == 1 and a.size >= 1 and np.all(np.diff(a) > 0)


@dataclass(frozen=True)
class ScanGrid:
    t1_values: tuple
    t2_values: tuple
    fluence_values: tuple
    mass: float
    t_max: float = 100.0

    def __post_init__(self):
        for name in ("t1_values", "t2_values", "fluence_values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not _strictly_increasing(arr) or np.any(arr <= 0):
                raise DomainError(f"{name} must be positive and strictly increasing")
            object.__setattr__(self, name, tuple(float(v) for v in arr))
        if not self.mass > 0:
            raise DomainError("mass must be positive")
        if not self.cells():
            raise DomainError("no (t1, t2) cell satisfies t1 + t2 <= t_max")

    @classmethod
    def regular(cls, mass, n_times=8, n_fluences=12, t_max=100.0, t_min=1.0,
                fluence_range=FLUENCE_SCAN_RANGE):
        t = np.linspace(t_min, t_max - t_min, n_times)
        f = np.geomspace(*fluence_range, n_fluences)
        return cls(tuple(t), tuple(t), tuple(f), mass, t_max)

    def cells(self):
        """(index, t1, t2) for every admissible cell, in a fixed order."""
        out = []
        for t1 in self.t1_values:
            for t2 in self.t2_values:
                if t1 + t2 <= self.t_max * (1 + 1e-12):
                    out.append((len(out), t1, t2))
        return out


@dataclass(frozen=True)
class ScanSpecs:
    """Everything except the scanned variables."""
    particle: object
    grating: object
    environment: object
    protocol: ProtocolSpec
    csl: CslParams | None = None
    kernel_opts: decoherence.KernelOptions = decoherence.DEFAULT_KERNEL
    window: float = DEFAULT_WINDOW


@dataclass
class ScanResult:
    grid: ScanGrid
    target: str
    records: dict  # cell index -> record
    best: tuple | None = None  # (t1, t2, fluence, value)
    failures: list = field(default_factory=list)

    def rows(self):
        for idx, t1, t2 in self.grid.cells():
            rec = self.records.get(idx)
            if rec is None or rec["status"] != "ok":
                for f in self.grid.fluence_values:
                    yield (t1, t2, f, math.nan, math.nan)
                continue
            for f, qc, qcsl in rec["rows"]:
                yield (t1, t2, f, qc, qcsl)

    def field_array(self, column="aleph_qc"):
        """Max over fluence for each (t1, t2) as a 2-D array (nan outside the triangle)."""
        col = {"aleph_qc": 3, "aleph_qcsl": 4}[column]
        t1s, t2s = self.grid.t1_values, self.grid.t2_values
        out = np.full((len(t1s), len(t2s)), np.nan)
        for t1, t2, _, *vals in self.rows():
            v = (t1, t2, 0, *vals)[col]
            i, j = t1s.index(t1), t2s.index(t2)
            if not math.isnan(v):
                out[i, j] = v if math.isnan(out[i, j]) else max(out[i, j], v)
        return out


def evaluate_cell(t1, t2, fluences, specs):
    """[(fluence, aleph_qc, aleph_qcsl)] for one (t1, t2)."""
    protocol = replace(specs.protocol, t1=t1, t2=t2)
    rows = []
    for f in fluences:
        grating = specs.grating.with_fluence(f)
        mp = metric_patterns(protocol, specs.particle, grating, specs.environment, specs.csl,
                             specs.window, kernel_opts=specs.kernel_opts)
        qc = aleph_values(mp.z, mp.quantum, mp.classical, specs.window)[0]
        qcsl = (aleph_values(mp.z, mp.quantum, mp.csl, specs.window)[0]
                if mp.csl is not None else math.nan)
        rows.append((f, qc, qcsl))
    return rows


def _run_cell(args):
    idx, t1, t2, fluences, specs = args
    try:
        rows = evaluate_cell(t1, t2, fluences, specs)
        return {"cell": idx, "t1": t1, "t2": t2, "status": "ok",
                "rows": [list(r) for r in rows]}
    except (NanoTalbotError, ArithmeticError, ValueError) as exc:
        return {"cell": idx, "t1": t1, "t2": t2, "status": "failed",
                "error": f"{type(exc).__name__}: {exc}"}


def worker_count(requested=None):
    if requested is not None:
        n = int(requested)
    else:
        n = int(os.environ.get(WORKERS_ENV, "1"))
    if n < 1:
        raise DomainError("worker count must be >= 1")
    return n


def read_checkpoint(path):
    records = {}
    path = Path(path)
    if not path.exists():
        return records
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            continue  # torn final line from an interrupted write
        if rec.get("status") == "ok":
            records[int(rec["cell"])] = rec
    return records


def optimize_aleph(grid, specs, target="qc", workers=None, checkpoint=None, max_cells=None):
    """Evaluate every cell of ``grid``; return the field and the best cell for ``target``.

    ``target`` is "qc" or "qcsl" (the latter needs ``specs.csl``).  With a
    checkpoint path, finished cells are appended as JSON lines and skipped on
    the next call.  ``max_cells`` stops after that many new cells (used to
    emulate an interruption).
    """
    if target not in ("qc", "qcsl"):
        raise DomainError("target must be 'qc' or 'qcsl'")
    if target == "qcsl" and specs.csl is None:
        raise DomainError("a qcsl scan needs CSL parameters")
    records = read_checkpoint(checkpoint) if checkpoint else {}
    todo = [(i, t1, t2, grid.fluence_values, specs)
            for i, t1, t2 in grid.cells() if i not in records]
    if max_cells is not None:
        todo = todo[:max_cells]
    n_workers = worker_count(workers)
    sink = open(checkpoint, "a", encoding="utf-8") if checkpoint else None
    try:
        if n_workers == 1 or len(todo) <= 1:
            results = map(_run_cell, todo)
        else:
            pool = ProcessPoolExecutor(max_workers=n_workers)
            results = pool.map(_run_cell, todo, chunksize=1)
        for rec in results:
            records[rec["cell"]] = rec
            if sink:
                sink.write(json.dumps(rec) + "\n")
                sink.flush()
    finally:
        if sink:
            sink.close()
        if n_workers > 1 and len(todo) > 1:
            pool.shutdown()
    result = ScanResult(grid, target, records)
    result.failures = sorted(i for i, r in records.items() if r["status"] != "ok")
    result.best = _best(result, target)
    done = len(records)
    if result.failures and len(result.failures) > FAILURE_FRACTION * max(done, 1):
        raise PartialScanError(f"{len(result.failures)} of {done} scan cells failed", result)
    return result


def _best(result, target):
    col = 3 if target == "qc" else 4
    best = None
    for row in result.rows():
        v = row[col]
        if math.isnan(v):
            continue
        key = (-v, row[0], row[1], row[2])
        if best is None or key < best[0]:
            best = (key, (row[0], row[1], row[2], v))
    return None if best is None else best[1]


def write_field_csv(result, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELD_HEADER)
        for row in result.rows():
            w.writerow([f"{v:.17g}" for v in row])
    return path


def read_field_csv(path):
    with Path(path).open(encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != FIELD_HEADER:
            raise DomainError(f"unexpected field header {header}")
        return np.array([[float(v) for v in row] for row in r])


# -- exclusion curves -------------------------------------------------------

@dataclass
class ExclusionCurve:
    r_c_values: np.ndarray
    lambda_min: np.ndarray
    status: list
    threshold: float
    digest: str = ""


class _QcslEvaluator:
    """aleph_QCSL(lambda) at fixed protocol, reusing the quantum harmonics."""

    def __init__(self, specs, protocol, grating):
        self.specs, self.protocol, self.grating = specs, protocol, grating
        mp = metric_patterns(protocol, specs.particle, grating, specs.environment, None,
                             specs.window, classical=False, kernel_opts=specs.kernel_opts)
        self.ns, self.w = mp.quantum_harmonics
        self.z, self.pq, self.D = mp.z, mp.quantum, mp.D

    def __call__(self, lam, r_c):
        csl = CslParams(lam, r_c)
        w = csl_weights(self.ns, self.w, self.protocol, self.specs.particle, self.grating, csl)
        ps = synthesize(self.z, self.ns, w, self.D)
        return aleph_values(self.z, self.pq, ps, self.specs.window)[0]


def lambda_threshold(evaluate, r_c, threshold, bracket=LAMBDA_BRACKET, steps=BISECTION_STEPS,
                     probes=23):
    """Smallest lambda in ``bracket`` with evaluate(lambda, r_c) >= threshold.

    A coarse log-spaced probe locates the first crossing (the most
    conservative one if the response is not monotone); bisection in log(lambda)
    then refines it.  Returns (lambda, status, monotone).
    """
    lo, hi = bracket
    grid = np.geomspace(lo, hi, probes)
    vals = np.array([evaluate(l, r_c) for l in grid])
    monotone = bool(np.all(np.diff(vals) >= -1e-12))
    if vals[0] >= threshold:
        return lo, "ok", monotone
    above = np.nonzero(vals >= threshold)[0]
    if above.size == 0:
        return math.nan, "unreachable", monotone
    k = int(above[0])
    a, b = math.log(grid[k - 1]), math.log(grid[k])
    for _ in range(steps):
        mid = 0.5 * (a + b)
        if evaluate(math.exp(mid), r_c) >= threshold:
            b = mid
        else:
            a = mid
    return math.exp(b), "ok", monotone


def _exclusion_point(args):
    specs, protocol, grating, r_c, threshold, bracket, steps = args
    ev = _QcslEvaluator(specs, protocol, grating)
    lam, status, monotone = lambda_threshold(ev, r_c, threshold, bracket, steps)
    if status == "ok" and not monotone:
        status = "ok-nonmonotone"
    return lam, status


def exclusion_curve(specs, protocol, fluence, r_c_values, threshold=ALEPH_THRESHOLD,
                    bracket=LAMBDA_BRACKET, steps=BISECTION_STEPS, workers=None):
    """lambda_min(r_c) at a fixed protocol and fluence."""
    if threshold < 0:
        raise DomainError("threshold must be non-negative")
    grating = specs.grating.with_fluence(fluence)
    r_c_values = np.asarray(r_c_values, dtype=float)
    jobs = [(specs, protocol, grating, float(rc), threshold, bracket, steps) for rc in r_c_values]
    n = worker_count(workers)
    if n == 1 or len(jobs) <= 1:
        out = [_exclusion_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            out = list(pool.map(_exclusion_point, jobs))
    from .pattern import specs_digest
    return ExclusionCurve(r_c_values, np.array([o[0] for o in out]), [o[1] for o in out],
                          threshold, specs_digest(protocol, specs.particle, grating))


def write_exclusion_csv(curve, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EXCLUSION_HEADER)
        for rc, lam, st in zip(curve.r_c_values, curve.lambda_min, curve.status):
            w.writerow([f"{rc:.17g}", f"{lam:.17g}", st])
    return path
