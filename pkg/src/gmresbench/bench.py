"""Problem generation, timing methodology, and speedup tables.

A benchmark row times the serial baseline and each requested backend on
the identical problem instance, then reports ``speedup = t_serial /
t_backend`` per backend. Rows run strictly sequentially and each timing
wraps the solver call only, never problem generation.

Problems are strictly diagonally dominant with standard normal
off-diagonal entries. Raw Gaussian matrices give restarted GMRES
unpredictable convergence, which would make timings incomparable
across backends; dominance guarantees benign convergence while keeping
the operator nonsymmetric. Generation uses the PCG64 generator with an
explicit seed, so tables are reproducible across platforms.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .backends import Backend, BackendId, DispatchPolicy, create_backend
from .gmres import GmresConfig, GmresResult, GmresStatus, gmres_solve
from .linalg import DenseMatrix, Vector
from . import _kernels

DEFAULT_SIZES = tuple(range(1000, 10001, 1000))


class ConvergenceError(RuntimeError):
    """A benchmark solve did not converge. Carries the solver status."""

    def __init__(self, n: int, status: GmresStatus):
        self.n = n
        self.status = status
        super().__init__(f"solve at n={n} ended with status {status.value}")


def generate_problem(n: int, seed: int) -> tuple[DenseMatrix, Vector, Vector]:
    """Seeded random system with a known solution.

    Off-diagonal entries are i.i.d. standard normal; each diagonal entry
    is the absolute row sum of the off-diagonals plus one, which makes
    the matrix strictly diagonally dominant (hence nonsingular) and
    nonsymmetric. ``b`` is computed as ``A @ x_true`` with the
    sequential kernel, so the triple is bitwise reproducible in
    ``(n, seed)``.
    """
    if n < 2:
        raise ValueError("problem size must be >= 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    raw = rng.standard_normal((n, n))
    off_abs_sum = np.abs(raw).sum(axis=1) - np.abs(np.diagonal(raw))
    np.fill_diagonal(raw, off_abs_sum + 1.0)
    x_true = rng.standard_normal(n)
    b = np.empty(n)
    _kernels.matvec_seq(raw, x_true, b)
    return DenseMatrix(raw), Vector(b), Vector(x_true)


def matrix_hash(a: DenseMatrix) -> str:
    """Short content hash identifying a problem instance."""
    return hashlib.sha256(a.data).hexdigest()[:16]


def _timed_runs(
    a: DenseMatrix,
    b: Vector,
    config: GmresConfig,
    backend: Backend,
    policy: DispatchPolicy,
    repeats: int,
    warmup: int,
) -> tuple[float, GmresResult]:
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    n = a.rows

    def run() -> GmresResult:
        res = gmres_solve(a, b, Vector.zeros(n), config, backend=backend, policy=policy)
        if res.status is not GmresStatus.CONVERGED:
            raise ConvergenceError(n, res.status)
        return res

    for _ in range(warmup):
        run()
    samples = []
    results = []
    for _ in range(repeats):
        x0 = Vector.zeros(n)
        t0 = time.perf_counter_ns()
        res = gmres_solve(a, b, x0, config, backend=backend, policy=policy)
        t1 = time.perf_counter_ns()
        if res.status is not GmresStatus.CONVERGED:
            raise ConvergenceError(n, res.status)
        samples.append((t1 - t0) / 1e9)
        results.append(res)
    counts = {(r.total_inner_iterations, r.restarts_used) for r in results}
    if len(counts) != 1:
        raise RuntimeError(f"iteration counts varied across repeats at n={n}: {sorted(counts)}")
    return statistics.median(samples), results[0]


def time_solve(
    a: DenseMatrix,
    b: Vector,
    config: GmresConfig,
    backend: Backend,
    policy: DispatchPolicy,
    repeats: int,
    warmup: int = 0,
) -> float:
    """Median wall seconds over ``repeats`` timed solves from x0 = 0.

    Warmup solves run first, untimed. Every run must converge and all
    runs must agree on iteration counts; otherwise the timing is
    meaningless and an error is raised.
    """
    median, _ = _timed_runs(a, b, config, backend, policy, repeats, warmup)
    return median


@dataclass
class BenchSpec:
    """Benchmark plan: which sizes, which backends, how many repeats."""

    sizes: tuple[int, ...] = DEFAULT_SIZES
    backends: tuple[BackendId, ...] = (BackendId.OFFLOAD_MODEL,)
    repeats: int = 5
    warmup: int = 1
    seed: int = 42
    solver: GmresConfig = field(default_factory=GmresConfig)
    level1_threshold: int = 500_000
    level2_threshold: int = 1

    def __post_init__(self):
        self.sizes = tuple(self.sizes)
        self.backends = tuple(self.backends)
        if not self.sizes:
            raise ValueError("sizes must be nonempty")
        if any(n < 2 for n in self.sizes):
            raise ValueError("every size must be >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")


@dataclass
class BackendTiming:
    backend: BackendId
    seconds: float
    speedup: float


@dataclass
class SpeedupRow:
    n: int
    t_serial_s: float
    timings: list[BackendTiming]
    iterations: int
    restarts: int
    final_residual: float
    matrix_hash: str


@dataclass
class RowError:
    n: int
    message: str


@dataclass
class SpeedupTable:
    backends: tuple[BackendId, ...]
    rows: list[SpeedupRow]
    errors: list[RowError]

    def ok(self) -> bool:
        return not self.errors


def run_benchmark(spec: BenchSpec) -> SpeedupTable:
    """Time the serial baseline and every requested backend per size.

    Rows are sorted by n. A non-converging size becomes a row error and
    the remaining sizes still run, so partial tables stay usable.
    """
    rows: list[SpeedupRow] = []
    errors: list[RowError] = []
    serial_policy = DispatchPolicy(
        level1_threshold=spec.level1_threshold,
        level2_threshold=spec.level2_threshold,
        enabled_backend=BackendId.SERIAL_HOST,
    )
    for n in sorted(spec.sizes):
        a, b, _x_true = generate_problem(n, spec.seed)
        h = matrix_hash(a)
        try:
            t_serial, serial_res = _timed_runs(
                a, b, spec.solver, create_backend(BackendId.SERIAL_HOST),
                serial_policy, spec.repeats, spec.warmup,
            )
            timings = []
            for backend_id in spec.backends:
                policy = DispatchPolicy(
                    level1_threshold=spec.level1_threshold,
                    level2_threshold=spec.level2_threshold,
                    enabled_backend=backend_id,
                )
                t_backend, _ = _timed_runs(
                    a, b, spec.solver, create_backend(backend_id),
                    policy, spec.repeats, spec.warmup,
                )
                timings.append(BackendTiming(backend_id, t_backend, t_serial / t_backend))
        except ConvergenceError as err:
            errors.append(RowError(n, str(err)))
            continue
        if matrix_hash(a) != h:
            raise RuntimeError(f"problem instance changed during row n={n}")
        rows.append(
            SpeedupRow(
                n=n,
                t_serial_s=t_serial,
                timings=timings,
                iterations=serial_res.total_inner_iterations,
                restarts=serial_res.restarts_used,
                final_residual=serial_res.final_residual,
                matrix_hash=h,
            )
        )
    return SpeedupTable(backends=spec.backends, rows=rows, errors=errors)


# -- serialization ---------------------------------------------------------

_META_COLUMNS = ("iterations", "restarts", "final_residual", "matrix_hash", "error")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def table_header(backends: tuple[BackendId, ...]) -> list[str]:
    cols = ["n", "t_serial_s"]
    for b in backends:
        cols.append(f"t_{b.value}_s")
        cols.append(f"speedup_{b.value}")
    cols.extend(_META_COLUMNS)
    return cols


def table_to_csv(table: SpeedupTable) -> str:
    """CSV with '\\n' line endings, '.' decimals, 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table_header(table.backends))
    entries: list[tuple[int, SpeedupRow | RowError]] = [(r.n, r) for r in table.rows]
    entries.extend((e.n, e) for e in table.errors)
    for _, entry in sorted(entries, key=lambda t: t[0]):
        if isinstance(entry, RowError):
            row = [str(entry.n), "", *[""] * (2 * len(table.backends)), "", "", "", "", entry.message]
        else:
            row = [str(entry.n), _fmt(entry.t_serial_s)]
            for t in entry.timings:
                row.append(_fmt(t.seconds))
                row.append(_fmt(t.speedup))
            row.extend(
                [
                    str(entry.iterations),
                    str(entry.restarts),
                    _fmt(entry.final_residual),
                    entry.matrix_hash,
                    "",
                ]
            )
        writer.writerow(row)
    return buf.getvalue()


def table_from_csv(text: str) -> SpeedupTable:
    """Inverse of :func:`table_to_csv`; exact for 17-digit floats."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:2] != ["n", "t_serial_s"] or tuple(header[-5:]) != _META_COLUMNS:
        raise ValueError(f"unrecognized table header: {header!r}")
    backend_cols = header[2:-5]
    if len(backend_cols) % 2 != 0:
        raise ValueError("malformed backend columns")
    backends = tuple(
        BackendId(backend_cols[i][len("speedup_") :]) for i in range(1, len(backend_cols), 2)
    )
    rows: list[SpeedupRow] = []
    errors: list[RowError] = []
    for rec in reader:
        if not rec:
            continue
        if rec[-1]:
            errors.append(RowError(int(rec[0]), rec[-1]))
            continue
        timings = []
        for i, b in enumerate(backends):
            t = float(rec[2 + 2 * i])
            s = float(rec[3 + 2 * i])
            timings.append(BackendTiming(b, t, s))
        base = 2 + 2 * len(backends)
        rows.append(
            SpeedupRow(
                n=int(rec[0]),
                t_serial_s=float(rec[1]),
                timings=timings,
                iterations=int(rec[base]),
                restarts=int(rec[base + 1]),
                final_residual=float(rec[base + 2]),
                matrix_hash=rec[base + 3],
            )
        )
    return SpeedupTable(backends=backends, rows=rows, errors=errors)


def table_to_json(table: SpeedupTable) -> str:
    """The same data as the CSV, as a JSON array of row objects.

    Per-backend entries nest under ``"backends"`` so the serial
    self-comparison does not collide with the baseline key.
    """
    out = []
    for row in table.rows:
        obj = {
            "n": row.n,
            "t_serial_s": row.t_serial_s,
            "backends": {
                t.backend.value: {"t_s": t.seconds, "speedup": t.speedup}
                for t in row.timings
            },
            "iterations": row.iterations,
            "restarts": row.restarts,
            "final_residual": row.final_residual,
            "matrix_hash": row.matrix_hash,
        }
        out.append(obj)
    for err in table.errors:
        out.append({"n": err.n, "error": err.message})
    out.sort(key=lambda o: o["n"])
    return json.dumps(out, indent=2)
