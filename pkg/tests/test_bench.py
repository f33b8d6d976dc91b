import json

import numpy as np
import pytest

import gmresbench.bench as bench_mod
from gmresbench import (
    BackendId,
    BenchSpec,
    ConvergenceError,
    GmresConfig,
    GmresStatus,
    SerialBackend,
    Vector,
    gmres_solve,
    run_benchmark,
    solve_direct,
    table_from_csv,
    table_to_csv,
    table_to_json,
    time_solve,
)
from gmresbench.backends import DispatchPolicy
from gmresbench.bench import generate_problem, matrix_hash


class TestGenerateProblem:
    def test_bitwise_deterministic(self):
        a1, b1, x1 = generate_problem(64, 9)
        a2, b2, x2 = generate_problem(64, 9)
        assert np.array_equal(a1.data, a2.data)
        assert np.array_equal(b1.data, b2.data)
        assert np.array_equal(x1.data, x2.data)

    def test_different_seeds_differ(self):
        a1, _, _ = generate_problem(16, 1)
        a2, _, _ = generate_problem(16, 2)
        assert not np.array_equal(a1.data, a2.data)

    @pytest.mark.parametrize("n,seed", [(10, 0), (57, 3), (128, 11)])
    def test_strict_diagonal_dominance(self, n, seed):
        a, _, _ = generate_problem(n, seed)
        diag = np.abs(np.diagonal(a.data))
        off = np.abs(a.data).sum(axis=1) - diag
        assert np.all(diag > off)

    def test_not_symmetric(self):
        a, _, _ = generate_problem(32, 5)
        assert not np.array_equal(a.data, a.data.T)

    def test_rejects_tiny_sizes(self):
        with pytest.raises(ValueError):
            generate_problem(1, 0)

    def test_solver_recovers_known_solution(self):
        a, b, x_true = generate_problem(80, 21)
        res = gmres_solve(a, b, config=GmresConfig(tol=1e-10))
        assert res.status is GmresStatus.CONVERGED
        rel = np.linalg.norm(res.x.data - x_true.data) / np.linalg.norm(x_true.data)
        assert rel <= 1e-6
        x_lu = solve_direct(a, b)
        rel_lu = np.linalg.norm(res.x.data - x_lu.data) / np.linalg.norm(x_lu.data)
        assert rel_lu <= 1e-6


class TestTimeSolve:
    def _problem(self):
        return generate_problem(40, 17)

    def test_returns_median_of_samples(self, monkeypatch):
        a, b, _ = self._problem()
        # One (t0, t1) pair per timed run: deltas of 3 s, 1 s, 2 s.
        ticks = iter([0, 3_000_000_000, 0, 1_000_000_000, 0, 2_000_000_000])

        class FakeTime:
            @staticmethod
            def perf_counter_ns():
                return next(ticks)

        monkeypatch.setattr(bench_mod, "time", FakeTime)
        t = time_solve(
            a, b, GmresConfig(), SerialBackend(), DispatchPolicy(), repeats=3, warmup=0
        )
        assert t == 2.0

    def test_single_repeat(self):
        a, b, _ = self._problem()
        t = time_solve(
            a, b, GmresConfig(), SerialBackend(), DispatchPolicy(), repeats=1, warmup=0
        )
        assert t > 0.0

    def test_rejects_zero_repeats(self):
        a, b, _ = self._problem()
        with pytest.raises(ValueError):
            time_solve(a, b, GmresConfig(), SerialBackend(), DispatchPolicy(), repeats=0)

    def test_nonconvergence_carries_status(self):
        a, b, _ = self._problem()
        config = GmresConfig(tol=1e-30, max_restarts=1)
        with pytest.raises(ConvergenceError) as exc:
            time_solve(a, b, config, SerialBackend(), DispatchPolicy(), repeats=1)
        assert exc.value.status is GmresStatus.MAX_RESTARTS_EXCEEDED

    def test_repeat_runs_report_identical_iterations(self):
        a, b, _ = self._problem()
        results = []
        for _ in range(2):
            res = gmres_solve(a, b, Vector.zeros(40), GmresConfig())
            results.append((res.total_inner_iterations, res.restarts_used))
        assert results[0] == results[1]


class TestBenchSpec:
    def test_defaults_mirror_documented_values(self):
        spec = BenchSpec()
        assert spec.sizes == tuple(range(1000, 10001, 1000))
        assert spec.repeats == 5
        assert spec.warmup == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            BenchSpec(sizes=())
        with pytest.raises(ValueError):
            BenchSpec(sizes=(1,))
        with pytest.raises(ValueError):
            BenchSpec(repeats=0)


class TestRunBenchmark:
    def _small_spec(self, **kwargs):
        defaults = dict(
            sizes=(40, 60),
            backends=(BackendId.SERIAL_HOST, BackendId.OFFLOAD_MODEL),
            repeats=2,
            warmup=1,
            seed=7,
        )
        defaults.update(kwargs)
        return BenchSpec(**defaults)

    def test_rows_sorted_and_complete(self):
        table = run_benchmark(self._small_spec(sizes=(60, 40)))
        assert [r.n for r in table.rows] == [40, 60]
        assert table.ok()
        for row in table.rows:
            assert row.t_serial_s > 0
            assert len(row.timings) == 2
            assert row.matrix_hash
            assert row.final_residual >= 0

    def test_speedup_is_exact_quotient(self):
        table = run_benchmark(self._small_spec())
        for row in table.rows:
            for t in row.timings:
                assert t.speedup == row.t_serial_s / t.seconds

    def test_identical_instance_hash(self):
        table = run_benchmark(self._small_spec(sizes=(40,)))
        a, _, _ = generate_problem(40, 7)
        assert table.rows[0].matrix_hash == matrix_hash(a)

    def test_nonconvergent_rows_become_errors(self):
        spec = self._small_spec(
            sizes=(30, 40), solver=GmresConfig(tol=1e-30, max_restarts=1)
        )
        table = run_benchmark(spec)
        assert not table.ok()
        assert [e.n for e in table.errors] == [30, 40]
        assert "MaxRestartsExceeded" in table.errors[0].message
        assert table.rows == []

    def test_seeded_metadata_reproducible(self):
        t1 = run_benchmark(self._small_spec(sizes=(50,)))
        t2 = run_benchmark(self._small_spec(sizes=(50,)))
        r1, r2 = t1.rows[0], t2.rows[0]
        assert (r1.n, r1.iterations, r1.restarts, r1.final_residual, r1.matrix_hash) == (
            r2.n, r2.iterations, r2.restarts, r2.final_residual, r2.matrix_hash
        )


class TestSerialization:
    def _table(self):
        return run_benchmark(
            BenchSpec(
                sizes=(40, 50),
                backends=(BackendId.SERIAL_HOST, BackendId.PARALLEL_HOST),
                repeats=1,
                warmup=0,
                seed=3,
            )
        )

    def test_csv_round_trip_exact(self):
        table = self._table()
        assert table_from_csv(table_to_csv(table)) == table

    def test_csv_round_trip_with_errors(self):
        spec = BenchSpec(
            sizes=(30,), backends=(BackendId.SERIAL_HOST,),
            repeats=1, warmup=0, solver=GmresConfig(tol=1e-30, max_restarts=1),
        )
        table = run_benchmark(spec)
        assert not table.ok()
        assert table_from_csv(table_to_csv(table)) == table

    def test_csv_header_layout(self):
        table = self._table()
        header = table_to_csv(table).splitlines()[0]
        assert header.startswith("n,t_serial_s,t_serial_s,speedup_serial,t_parallel_s,speedup_parallel")

    def test_csv_uses_unix_newlines(self):
        text = table_to_csv(self._table())
        assert "\r" not in text
        assert text.endswith("\n")

    def test_json_shape(self):
        table = self._table()
        data = json.loads(table_to_json(table))
        assert len(data) == 2
        for obj in data:
            assert set(obj) >= {"n", "t_serial_s", "backends", "iterations", "matrix_hash"}
            assert set(obj["backends"]) == {"serial", "parallel"}
            for entry in obj["backends"].values():
                assert entry["speedup"] == obj["t_serial_s"] / entry["t_s"]
