import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmresbench import (
    BackendId,
    BackendStats,
    DenseMatrix,
    DimensionMismatchError,
    GmresConfig,
    OffloadBackend,
    OpKind,
    ParallelBackend,
    SerialBackend,
    Vector,
    backend_stats_snapshot,
    choose_placement,
    create_backend,
    gmres_solve,
)
from gmresbench.backends import DispatchPolicy, Executor
from gmresbench.bench import generate_problem

from conftest import rng

ACCELERATED = DispatchPolicy(enabled_backend=BackendId.OFFLOAD_MODEL)


class TestChoosePlacement:
    def test_small_level1_stays_on_host(self):
        # Benchmark-scale vectors sit far below the level-1 payoff size.
        assert choose_placement(ACCELERATED, OpKind.LEVEL1, 10_000) is BackendId.SERIAL_HOST

    def test_large_level1_offloads(self):
        assert choose_placement(ACCELERATED, OpKind.LEVEL1, 600_000) is BackendId.OFFLOAD_MODEL

    def test_matvec_offloads(self):
        # 1000x1000 matvec operand.
        assert choose_placement(ACCELERATED, OpKind.LEVEL2, 1_000_000) is BackendId.OFFLOAD_MODEL

    def test_disabled_policy_routes_serial(self):
        policy = DispatchPolicy(enabled_backend=BackendId.SERIAL_HOST)
        assert choose_placement(policy, OpKind.LEVEL2, 10**9) is BackendId.SERIAL_HOST

    def test_rejects_empty_operand(self):
        with pytest.raises(ValueError):
            choose_placement(ACCELERATED, OpKind.LEVEL1, 0)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            DispatchPolicy(level1_threshold=0)

    @given(st.integers(1, 10**7), st.integers(1, 10**7))
    def test_monotone_in_size(self, n1, n2):
        small, large = sorted((n1, n2))
        for kind in OpKind:
            if choose_placement(ACCELERATED, kind, small) is BackendId.OFFLOAD_MODEL:
                assert choose_placement(ACCELERATED, kind, large) is BackendId.OFFLOAD_MODEL

    @given(st.integers(1, 10**7))
    def test_pure(self, n):
        for kind in OpKind:
            assert choose_placement(ACCELERATED, kind, n) is choose_placement(
                ACCELERATED, kind, n
            )


class TestBackendEquivalence:
    @pytest.mark.parametrize("n", [5, 64, 512])
    def test_kernels_agree(self, n):
        g = rng(100 + n)
        a = DenseMatrix(g.standard_normal((n, n)))
        x = Vector(g.standard_normal(n))
        y = Vector(g.standard_normal(n))
        backends = [create_backend(b) for b in BackendId]
        mv = [b.matvec(a, x).data for b in backends]
        dots = [b.dot(x, y) for b in backends]
        norms = [b.norm2(x) for b in backends]
        axpys = [b.axpy(2.5, x, y).data for b in backends]
        for i in (1, 2):
            np.testing.assert_allclose(mv[i], mv[0], rtol=1e-12, atol=0)
            assert dots[i] == pytest.approx(dots[0], rel=1e-12)
            assert norms[i] == pytest.approx(norms[0], rel=1e-12)
            np.testing.assert_allclose(axpys[i], axpys[0], rtol=1e-12, atol=0)

    def test_each_backend_bitwise_deterministic(self):
        g = rng(200)
        a = DenseMatrix(g.standard_normal((130, 130)))
        x = Vector(g.standard_normal(130))
        for backend_id in BackendId:
            b = create_backend(backend_id)
            assert np.array_equal(b.matvec(a, x).data, b.matvec(a, x).data)
            assert b.dot(x, x) == b.dot(x, x)

    def test_chunked_reduction_stays_close_to_sequential(self):
        # Above one reduction chunk the parallel dot rounds differently,
        # but must stay within 1e-13 relative of the sequential result.
        g = rng(201)
        u = Vector(g.standard_normal(20_001))
        v = Vector(g.standard_normal(20_001))
        d_serial = SerialBackend().dot(u, v)
        d_par = ParallelBackend().dot(u, v)
        assert d_par == pytest.approx(d_serial, rel=1e-13, abs=1e-13 * 20_001)


class TestOffloadAccounting:
    def test_first_matvec_uploads_matrix(self):
        n = 1000
        g = rng(300)
        a = DenseMatrix(g.standard_normal((n, n)))
        x = Vector(g.standard_normal(n))
        b = OffloadBackend()
        b.begin_solve()
        b.matvec(a, x)
        # 8 * (n^2 + n) up, 8 * n down.
        assert b.stats.bytes_to_device == 8 * (1_000_000 + 1000)
        assert b.stats.bytes_from_device == 8 * 1000

    def test_second_matvec_reuses_resident_matrix(self):
        n = 1000
        g = rng(301)
        a = DenseMatrix(g.standard_normal((n, n)))
        x = Vector(g.standard_normal(n))
        b = OffloadBackend()
        b.begin_solve()
        b.matvec(a, x)
        before = b.stats.bytes_to_device
        b.matvec(a, x)
        assert b.stats.bytes_to_device - before == 8 * 1000

    def test_new_solve_reuploads(self):
        g = rng(302)
        a = DenseMatrix(g.standard_normal((10, 10)))
        x = Vector(g.standard_normal(10))
        b = OffloadBackend()
        b.begin_solve()
        b.matvec(a, x)
        b.end_solve()
        b.begin_solve()
        b.matvec(a, x)
        assert b.stats.bytes_to_device == 2 * 8 * 100 + 2 * 8 * 10

    def test_identity_result_unchanged(self):
        x = Vector([1.0, 2.0, 3.0])
        b = OffloadBackend()
        b.begin_solve()
        assert np.array_equal(b.matvec(DenseMatrix.identity(3), x).data, x.data)

    def test_matches_reference_matvec(self):
        from gmresbench import matvec

        g = rng(303)
        a = DenseMatrix(g.standard_normal((77, 77)))
        x = Vector(g.standard_normal(77))
        b = OffloadBackend()
        b.begin_solve()
        np.testing.assert_allclose(
            b.matvec(a, x).data, matvec(a, x).data, rtol=1e-12, atol=0
        )

    def test_dimension_mismatch(self):
        b = OffloadBackend()
        with pytest.raises(DimensionMismatchError):
            b.matvec(DenseMatrix.identity(3), Vector([1.0, 2.0]))


class TestStats:
    def test_snapshot_zero_after_reset(self):
        b = SerialBackend()
        b.dot(Vector([1.0]), Vector([1.0]))
        b.reset_stats()
        assert backend_stats_snapshot(b) == BackendStats()

    def test_snapshot_counts_single_matvec(self):
        g = rng(400)
        a = DenseMatrix(g.standard_normal((100, 100)))
        x = Vector(g.standard_normal(100))
        b = SerialBackend()
        b.matvec(a, x)
        snap = backend_stats_snapshot(b)
        assert snap.matvec_count == 1
        assert snap.level1_op_count == 0

    def test_snapshot_is_a_copy(self):
        b = SerialBackend()
        snap = backend_stats_snapshot(b)
        b.dot(Vector([1.0]), Vector([1.0]))
        assert snap.level1_op_count == 0

    def test_counters_monotone(self):
        b = ParallelBackend()
        v = Vector([1.0, 2.0])
        seen = []
        for _ in range(4):
            b.axpy(1.0, v, v)
            seen.append(b.stats.level1_op_count)
        assert seen == sorted(seen)
        assert b.stats.elapsed_level1_ns >= 0

    def test_matvec_count_matches_solver_over_solves(self):
        backend = create_backend(BackendId.OFFLOAD_MODEL)
        policy = DispatchPolicy(enabled_backend=BackendId.OFFLOAD_MODEL)
        total = 0
        for seed in (1, 2, 3):
            a, b, _ = generate_problem(60, seed)
            res = gmres_solve(
                a, b, config=GmresConfig(restart_m=5, tol=1e-10),
                backend=backend, policy=policy,
            )
            total += res.total_matvecs
        assert backend.stats.matvec_count == total

    def test_transfer_lower_bound_when_offloaded(self):
        n = 50
        a, b, _ = generate_problem(n, 9)
        backend = create_backend(BackendId.OFFLOAD_MODEL)
        policy = DispatchPolicy(enabled_backend=BackendId.OFFLOAD_MODEL)
        gmres_solve(a, b, backend=backend, policy=policy)
        assert backend.stats.bytes_to_device >= 8 * n * n


class TestExecutor:
    def test_rejects_mismatched_policy(self):
        with pytest.raises(ValueError, match="routes to"):
            Executor(SerialBackend(), DispatchPolicy(enabled_backend=BackendId.OFFLOAD_MODEL))

    def test_small_level1_ops_run_on_serial_companion(self):
        backend = OffloadBackend()
        ex = Executor(backend, DispatchPolicy(enabled_backend=BackendId.OFFLOAD_MODEL))
        ex.dot(Vector([1.0, 2.0]), Vector([3.0, 4.0]))
        assert backend.stats.level1_op_count == 0
        assert backend.stats.bytes_to_device == 0

    def test_large_level1_ops_reach_backend(self):
        backend = OffloadBackend()
        ex = Executor(
            backend,
            DispatchPolicy(level1_threshold=10, enabled_backend=BackendId.OFFLOAD_MODEL),
        )
        v = Vector(np.ones(32))
        ex.dot(v, v)
        assert backend.stats.level1_op_count == 1
        assert backend.stats.bytes_to_device == 8 * 64
