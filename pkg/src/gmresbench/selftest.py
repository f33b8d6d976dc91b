"""One-command correctness checks, exposed as the ``selftest`` subcommand.

Runs the cheap end of the invariant suite (Arnoldi relation, basis
orthonormality, direct-solver equivalence at n <= 100, dispatch
routing, transfer accounting) so users can sanity-check a build before
trusting benchmark numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .backends import (
    BackendId,
    DispatchPolicy,
    OpKind,
    choose_placement,
    create_backend,
)
from .bench import generate_problem
from .direct import solve_direct
from .gmres import GmresConfig, GmresStatus, KrylovState, gmres_solve
from .linalg import DenseMatrix, Vector


def arnoldi_relation_defect(a: DenseMatrix, state: KrylovState) -> float:
    """Frobenius norm of ``A V_j - V_(j+1) H_j`` for a finished cycle.

    Uses plain numpy products, independent of the backend kernels. After
    a happy breakdown the basis has only j vectors and the last
    Hessenberg row is zero, which the slicing below handles naturally.
    """
    j = state.j
    v_all = np.column_stack([v.data for v in state.basis])
    h = state.raw_hessenberg[: v_all.shape[1], :j]
    defect = a.data @ v_all[:, :j] - v_all @ h
    return float(np.linalg.norm(defect))


def orthonormality_defect(state: KrylovState) -> float:
    """max |V^T V - I| over the current basis."""
    v_all = np.column_stack([v.data for v in state.basis])
    gram = v_all.T @ v_all
    return float(np.max(np.abs(gram - np.eye(v_all.shape[1]))))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_kernel_examples() -> str:
    eye = DenseMatrix.identity(3)
    v = Vector([1.0, 2.0, 3.0])
    assert np.array_equal(linalg.matvec(eye, v).data, v.data)
    assert linalg.dot(Vector([1, 0, 0]), Vector([0, 1, 0])) == 0.0
    assert linalg.norm2(Vector([3.0, 4.0])) == 5.0
    assert np.array_equal(linalg.axpy(-2.0, Vector([1, 1]), Vector([5, 3])).data, [3.0, 1.0])
    return "level-1/level-2 kernel examples"


def _check_direct_equivalence() -> str:
    worst = 0.0
    for seed, n in [(11, 20), (12, 50), (13, 100)]:
        a, b, _ = generate_problem(n, seed)
        res = gmres_solve(a, b, config=GmresConfig(tol=1e-10))
        assert res.status is GmresStatus.CONVERGED, res.status
        x_direct = solve_direct(a, b)
        rel = float(
            np.linalg.norm(res.x.data - x_direct.data) / np.linalg.norm(x_direct.data)
        )
        worst = max(worst, rel)
        assert rel <= 1e-6, rel
    return f"GMRES matches LU solve, worst rel err {worst:.2e}"


def _check_cycle_invariants() -> str:
    worst_rel = 0.0
    worst_orth = 0.0
    for seed, n in [(21, 40), (22, 80), (23, 100)]:
        a, b, _ = generate_problem(n, seed)
        defects = []

        def observe(state, _x, _res):
            defects.append(
                (arnoldi_relation_defect(a, state), orthonormality_defect(state))
            )

        # Short cycles keep plain-MGS orthogonality well inside the
        # 1e-8 bound (the defect grows with in-cycle residual reduction).
        res = gmres_solve(
            a, b, config=GmresConfig(restart_m=5, tol=1e-8), on_cycle_end=observe
        )
        assert res.status is GmresStatus.CONVERGED
        assert defects
        a_norm = float(np.linalg.norm(a.data))
        for rel_defect, orth in defects:
            worst_rel = max(worst_rel, rel_defect / a_norm)
            worst_orth = max(worst_orth, orth)
        assert worst_rel <= 1e-10, worst_rel
        assert worst_orth <= 1e-8, worst_orth
    return f"Arnoldi relation {worst_rel:.2e}, orthonormality {worst_orth:.2e}"


def _check_dispatch() -> str:
    policy = DispatchPolicy(enabled_backend=BackendId.OFFLOAD_MODEL)
    assert choose_placement(policy, OpKind.LEVEL1, 10_000) is BackendId.SERIAL_HOST
    assert choose_placement(policy, OpKind.LEVEL1, 600_000) is BackendId.OFFLOAD_MODEL
    assert choose_placement(policy, OpKind.LEVEL2, 1_000_000) is BackendId.OFFLOAD_MODEL
    return "size-threshold routing anchors"


def _check_transfer_accounting() -> str:
    n = 64
    a, b, _ = generate_problem(n, 31)
    backend = create_backend(BackendId.OFFLOAD_MODEL)
    policy = DispatchPolicy(enabled_backend=BackendId.OFFLOAD_MODEL)
    res = gmres_solve(a, b, config=GmresConfig(tol=1e-10), backend=backend, policy=policy)
    assert res.status is GmresStatus.CONVERGED
    k = res.total_matvecs
    expect_to = 8 * (n * n + k * n)
    expect_from = 8 * k * n
    assert backend.stats.bytes_to_device == expect_to, backend.stats.bytes_to_device
    assert backend.stats.bytes_from_device == expect_from, backend.stats.bytes_from_device
    return f"exact transfer bytes for {k} offloaded matvecs"


def _check_backend_equivalence() -> str:
    a, b, _ = generate_problem(96, 41)
    solutions = {}
    for backend_id in BackendId:
        backend = create_backend(backend_id)
        policy = DispatchPolicy(enabled_backend=backend_id)
        res = gmres_solve(a, b, config=GmresConfig(tol=1e-10), backend=backend, policy=policy)
        assert res.status is GmresStatus.CONVERGED
        solutions[backend_id] = res.x.data
    ref = solutions[BackendId.SERIAL_HOST]
    scale = float(np.linalg.norm(ref))
    worst = max(
        float(np.linalg.norm(solutions[bid] - ref)) / scale for bid in BackendId
    )
    assert worst <= 1e-9, worst
    return f"serial/parallel/offload solutions agree, worst {worst:.2e}"


_CHECKS = [
    ("kernel-examples", _check_kernel_examples),
    ("direct-solver-equivalence", _check_direct_equivalence),
    ("cycle-invariants", _check_cycle_invariants),
    ("dispatch-routing", _check_dispatch),
    ("transfer-accounting", _check_transfer_accounting),
    ("backend-equivalence", _check_backend_equivalence),
]


def run_selftest() -> list[CheckResult]:
    results = []
    for name, fn in _CHECKS:
        try:
            detail = fn()
            results.append(CheckResult(name, True, detail))
        except AssertionError as err:
            results.append(CheckResult(name, False, f"assertion failed: {err}"))
        except Exception as err:  # surface, don't crash the remaining checks
            results.append(CheckResult(name, False, f"{type(err).__name__}: {err}"))
    return results
