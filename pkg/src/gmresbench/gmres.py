"""Restarted GMRES(m) for dense nonsymmetric systems.

The solver approximates the solution of ``A x = b`` by the member of a
Krylov subspace that minimizes the Euclidean residual norm (Saad and
Schultz, 1986; Kelley, 1995). Each restart cycle runs:

1. Arnoldi iteration with modified Gram-Schmidt, building an
   orthonormal basis ``V`` and an upper-Hessenberg projection ``H``.
2. An incremental QR factorization of ``H`` by Givens rotations, which
   yields the least-squares residual norm of the current iterate for
   free after every step.
3. Back-substitution for the least-squares minimizer, solution update,
   and an explicit recomputation of the true residual ``b - A x``.
   Convergence is only ever declared on the recomputed value.

Cycles repeat from the new iterate until the convergence criterion is
met, a breakdown occurs, or the restart budget is exhausted.

All vector and matrix-vector work is routed through an execution
backend so that the placement policy (see :mod:`gmresbench.backends`)
decides where each operation runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from types import SimpleNamespace
from typing import Callable, Optional

import numpy as np

from . import linalg
from .backends import Backend, DispatchPolicy, Executor, SerialBackend
from .linalg import DenseMatrix, DimensionMismatchError, Vector


class SingularHessenbergError(RuntimeError):
    """The rotated triangular block has a zero diagonal entry.

    Can only happen at exact breakdown of a singular or defective
    operator; surfaced instead of regularized.
    """

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"zero diagonal in triangular block at column {column}")


class ConvergenceCriterion(Enum):
    RELATIVE_TO_B = "rel"
    ABSOLUTE = "abs"


class GmresStatus(Enum):
    CONVERGED = "Converged"
    MAX_RESTARTS_EXCEEDED = "MaxRestartsExceeded"
    BREAKDOWN = "Breakdown"


class StepOutcome(Enum):
    CONTINUE = "continue"
    HAPPY_BREAKDOWN = "happy-breakdown"


class ResidualKind(Enum):
    # Estimates are the |g[j+1]| values maintained by the rotations;
    # recomputed entries are explicit ||b - A x|| norms at cycle
    # boundaries (including the initial residual).
    ESTIMATE = "estimate"
    RECOMPUTED = "recomputed"


@dataclass(frozen=True)
class ResidualRecord:
    kind: ResidualKind
    value: float


@dataclass
class GmresConfig:
    """Solver knobs.

    ``restart_m`` bounds the Krylov dimension per cycle, ``tol`` is the
    convergence tolerance under ``criterion``, ``max_restarts`` bounds
    the number of restart events after the first cycle, and
    ``breakdown_tol`` is relative to ``||A v_j||`` so the happy
    breakdown test is scale invariant.
    """

    restart_m: int = 30
    tol: float = 1e-8
    criterion: ConvergenceCriterion = ConvergenceCriterion.RELATIVE_TO_B
    max_restarts: int = 1000
    breakdown_tol: float = 1e-14
    reorthogonalize: bool = False

    def __post_init__(self):
        if self.restart_m < 1:
            raise ValueError("restart_m must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_restarts < 1:
            raise ValueError("max_restarts must be >= 1")
        if self.breakdown_tol < 0:
            raise ValueError("breakdown_tol must be >= 0")


@dataclass
class KrylovState:
    """Per-cycle Arnoldi workspace.

    ``raw_hessenberg`` keeps the columns exactly as the Arnoldi
    recurrence produced them (so invariants like ``A V_j = V_{j+1} H_j``
    can be checked); ``hessenberg`` holds the same columns after the
    Givens rotations, upper triangular in its leading block. ``g`` is
    the rotated right-hand side of the least-squares problem, starting
    from ``beta * e_1``; ``|g[j]|`` is the current residual estimate.
    """

    basis: list[Vector]
    hessenberg: np.ndarray
    raw_hessenberg: np.ndarray
    givens_c: np.ndarray
    givens_s: np.ndarray
    g: np.ndarray
    beta: float
    m: int
    j: int = 0
    rotated: int = 0  # columns already processed by qr_update


def start_cycle(v1: Vector, beta: float, m: int) -> KrylovState:
    """Fresh Arnoldi workspace seeded with the normalized residual."""
    if m < 1:
        raise ValueError("m must be >= 1")
    g = np.zeros(m + 1)
    g[0] = beta
    return KrylovState(
        basis=[v1],
        hessenberg=np.zeros((m + 1, m)),
        raw_hessenberg=np.zeros((m + 1, m)),
        givens_c=np.zeros(m),
        givens_s=np.zeros(m),
        g=g,
        beta=beta,
        m=m,
    )


# Plain host ops for callers that do not care about placement/accounting.
_HOST_OPS = SimpleNamespace(
    matvec=linalg.matvec,
    dot=linalg.dot,
    norm2=linalg.norm2,
    axpy=linalg.axpy,
    scale=linalg.scale,
)


def initial_residual(a: DenseMatrix, b: Vector, x0: Vector, backend=None):
    """r0 = b - A x0 and its norm."""
    if not a.is_square():
        raise DimensionMismatchError("initial_residual", (a.rows, a.cols), (a.rows, a.rows))
    if len(b) != a.rows or len(x0) != a.cols:
        raise DimensionMismatchError("initial_residual", (a.rows, a.cols), (len(b), len(x0)))
    ops = backend if backend is not None else _HOST_OPS
    r0 = ops.axpy(-1.0, ops.matvec(a, x0), b)
    beta = ops.norm2(r0)
    return r0, beta


def arnoldi_step(
    a: DenseMatrix,
    state: KrylovState,
    backend=None,
    breakdown_tol: float = 1e-14,
    reorthogonalize: bool = False,
) -> StepOutcome:
    """Extend the Krylov basis by one vector with modified Gram-Schmidt.

    Produces column ``state.j`` of the Hessenberg. On happy breakdown
    (``||w|| <= breakdown_tol * ||A v_j||`` after orthogonalization) the
    column is recorded with a zero subdiagonal and no new basis vector
    is appended.
    """
    if state.j >= state.m:
        raise ValueError(f"cycle already has {state.j} of {state.m} columns")
    ops = backend if backend is not None else _HOST_OPS
    k = state.j
    w = ops.matvec(a, state.basis[k])
    av_norm = ops.norm2(w)
    h = state.raw_hessenberg
    for i in range(k + 1):
        hik = ops.dot(w, state.basis[i])
        h[i, k] = hik
        w = ops.axpy(-hik, state.basis[i], w)
    if reorthogonalize:
        # One extra pass; corrections fold into the same column.
        for i in range(k + 1):
            corr = ops.dot(w, state.basis[i])
            h[i, k] += corr
            w = ops.axpy(-corr, state.basis[i], w)
    w_norm = ops.norm2(w)
    if w_norm <= breakdown_tol * av_norm:
        h[k + 1, k] = 0.0
        state.j = k + 1
        return StepOutcome.HAPPY_BREAKDOWN
    h[k + 1, k] = w_norm
    state.basis.append(ops.scale(1.0 / w_norm, w))
    state.j = k + 1
    return StepOutcome.CONTINUE


def qr_update(state: KrylovState) -> float:
    """Rotate the newest Hessenberg column and return the residual estimate.

    Applies the stored rotations to the column, computes the new
    rotation that zeroes its subdiagonal entry, and rotates the
    right-hand side ``g``. The returned ``|g[j]|`` equals the
    least-squares residual norm of the current cycle iterate.
    """
    if state.j < 1:
        raise ValueError("no Hessenberg column to rotate")
    k = state.j - 1
    if state.rotated != k:
        raise ValueError(f"qr_update expects column {state.rotated}, newest is {k}")
    h = state.hessenberg
    h[: k + 2, k] = state.raw_hessenberg[: k + 2, k]
    c, s = state.givens_c, state.givens_s
    for i in range(k):
        hi, hi1 = h[i, k], h[i + 1, k]
        h[i, k] = c[i] * hi + s[i] * hi1
        h[i + 1, k] = -s[i] * hi + c[i] * hi1
    hkk, hk1 = h[k, k], h[k + 1, k]
    r = math.sqrt(hkk * hkk + hk1 * hk1)
    if r == 0.0:
        ck, sk = 1.0, 0.0  # identity rotation; solve_ls flags the singular block
    else:
        ck, sk = hkk / r, hk1 / r
    c[k], s[k] = ck, sk
    h[k, k] = r
    h[k + 1, k] = 0.0
    gk, gk1 = state.g[k], state.g[k + 1]
    state.g[k] = ck * gk + sk * gk1
    state.g[k + 1] = -sk * gk + ck * gk1
    state.rotated = k + 1
    return abs(float(state.g[k + 1]))


def solve_ls(state: KrylovState) -> Vector:
    """Back-substitute the rotated triangular block for the LS minimizer."""
    j = state.j
    if j < 1:
        raise ValueError("empty cycle")
    if state.rotated != j:
        raise ValueError("every column must pass qr_update before solve_ls")
    r = state.hessenberg
    g = state.g
    y = np.zeros(j)
    for i in range(j - 1, -1, -1):
        diag = r[i, i]
        if diag == 0.0:
            raise SingularHessenbergError(i)
        y[i] = (g[i] - r[i, i + 1 : j] @ y[i + 1 : j]) / diag
    return Vector._wrap(y)


def form_solution(x0: Vector, state: KrylovState, y: Vector, backend=None) -> Vector:
    """x0 plus the Krylov correction ``sum_k y_k v_k``."""
    if len(y) != state.j:
        raise DimensionMismatchError("form_solution", (state.j,), (len(y),))
    ops = backend if backend is not None else _HOST_OPS
    x = x0
    for k in range(state.j):
        x = ops.axpy(float(y.data[k]), state.basis[k], x)
    return x


@dataclass
class GmresResult:
    """Solve outcome.

    ``residual_history`` holds the initial residual norm, every in-cycle
    estimate, and the recomputed true residual at each restart boundary.
    On convergence the final recomputed norm is reported in
    ``final_residual`` rather than appended, so the history ends with
    the estimate that triggered the successful recomputation.
    """

    x: Vector
    residual_history: list[ResidualRecord]
    restarts_used: int
    total_matvecs: int
    status: GmresStatus
    total_inner_iterations: int
    final_residual: float

    def residual_values(self) -> list[float]:
        return [rec.value for rec in self.residual_history]


def gmres_solve(
    a: DenseMatrix,
    b: Vector,
    x0: Optional[Vector] = None,
    config: Optional[GmresConfig] = None,
    backend: Optional[Backend] = None,
    policy: Optional[DispatchPolicy] = None,
    on_cycle_end: Optional[Callable[[KrylovState, Vector, float], None]] = None,
) -> GmresResult:
    """Solve ``A x = b`` with restarted GMRES(m).

    ``backend`` supplies the kernels (serial host by default) and
    ``policy`` decides per-op placement; the policy's enabled backend
    must be the provided backend or the serial host. ``on_cycle_end``,
    if given, is called with ``(state, x, true_residual)`` after every
    cycle's residual recomputation; it is meant for invariant checks
    and diagnostics.

    The returned iterate of each cycle minimizes the residual over the
    cycle's Krylov subspace, so the last iterate is also the best one.
    """
    if config is None:
        config = GmresConfig()
    if backend is None:
        backend = SerialBackend()
    if policy is None:
        policy = DispatchPolicy(enabled_backend=backend.id_)
    if not a.is_square():
        raise DimensionMismatchError("gmres_solve", (a.rows, a.cols), (a.rows, a.rows))
    n = a.rows
    if len(b) != n:
        raise DimensionMismatchError("gmres_solve", (a.rows, a.cols), (len(b),))
    if x0 is None:
        x0 = Vector.zeros(n)
    elif len(x0) != n:
        raise DimensionMismatchError("gmres_solve", (a.rows, a.cols), (len(x0),))

    ex = Executor(backend, policy)
    ex.begin_solve()
    try:
        b_norm = ex.norm2(b)
        if config.criterion is ConvergenceCriterion.RELATIVE_TO_B:
            threshold = config.tol * b_norm
        else:
            threshold = config.tol

        history: list[ResidualRecord] = []
        total_matvecs = 0
        total_inner = 0

        x = x0
        r, beta = initial_residual(a, b, x, backend=ex)
        total_matvecs += 1
        history.append(ResidualRecord(ResidualKind.RECOMPUTED, beta))
        if beta <= threshold:
            return GmresResult(
                x=x,
                residual_history=history,
                restarts_used=0,
                total_matvecs=total_matvecs,
                status=GmresStatus.CONVERGED,
                total_inner_iterations=0,
                final_residual=beta,
            )

        status = GmresStatus.MAX_RESTARTS_EXCEEDED
        restarts_used = 0
        final_residual = beta
        for cycle in range(config.max_restarts + 1):
            restarts_used = cycle
            v1 = ex.scale(1.0 / beta, r)
            state = start_cycle(v1, beta, config.restart_m)
            happy = False
            while state.j < config.restart_m:
                outcome = arnoldi_step(
                    a,
                    state,
                    backend=ex,
                    breakdown_tol=config.breakdown_tol,
                    reorthogonalize=config.reorthogonalize,
                )
                total_matvecs += 1
                total_inner += 1
                estimate = qr_update(state)
                history.append(ResidualRecord(ResidualKind.ESTIMATE, estimate))
                if outcome is StepOutcome.HAPPY_BREAKDOWN:
                    happy = True
                    break
                if estimate <= threshold:
                    break

            try:
                y = solve_ls(state)
            except SingularHessenbergError:
                status = GmresStatus.BREAKDOWN
                break
            x = form_solution(x, state, y, backend=ex)

            # Always recompute the true residual; estimates can drift
            # when orthogonality degrades.
            rres = ex.axpy(-1.0, ex.matvec(a, x), b)
            total_matvecs += 1
            true_norm = ex.norm2(rres)
            final_residual = true_norm
            if on_cycle_end is not None:
                on_cycle_end(state, x, true_norm)
            if true_norm <= threshold:
                status = GmresStatus.CONVERGED
                break
            history.append(ResidualRecord(ResidualKind.RECOMPUTED, true_norm))
            if happy:
                # Invariant subspace reached but the criterion is unmet.
                status = GmresStatus.BREAKDOWN
                break
            r, beta = rres, true_norm

        return GmresResult(
            x=x,
            residual_history=history,
            restarts_used=restarts_used,
            total_matvecs=total_matvecs,
            status=status,
            total_inner_iterations=total_inner,
            final_residual=final_residual,
        )
    finally:
        ex.end_solve()
