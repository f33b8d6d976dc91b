"""Execution backends and the size-threshold dispatch policy.

Three backends share one kernel contract:

* ``SerialBackend``: sequential host kernels, the baseline.
* ``ParallelBackend``: data-parallel host kernels (rows for matvec,
  fixed-chunk reductions for dot/norm), still run-to-run deterministic.
* ``OffloadBackend``: the parallel kernels plus an accounting model of
  host/device transfers. It does not execute on a real device; the
  dispatch thresholds and the byte counters are the transferable part
  of an accelerator port, while actual device speedups are hardware
  bound and not modeled.

Offload residency model: the matrix operand of a matvec is charged to
``bytes_to_device`` once per solve (it stays cached on the device for
the remaining iterations); vector operands and results are charged on
every call. Level-1 operands are charged only when a level-1 op is
actually routed here, which under default thresholds requires vectors
of more than 500k elements.

``choose_placement`` routes an operation to the policy's accelerated
backend only when the operand is large enough that kernel gains
plausibly outweigh transfer overhead; everything else stays on the
serial host. Matvec offload pays off at moderate sizes, so its default
threshold is 1 element; vector-vector ops need very large operands, so
their default threshold is 500k elements.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import _kernels
from .linalg import (
    DenseMatrix,
    Vector,
    _check_matvec,
    _check_same_length,
)

FLOAT64_BYTES = 8


class BackendId(Enum):
    SERIAL_HOST = "serial"
    PARALLEL_HOST = "parallel"
    OFFLOAD_MODEL = "offload-model"


class OpKind(Enum):
    LEVEL1 = "level1"
    LEVEL2 = "level2"


@dataclass
class DispatchPolicy:
    """Size thresholds for routing ops to the accelerated backend.

    ``level1_threshold`` is deliberately large: vector-vector ops only
    beat the host beyond several hundred thousand elements.
    ``level2_threshold`` defaults to 1 so matvec is always offloaded
    when an accelerated backend is enabled.
    """

    level1_threshold: int = 500_000
    level2_threshold: int = 1
    enabled_backend: BackendId = BackendId.SERIAL_HOST

    def __post_init__(self):
        if self.level1_threshold < 1:
            raise ValueError("level1_threshold must be >= 1")
        if self.level2_threshold < 1:
            raise ValueError("level2_threshold must be >= 1")


@dataclass
class BackendStats:
    """Per-backend operation and transfer counters.

    Counters only grow while a backend is in use; ``reset`` zeroes them.
    ``elapsed_level1_ns``/``elapsed_level2_ns`` accumulate wall time per
    op kind.
    """

    matvec_count: int = 0
    level1_op_count: int = 0
    bytes_to_device: int = 0
    bytes_from_device: int = 0
    elapsed_level1_ns: int = 0
    elapsed_level2_ns: int = 0

    def snapshot(self) -> "BackendStats":
        return replace(self)

    def reset(self) -> None:
        self.matvec_count = 0
        self.level1_op_count = 0
        self.bytes_to_device = 0
        self.bytes_from_device = 0
        self.elapsed_level1_ns = 0
        self.elapsed_level2_ns = 0


def choose_placement(policy: DispatchPolicy, op_kind: OpKind, operand_elements: int) -> BackendId:
    """Pick the backend for one operation. Pure and monotone in size."""
    if operand_elements < 1:
        raise ValueError("operand_elements must be >= 1")
    if op_kind is OpKind.LEVEL1:
        threshold = policy.level1_threshold
    else:
        threshold = policy.level2_threshold
    if operand_elements > threshold:
        return policy.enabled_backend
    return BackendId.SERIAL_HOST


def backend_stats_snapshot(backend: "Backend") -> BackendStats:
    """Point-in-time copy of a backend's counters."""
    return backend.stats.snapshot()


class Backend:
    """Kernel provider with op/transfer accounting.

    A backend instance is used by at most one solve at a time; its
    ``stats`` belong to the owning solve between resets.
    """

    id_: BackendId = BackendId.SERIAL_HOST
    _dot = staticmethod(_kernels.dot_seq)
    _matvec = staticmethod(_kernels.matvec_seq)
    _axpy = staticmethod(_kernels.axpy_seq)
    _scale = staticmethod(_kernels.scale_seq)

    def __init__(self):
        self.stats = BackendStats()

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"

    def begin_solve(self) -> None:
        """Called at solve entry; clears per-solve device residency."""

    def end_solve(self) -> None:
        """Called at solve exit; releases per-solve references."""

    def reset_stats(self) -> None:
        self.stats.reset()

    # -- kernels ----------------------------------------------------------

    def matvec(self, a: DenseMatrix, x: Vector) -> Vector:
        _check_matvec(a, x)
        t0 = time.perf_counter_ns()
        out = np.empty(a.rows)
        self._matvec(a.data, x.data, out)
        self.stats.elapsed_level2_ns += time.perf_counter_ns() - t0
        self.stats.matvec_count += 1
        return Vector._wrap(out)

    def dot(self, u: Vector, v: Vector) -> float:
        _check_same_length("dot", u, v)
        t0 = time.perf_counter_ns()
        r = float(self._dot(u.data, v.data))
        self.stats.elapsed_level1_ns += time.perf_counter_ns() - t0
        self.stats.level1_op_count += 1
        return r

    def norm2(self, v: Vector) -> float:
        t0 = time.perf_counter_ns()
        r = float(self._dot(v.data, v.data)) ** 0.5
        self.stats.elapsed_level1_ns += time.perf_counter_ns() - t0
        self.stats.level1_op_count += 1
        return r

    def axpy(self, alpha: float, x: Vector, y: Vector) -> Vector:
        _check_same_length("axpy", x, y)
        t0 = time.perf_counter_ns()
        out = np.empty(len(x))
        self._axpy(alpha, x.data, y.data, out)
        self.stats.elapsed_level1_ns += time.perf_counter_ns() - t0
        self.stats.level1_op_count += 1
        return Vector._wrap(out)

    def scale(self, alpha: float, v: Vector) -> Vector:
        t0 = time.perf_counter_ns()
        out = np.empty(len(v))
        self._scale(alpha, v.data, out)
        self.stats.elapsed_level1_ns += time.perf_counter_ns() - t0
        self.stats.level1_op_count += 1
        return Vector._wrap(out)


class SerialBackend(Backend):
    """Sequential host kernels; the benchmark baseline."""

    id_ = BackendId.SERIAL_HOST


class ParallelBackend(Backend):
    """Data-parallel host kernels with deterministic reductions."""

    id_ = BackendId.PARALLEL_HOST
    _dot = staticmethod(_kernels.dot_par)
    _matvec = staticmethod(_kernels.matvec_par)
    _axpy = staticmethod(_kernels.axpy_par)
    _scale = staticmethod(_kernels.scale_par)


class OffloadBackend(ParallelBackend):
    """Parallel kernels plus host/device transfer accounting.

    The matrix of a matvec is charged once per solve (device cache);
    vectors cross the boundary on every call.
    """

    id_ = BackendId.OFFLOAD_MODEL

    def __init__(self):
        super().__init__()
        self._resident_matrix: DenseMatrix | None = None

    def begin_solve(self) -> None:
        self._resident_matrix = None

    def end_solve(self) -> None:
        self._resident_matrix = None

    def matvec(self, a: DenseMatrix, x: Vector) -> Vector:
        if self._resident_matrix is not a:
            self.stats.bytes_to_device += FLOAT64_BYTES * a.size
            self._resident_matrix = a
        self.stats.bytes_to_device += FLOAT64_BYTES * len(x)
        out = super().matvec(a, x)
        self.stats.bytes_from_device += FLOAT64_BYTES * len(out)
        return out

    def dot(self, u: Vector, v: Vector) -> float:
        self.stats.bytes_to_device += FLOAT64_BYTES * (len(u) + len(v))
        r = super().dot(u, v)
        self.stats.bytes_from_device += FLOAT64_BYTES
        return r

    def norm2(self, v: Vector) -> float:
        self.stats.bytes_to_device += FLOAT64_BYTES * len(v)
        r = super().norm2(v)
        self.stats.bytes_from_device += FLOAT64_BYTES
        return r

    def axpy(self, alpha: float, x: Vector, y: Vector) -> Vector:
        self.stats.bytes_to_device += FLOAT64_BYTES * (len(x) + len(y))
        out = super().axpy(alpha, x, y)
        self.stats.bytes_from_device += FLOAT64_BYTES * len(out)
        return out

    def scale(self, alpha: float, v: Vector) -> Vector:
        self.stats.bytes_to_device += FLOAT64_BYTES * len(v)
        out = super().scale(alpha, v)
        self.stats.bytes_from_device += FLOAT64_BYTES * len(out)
        return out


_BACKEND_CLASSES = {
    BackendId.SERIAL_HOST: SerialBackend,
    BackendId.PARALLEL_HOST: ParallelBackend,
    BackendId.OFFLOAD_MODEL: OffloadBackend,
}


def create_backend(backend_id: BackendId) -> Backend:
    return _BACKEND_CLASSES[backend_id]()


class Executor:
    """Routes every kernel call through :func:`choose_placement`.

    Holds the caller's backend plus a serial companion for ops the
    policy keeps on the host. The policy's enabled backend must be the
    given backend (or the serial host), otherwise routing would demand
    an instance that does not exist.
    """

    def __init__(self, backend: Backend, policy: DispatchPolicy):
        if policy.enabled_backend not in (BackendId.SERIAL_HOST, backend.id_):
            raise ValueError(
                f"policy routes to {policy.enabled_backend.value!r} "
                f"but the provided backend is {backend.id_.value!r}"
            )
        self.backend = backend
        self.policy = policy
        if backend.id_ is BackendId.SERIAL_HOST:
            self._serial: Backend = backend
        else:
            self._serial = SerialBackend()

    def _route(self, op_kind: OpKind, operand_elements: int) -> Backend:
        placement = choose_placement(self.policy, op_kind, operand_elements)
        if placement is self.backend.id_:
            return self.backend
        return self._serial

    def begin_solve(self) -> None:
        self.backend.begin_solve()
        self._serial.begin_solve()

    def end_solve(self) -> None:
        self.backend.end_solve()
        self._serial.end_solve()

    def matvec(self, a: DenseMatrix, x: Vector) -> Vector:
        return self._route(OpKind.LEVEL2, a.size).matvec(a, x)

    def dot(self, u: Vector, v: Vector) -> float:
        return self._route(OpKind.LEVEL1, len(u)).dot(u, v)

    def norm2(self, v: Vector) -> float:
        return self._route(OpKind.LEVEL1, len(v)).norm2(v)

    def axpy(self, alpha: float, x: Vector, y: Vector) -> Vector:
        return self._route(OpKind.LEVEL1, len(x)).axpy(alpha, x, y)

    def scale(self, alpha: float, v: Vector) -> Vector:
        return self._route(OpKind.LEVEL1, len(v)).scale(alpha, v)
