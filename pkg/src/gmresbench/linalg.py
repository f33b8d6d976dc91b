"""Dense vector/matrix value types and the level-1/level-2 kernel surface.

The module-level functions (:func:`matvec`, :func:`dot`, :func:`norm2`,
:func:`axpy`, :func:`scale`) are the sequential reference kernels; the
execution backends in :mod:`gmresbench.backends` provide the same
operations with identical contracts.

All data is 64-bit float, row-major, and frozen on construction:
``Vector`` and ``DenseMatrix`` mark their buffers read-only, so values
can be shared freely across threads.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels


class DimensionMismatchError(ValueError):
    """Operand shapes do not agree. Carries both shapes."""

    def __init__(self, op: str, shape_a, shape_b):
        self.op = op
        self.shape_a = shape_a
        self.shape_b = shape_b
        super().__init__(f"{op}: incompatible shapes {shape_a} and {shape_b}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Vector:
    """Immutable dense float64 vector.

    Construction validates that the vector is nonempty and every element
    is finite. The underlying buffer is marked read-only; it may share
    memory with the input array, so callers that want to keep mutating
    their array should pass a copy.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"Vector needs 1-d data, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("Vector must have at least one element")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Vector elements must be finite (no NaN/Inf)")
        self.data = _freeze(arr)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        return f"Vector(len={len(self)})"

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Vector":
        # Fast path for kernel outputs: already float64, contiguous, finite.
        v = object.__new__(cls)
        v.data = _freeze(arr)
        return v

    @staticmethod
    def zeros(n: int) -> "Vector":
        return Vector(np.zeros(n))


class DenseMatrix:
    """Immutable row-major dense float64 matrix.

    Construction validates shape consistency and that all elements are
    finite. Squareness is not required here; solver entry points assert
    it themselves.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"DenseMatrix needs 2-d data, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("DenseMatrix must have at least one row and column")
        if not np.all(np.isfinite(arr)):
            raise ValueError("DenseMatrix elements must be finite (no NaN/Inf)")
        self.data = _freeze(arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def size(self) -> int:
        return self.data.size

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __repr__(self) -> str:
        return f"DenseMatrix({self.rows}x{self.cols})"

    @staticmethod
    def identity(n: int) -> "DenseMatrix":
        return DenseMatrix(np.eye(n))


def _check_matvec(a: DenseMatrix, x: Vector) -> None:
    if a.cols != len(x):
        raise DimensionMismatchError("matvec", (a.rows, a.cols), (len(x),))


def _check_same_length(op: str, u: Vector, v: Vector) -> None:
    if len(u) != len(v):
        raise DimensionMismatchError(op, (len(u),), (len(v),))


def matvec(a: DenseMatrix, x: Vector) -> Vector:
    """y = A x with each row accumulated left to right."""
    _check_matvec(a, x)
    out = np.empty(a.rows)
    _kernels.matvec_seq(a.data, x.data, out)
    return Vector._wrap(out)


def dot(u: Vector, v: Vector) -> float:
    """Inner product, accumulated strictly left to right."""
    _check_same_length("dot", u, v)
    return float(_kernels.dot_seq(u.data, v.data))


def norm2(v: Vector) -> float:
    """Euclidean norm, sqrt(dot(v, v)).

    Plain square-and-sum: no two-pass overflow scaling. Adequate for
    entries of order one at the sizes this library targets.
    """
    return math.sqrt(float(_kernels.dot_seq(v.data, v.data)))


def axpy(alpha: float, x: Vector, y: Vector) -> Vector:
    """alpha * x + y, elementwise."""
    _check_same_length("axpy", x, y)
    out = np.empty(len(x))
    _kernels.axpy_seq(alpha, x.data, y.data, out)
    return Vector._wrap(out)


def scale(alpha: float, v: Vector) -> Vector:
    """alpha * v, elementwise. Caller guards against alpha from a zero divisor."""
    out = np.empty(len(v))
    _kernels.scale_seq(alpha, v.data, out)
    return Vector._wrap(out)
