"""Dense LU direct solver with partial pivoting.

Deliberately separate from the iterative path: it shares no kernels
with the GMRES implementation and is used as the trusted second route
when checking solver output (tests and the ``selftest`` command).
"""

from __future__ import annotations

import numpy as np

from .linalg import DenseMatrix, DimensionMismatchError, Vector


class SingularMatrixError(ValueError):
    def __init__(self, column: int):
        self.column = column
        super().__init__(f"matrix is singular to working precision at column {column}")


def lu_factor(a: DenseMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Row-pivoted LU. Returns (lu, piv) with L and U packed into one array."""
    if not a.is_square():
        raise DimensionMismatchError("lu_factor", (a.rows, a.cols), (a.rows, a.rows))
    n = a.rows
    lu = a.data.copy()
    piv = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if lu[p, k] == 0.0:
            raise SingularMatrixError(k)
        if p != k:
            lu[[k, p], :] = lu[[p, k], :]
            piv[[k, p]] = piv[[p, k]]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, piv


def lu_solve(lu: np.ndarray, piv: np.ndarray, b: Vector) -> Vector:
    """Solve with a factorization from :func:`lu_factor`."""
    n = lu.shape[0]
    if len(b) != n:
        raise DimensionMismatchError("lu_solve", (n, n), (len(b),))
    x = b.data[piv].copy()
    for k in range(1, n):  # forward: L y = P b, unit diagonal
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):  # backward: U x = y
        x[k] = (x[k] - lu[k, k + 1 :] @ x[k + 1 :]) / lu[k, k]
    return Vector._wrap(x)


def solve_direct(a: DenseMatrix, b: Vector) -> Vector:
    """One-shot LU solve of ``A x = b``."""
    lu, piv = lu_factor(a)
    return lu_solve(lu, piv, b)
