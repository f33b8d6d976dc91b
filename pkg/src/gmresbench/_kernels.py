"""Compiled dense kernels with a fixed, documented accumulation order.

Two families are provided:

* ``*_seq``: strictly sequential accumulation (left to right).
* ``*_par``: data-parallel variants. Matrix-vector products parallelize
  over rows, each row accumulated sequentially, so they are bitwise
  identical to the sequential kernel. Reductions (dot) accumulate one
  partial per ``CHUNK``-element slice and combine the partials in
  ascending slice order, which makes the result independent of thread
  count and scheduling.

Because the combine order is fixed, every kernel here is run-to-run
deterministic. The chunked reductions may differ from the sequential
ones by a few ulps (different rounding path, not nondeterminism).
"""

import numpy as np
from numba import njit, prange

# Reduction slice width for the parallel dot. Vectors up to this length
# reduce in a single slice and match the sequential kernel bitwise.
CHUNK = 8192


@njit(cache=True, nogil=True)
def dot_seq(u, v):
    acc = 0.0
    for i in range(u.shape[0]):
        acc += u[i] * v[i]
    return acc


@njit(cache=True, parallel=True)
def dot_par(u, v):
    n = u.shape[0]
    nchunks = (n + CHUNK - 1) // CHUNK
    partials = np.zeros(nchunks)
    for c in prange(nchunks):
        start = c * CHUNK
        stop = min(start + CHUNK, n)
        acc = 0.0
        for i in range(start, stop):
            acc += u[i] * v[i]
        partials[c] = acc
    total = 0.0
    for c in range(nchunks):
        total += partials[c]
    return total


@njit(cache=True, nogil=True)
def matvec_seq(a, x, out):
    rows, cols = a.shape
    for i in range(rows):
        acc = 0.0
        for k in range(cols):
            acc += a[i, k] * x[k]
        out[i] = acc


@njit(cache=True, parallel=True)
def matvec_par(a, x, out):
    # One independent partial per row; no cross-row reduction.
    rows, cols = a.shape
    for i in prange(rows):
        acc = 0.0
        for k in range(cols):
            acc += a[i, k] * x[k]
        out[i] = acc


@njit(cache=True, nogil=True)
def axpy_seq(alpha, x, y, out):
    for i in range(x.shape[0]):
        out[i] = alpha * x[i] + y[i]


@njit(cache=True, parallel=True)
def axpy_par(alpha, x, y, out):
    for i in prange(x.shape[0]):
        out[i] = alpha * x[i] + y[i]


@njit(cache=True, nogil=True)
def scale_seq(alpha, v, out):
    for i in range(v.shape[0]):
        out[i] = alpha * v[i]


@njit(cache=True, parallel=True)
def scale_par(alpha, v, out):
    for i in prange(v.shape[0]):
        out[i] = alpha * v[i]
