"""Envelope evaluation kernels: ``min_k (A_k d + B_k p + C_k)`` over facet planes.

Two implementations with identical results; ``min_planes`` picks one from
the numba flag.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


@njit
def min_planes_numba(A, B, C, dq, pq):
    nq = dq.shape[0]
    nf = A.shape[0]
    out = np.empty(nq)
    arg = np.empty(nq, dtype=np.int64)
    for i in range(nq):
        best = np.inf
        k_best = -1
        d = dq[i]
        p = pq[i]
        for k in range(nf):
            val = A[k] * d + B[k] * p + C[k]
            if val < best:
                best = val
                k_best = k
        out[i] = best
        arg[i] = k_best
    return out, arg


def min_planes_numpy(A, B, C, dq, pq, chunk=2048):
    nq = dq.shape[0]
    out = np.empty(nq)
    arg = np.empty(nq, dtype=np.int64)
    for s in range(0, nq, chunk):
        vals = np.outer(dq[s:s + chunk], A) + np.outer(pq[s:s + chunk], B) + C
        k = np.argmin(vals, axis=1)
        arg[s:s + chunk] = k
        out[s:s + chunk] = vals[np.arange(k.size), k]
    return out, arg


min_planes = min_planes_numba if USE_NUMBA else min_planes_numpy
