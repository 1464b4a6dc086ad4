# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels.

Must stay behaviour-identical to glyphedit._kernels.pure; the benchmark
and the parity tests compare the two directly.
"""

from libc.math cimport ceil
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()


def levenshtein(str a, str b):
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((lb + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int cost, best, cand
    cdef int *tmp
    cdef Py_UCS4 ca
    try:
        for j in range(lb + 1):
            prev[j] = <int> j
        for i in range(la):
            ca = a[i]
            cur[0] = <int> (i + 1)
            for j in range(1, lb + 1):
                cost = 0 if ca == <Py_UCS4> b[j - 1] else 1
                best = prev[j] + 1
                cand = cur[j - 1] + 1
                if cand < best:
                    best = cand
                cand = prev[j - 1] + cost
                if cand < best:
                    best = cand
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[lb]
    finally:
        free(prev)
        free(cur)


def polygon_fill(xs, ys, int h, int w):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] px = np.asarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] py = np.asarray(ys, dtype=np.float64)
    cdef Py_ssize_t n = px.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] mask = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cross = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, k, m, j0, j1, jj
    cdef double yc, x1, y1, x2, y2, lo, hi, a, b
    for i in range(h):
        yc = i + 0.5
        m = 0
        for k in range(n):
            x1 = px[k]
            y1 = py[k]
            x2 = px[(k + 1) % n]
            y2 = py[(k + 1) % n]
            if y1 == y2:
                continue
            lo = y1 if y1 < y2 else y2
            hi = y2 if y1 < y2 else y1
            if lo <= yc < hi:
                cross[m] = x1 + (yc - y1) * (x2 - x1) / (y2 - y1)
                m += 1
        if m > 1:
            cross[:m].sort()
        for k in range(0, m - 1, 2):
            a = cross[k]
            b = cross[k + 1]
            j0 = <Py_ssize_t> ceil(a - 0.5)
            if j0 < 0:
                j0 = 0
            j1 = <Py_ssize_t> ceil(b - 0.5)
            if j1 > w:
                j1 = w
            for jj in range(j0, j1):
                mask[i, jj] = 1
    return mask
