# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loop kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def diagonal_means(a, Py_ssize_t start):
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t T = A.shape[0]
    cdef Py_ssize_t n = T - start
    if n <= 0:
        return np.zeros(0)
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t s, i
    cdef double acc
    for s in range(n):
        acc = 0.0
        for i in range(start, T - s):
            acc += A[i, i + s]
        o[s] = acc / (n - s)
    return out


def cumulative_block_sums(a):
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t T = A.shape[0]
    out = np.empty(T)
    cdef double[::1] o = out
    cdef Py_ssize_t t, i
    cdef double total = 0.0
    for t in range(T):
        for i in range(t):
            total += A[t, i] + A[i, t]
        total += A[t, t]
        o[t] = total
    return out


def sphere_minima(h, double north, double south):
    cdef const double[:, ::1] H = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t nt = H.shape[0], nphi = H.shape[1]
    cdef Py_ssize_t i, j, jm, jp
    cdef double v, m, rowmin
    mask = np.zeros((nt, nphi), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] M = mask
    for i in range(nt):
        for j in range(nphi):
            jm = j - 1 if j > 0 else nphi - 1
            jp = j + 1 if j < nphi - 1 else 0
            m = H[i, jm] if H[i, jm] < H[i, jp] else H[i, jp]
            if i > 0:
                m = m if m < H[i - 1, jm] else H[i - 1, jm]
                m = m if m < H[i - 1, j] else H[i - 1, j]
                m = m if m < H[i - 1, jp] else H[i - 1, jp]
            else:
                m = m if m < north else north
            if i < nt - 1:
                m = m if m < H[i + 1, jm] else H[i + 1, jm]
                m = m if m < H[i + 1, j] else H[i + 1, j]
                m = m if m < H[i + 1, jp] else H[i + 1, jp]
            else:
                m = m if m < south else south
            M[i, j] = H[i, j] < m
    rowmin = INFINITY
    for j in range(nphi):
        if H[0, j] < rowmin:
            rowmin = H[0, j]
    north_min = north < rowmin
    rowmin = INFINITY
    for j in range(nphi):
        if H[nt - 1, j] < rowmin:
            rowmin = H[nt - 1, j]
    south_min = south < rowmin
    rows, cols = np.nonzero(mask)
    return rows, cols, bool(north_min), bool(south_min)
