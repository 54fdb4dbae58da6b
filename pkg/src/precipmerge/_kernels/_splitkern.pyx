# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split-search kernels.

Mirrors _python.py operation for operation: sequential prefix sums,
right-hand statistics by subtraction from the segment total, identical
expression shapes and strict comparisons. Any change here must keep the
two backends bit-identical (tests/test_backends.py enforces this).
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

import numpy as np

cimport numpy as cnp

cnp.import_array()


def best_split_sse(double[:, ::1] X, double[::1] y, int[:, ::1] pos,
                   Py_ssize_t start, Py_ssize_t end, int[::1] feats,
                   Py_ssize_t min_leaf):
    cdef Py_ssize_t n = end - start
    cdef Py_ssize_t fi, i, row
    cdef int f, best_feat = -1
    cdef double best_thr = 0.0, best_gain = 0.0
    cdef double total, base, run, s_left, s_right, n_left, n_right
    cdef double gl, gr, gain, x_cur, x_next
    cdef double dmin_leaf = <double> min_leaf
    cdef double dn = <double> n

    with nogil:
        for fi in range(feats.shape[0]):
            f = feats[fi]
            total = 0.0
            for i in range(start, end):
                total += y[pos[f, i]]
            base = total * total / dn
            run = 0.0
            for i in range(n - 1):
                row = pos[f, start + i]
                run += y[row]
                x_cur = X[row, f]
                x_next = X[pos[f, start + i + 1], f]
                if x_cur < x_next:
                    n_left = <double> (i + 1)
                    n_right = dn - n_left
                    if n_left >= dmin_leaf and n_right >= dmin_leaf:
                        s_left = run
                        s_right = total - s_left
                        gl = s_left * s_left / n_left
                        gr = s_right * s_right / n_right
                        gain = (gl + gr) - base
                        if gain > best_gain:
                            best_gain = gain
                            best_feat = f
                            best_thr = (x_cur + x_next) / 2.0
                            if best_thr == x_next:
                                best_thr = x_cur
    return best_feat, best_thr, best_gain


def best_split_grad(double[:, ::1] X, double[::1] g, double[::1] h,
                    int[:, ::1] pos, Py_ssize_t start, Py_ssize_t end,
                    int[::1] feats, double lam, double gamma,
                    double min_child_weight):
    cdef Py_ssize_t n = end - start
    cdef Py_ssize_t fi, i, row
    cdef int f, best_feat = -1
    cdef double best_thr = 0.0, best_gain = 0.0
    cdef double g_tot, h_tot, base, g_run, h_run
    cdef double g_left, g_right, h_left, h_right
    cdef double a, b, gain, x_cur, x_next

    with nogil:
        for fi in range(feats.shape[0]):
            f = feats[fi]
            g_tot = 0.0
            h_tot = 0.0
            for i in range(start, end):
                row = pos[f, i]
                g_tot += g[row]
                h_tot += h[row]
            base = g_tot * g_tot / (h_tot + lam)
            g_run = 0.0
            h_run = 0.0
            for i in range(n - 1):
                row = pos[f, start + i]
                g_run += g[row]
                h_run += h[row]
                x_cur = X[row, f]
                x_next = X[pos[f, start + i + 1], f]
                if x_cur < x_next:
                    g_left = g_run
                    h_left = h_run
                    g_right = g_tot - g_left
                    h_right = h_tot - h_left
                    if h_left >= min_child_weight and h_right >= min_child_weight:
                        a = g_left * g_left / (h_left + lam)
                        b = g_right * g_right / (h_right + lam)
                        gain = 0.5 * ((a + b) - base) - gamma
                        if gain > best_gain:
                            best_gain = gain
                            best_feat = f
                            best_thr = (x_cur + x_next) / 2.0
                            if best_thr == x_next:
                                best_thr = x_cur
    return best_feat, best_thr, best_gain


def partition_segments(int[:, ::1] pos, Py_ssize_t start, Py_ssize_t end,
                       unsigned char[::1] goes_left):
    cdef Py_ssize_t p = pos.shape[0]
    cdef Py_ssize_t f, i, k, m
    cdef int row
    cdef Py_ssize_t n_left = 0
    cdef int* buf = <int*> malloc((end - start) * sizeof(int))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for f in range(p):
                k = start
                m = 0
                for i in range(start, end):
                    row = pos[f, i]
                    if goes_left[row]:
                        pos[f, k] = row
                        k += 1
                    else:
                        buf[m] = row
                        m += 1
                if m > 0:
                    memcpy(&pos[f, k], buf, m * sizeof(int))
                n_left = k - start
    finally:
        free(buf)
    return n_left


def predict_tree(int[::1] feature, double[::1] threshold, int[::1] left,
                 int[::1] right, double[::1] value, double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t r
    cdef int node
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for r in range(n):
            node = 0
            while feature[node] >= 0:
                if X[r, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[r] = value[node]
    return out_arr
