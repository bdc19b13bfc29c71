# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sliding-window pairwise correlation kernel.

Hot loop of the whole package: per window, center every record (two-pass),
form the pair covariance block with BLAS dgemm, normalize, and average the
valid pairs with Kahan compensation in canonical (i<j) order. Degenerate
pairs (all window values equal) are NaN-marked, never silent zeros.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND_NAME = "cython"


def windowed_pair_corr(object v_in, Py_ssize_t width, Py_ssize_t hop):
    """Pairwise Pearson r over sliding windows; see the numpy twin for the
    full contract (identical semantics)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] v = np.ascontiguousarray(
        v_in, dtype=np.float64
    )
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t length = v.shape[1]
    if m < 2:
        raise ValueError(f"need at least 2 records, got {m}")
    if width < 2 or width > length:
        raise ValueError(f"width {width} out of range for series length {length}")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")

    cdef Py_ssize_t n_windows = (length - width) // hop + 1
    cdef Py_ssize_t n_pairs = m * (m - 1) // 2

    cdef cnp.ndarray[cnp.float64_t, ndim=1] mean_r = np.empty(n_windows)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] n_valid = np.empty(n_windows, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pair_r = np.empty(
        (n_windows, n_pairs)
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] z = np.empty((m, width))
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] cov = np.empty((m, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sd = np.empty(m)

    cdef double[:, ::1] vv = v
    cdef double[:, ::1] zz = z
    cdef double[:, ::1] cc = cov
    cdef double[::1] sdv = sd
    cdef double[:, ::1] prv = pair_r

    cdef Py_ssize_t k, t0, i, j, t, p, cnt
    cdef double s, mu, ss, d, first, r, acc, comp, y, tmp
    cdef bint constant

    # dgemm parameters: treat the C-contiguous z (m x width) as a Fortran
    # (width x m) matrix A and compute cov = A^T A.
    cdef int bm = <int> m
    cdef int bk = <int> width
    cdef double alpha = 1.0
    cdef double beta = 0.0
    cdef char* trans_t = "T"
    cdef char* trans_n = "N"

    cdef double nan = float("nan")

    for k in range(n_windows):
        t0 = k * hop
        for i in range(m):
            s = 0.0
            first = vv[i, t0]
            constant = True
            for t in range(width):
                d = vv[i, t0 + t]
                s += d
                if d != first:
                    constant = False
            mu = s / width
            ss = 0.0
            for t in range(width):
                d = vv[i, t0 + t] - mu
                zz[i, t] = d
                ss += d * d
            if constant or ss <= 0.0:
                sdv[i] = 0.0
            else:
                sdv[i] = sqrt(ss)

        dgemm(
            trans_t, trans_n, &bm, &bm, &bk, &alpha,
            &zz[0, 0], &bk, &zz[0, 0], &bk, &beta, &cc[0, 0], &bm,
        )

        p = 0
        cnt = 0
        acc = 0.0
        comp = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                if sdv[i] == 0.0 or sdv[j] == 0.0:
                    prv[k, p] = nan
                else:
                    r = cc[i, j] / (sdv[i] * sdv[j])
                    if r > 1.0:
                        r = 1.0
                    elif r < -1.0:
                        r = -1.0
                    prv[k, p] = r
                    y = r - comp
                    tmp = acc + y
                    comp = (tmp - acc) - y
                    acc = tmp
                    cnt += 1
                p += 1
        n_valid[k] = cnt
        mean_r[k] = acc / cnt if cnt > 0 else nan

    return mean_r, n_valid, pair_r
