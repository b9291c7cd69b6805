# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: stump threshold scan and Dawid-Skene E-step.

Semantics must stay in lockstep with `_fallback.py`; the test suite checks
bit-level agreement for the stump scan and near-exact agreement for the
E-step.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def stump_scan(x, y, int n_classes):
    """See `_fallback.stump_scan` for the contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ya = np.ascontiguousarray(y, dtype=np.int64)
    cdef Py_ssize_t n = xa.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(xa, kind="stable")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = xa[order]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ys = ya[order]

    cdef cnp.ndarray[cnp.int64_t, ndim=1] total = np.bincount(ys, minlength=n_classes).astype(np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] left = np.zeros(n_classes, dtype=np.int64)

    cdef Py_ssize_t i, c
    cdef long long best_correct = -1
    cdef double best_threshold = xs[0]
    cdef int best_left = 0, best_right = 0
    cdef long long lmax, rmax, cnt
    cdef int larg, rarg

    for i in range(n - 1):
        left[ys[i]] += 1
        if xs[i + 1] > xs[i]:
            lmax = -1
            larg = 0
            rmax = -1
            rarg = 0
            for c in range(n_classes):
                cnt = left[c]
                if cnt > lmax:
                    lmax = cnt
                    larg = c
                cnt = total[c] - left[c]
                if cnt > rmax:
                    rmax = cnt
                    rarg = c
            if lmax + rmax > best_correct:
                best_correct = lmax + rmax
                best_threshold = (xs[i] + xs[i + 1]) / 2.0
                best_left = larg
                best_right = rarg

    if best_correct < 0:
        # constant column: everything lands on the left leaf
        lmax = -1
        larg = 0
        for c in range(n_classes):
            if total[c] > lmax:
                lmax = total[c]
                larg = c
        return int(lmax), float(xs[0]), larg, larg

    return int(best_correct), float(best_threshold), best_left, best_right


def ds_estep(votes, log_prior, log_conf):
    """See `_fallback.ds_estep` for the contract."""
    cdef cnp.ndarray[cnp.int64_t, ndim=2] va = np.ascontiguousarray(votes, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lp = np.ascontiguousarray(log_prior, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] lc = np.ascontiguousarray(log_conf, dtype=np.float64)
    cdef Py_ssize_t n = va.shape[0]
    cdef Py_ssize_t k_lfs = va.shape[1]
    cdef Py_ssize_t n_classes = lp.shape[0]

    cdef cnp.ndarray[cnp.float64_t, ndim=2] post = np.empty((n, n_classes), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ll = np.empty(n, dtype=np.float64)

    cdef Py_ssize_t i, k, c
    cdef long long v
    cdef double acc, mx, s

    for i in range(n):
        for c in range(n_classes):
            acc = lp[c]
            for k in range(k_lfs):
                v = va[i, k]
                if v >= 0:
                    acc += lc[k, c, v]
            post[i, c] = acc
        mx = post[i, 0]
        for c in range(1, n_classes):
            if post[i, c] > mx:
                mx = post[i, c]
        s = 0.0
        for c in range(n_classes):
            post[i, c] = exp(post[i, c] - mx)
            s += post[i, c]
        for c in range(n_classes):
            post[i, c] /= s
        ll[i] = mx + log(s)

    return post, ll
