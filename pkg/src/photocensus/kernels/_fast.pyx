# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the tree hot kernels.

Must stay bit-identical to ``_pure.py``; see the arithmetic recipe pinned in
that module's docstring before touching any expression here.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPURITY_VARIANCE = 0
IMPURITY_GINI = 1


def best_split_kernel(
    cnp.float64_t[:, ::1] X,
    cnp.float64_t[::1] y,
    cnp.int64_t[::1] columns,
    int impurity,
    int min_leaf=1,
):
    cdef Py_ssize_t n = X.shape[0]
    if n < 2 * min_leaf or n < 2:
        return (-1, float("nan"), float("-inf"))
    if impurity != 0 and impurity != 1:
        raise ValueError(f"unknown impurity code {impurity}")

    cdef cnp.float64_t[::1] yv = np.empty(n, dtype=np.float64)
    cdef double acc = 0.0
    cdef Py_ssize_t i
    if impurity == 0:
        for i in range(n):
            acc += y[i]
        acc /= n
        for i in range(n):
            yv[i] = y[i] - acc
    else:
        for i in range(n):
            yv[i] = y[i]

    cdef cnp.float64_t[::1] xs = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] ys = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] csum = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] csum2 = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] order

    cdef int best_col = -1
    cdef double best_thr = float("nan")
    cdef double best_gain = -np.inf

    cdef double n_float = <double> n
    cdef Py_ssize_t c, col, j
    cdef double total, total2, pm, parent, p, q
    cdef double nl, nr, ls, ls2, rs, rs2, lm, rm, lo, ro, pl, ql, pr, qr
    cdef double left_imp, right_imp, weighted, gain
    cdef bint any_valid

    xcol = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] xcol_view = xcol

    for c in range(columns.shape[0]):
        col = columns[c]
        for i in range(n):
            xcol_view[i] = X[i, col]
        order = np.argsort(xcol, kind="stable")
        any_valid = False
        for i in range(n):
            j = order[i]
            xs[i] = xcol_view[j]
            ys[i] = yv[j]
        for i in range(min_leaf - 1, n - min_leaf):
            if xs[i + 1] != xs[i]:
                any_valid = True
                break
        if not any_valid:
            continue

        acc = 0.0
        for i in range(n):
            acc += ys[i]
            csum[i] = acc
        total = csum[n - 1]

        if impurity == 0:
            acc = 0.0
            for i in range(n):
                acc += ys[i] * ys[i]
                csum2[i] = acc
            total2 = csum2[n - 1]
            pm = total / n_float
            parent = total2 / n_float - pm * pm
        else:
            p = total / n_float
            q = 1.0 - p
            parent = 1.0 - q * q - p * p

        for i in range(min_leaf - 1, n - min_leaf):
            if xs[i + 1] == xs[i]:
                continue
            nl = <double> (i + 1)
            nr = n_float - nl
            if impurity == 0:
                ls = csum[i]
                ls2 = csum2[i]
                rs = total - ls
                rs2 = total2 - ls2
                lm = ls / nl
                left_imp = ls2 / nl - lm * lm
                rm = rs / nr
                right_imp = rs2 / nr - rm * rm
            else:
                lo = csum[i]
                ro = total - lo
                pl = lo / nl
                ql = 1.0 - pl
                left_imp = 1.0 - ql * ql - pl * pl
                pr = ro / nr
                qr = 1.0 - pr
                right_imp = 1.0 - qr * qr - pr * pr
            weighted = (nl * left_imp + nr * right_imp) / n_float
            gain = parent - weighted
            if gain > best_gain:
                best_gain = gain
                best_col = <int> col
                best_thr = (xs[i] + xs[i + 1]) * 0.5

    return best_col, best_thr, best_gain


def tree_predict(
    cnp.int32_t[::1] feature,
    cnp.float64_t[::1] threshold,
    cnp.int32_t[::1] left,
    cnp.int32_t[::1] right,
    cnp.float64_t[::1] value,
    cnp.float64_t[:, ::1] X,
):
    cdef Py_ssize_t n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] out_view = out
    cdef Py_ssize_t i
    cdef int node
    for i in range(n):
        node = 0
        while left[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out_view[i] = value[node]
    return out
