# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled best-split scan; must stay bit-identical to _split_np.

The arithmetic mirrors the numpy path exactly: sequential left-to-right
prefix sums in float64 over the shared presorted order, the same proxy
expression, strict-greater comparisons so ties keep the first occurrence.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def find_best_split(
    double[:, ::1] X,
    double[::1] target,
    cnp.int32_t[:, ::1] sort_idx,
    cnp.uint8_t[::1] in_node,
    int min_leaf,
):
    cdef Py_ssize_t n_rows = X.shape[0]
    cdef Py_ssize_t n_feat = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf_v_arr = np.empty(n_rows, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf_t_arr = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] buf_v = buf_v_arr
    cdef double[::1] buf_t = buf_t_arr

    cdef Py_ssize_t j, i, k, n, r
    cdef double total, ls, rs, proxy, nl, nr
    cdef int best_feat = -1
    cdef double best_thr = 0.0
    cdef double best_proxy = -np.inf
    cdef double best_total = 0.0
    cdef double feat_best_proxy, feat_best_thr
    cdef Py_ssize_t feat_best_i

    for j in range(n_feat):
        # gather node rows in the presorted order
        n = 0
        for i in range(n_rows):
            r = sort_idx[j, i]
            if in_node[r]:
                buf_v[n] = X[r, j]
                buf_t[n] = target[r]
                n += 1
        if n < 2 * min_leaf:
            break
        # sequential total, identical to cumsum's last element
        total = 0.0
        for i in range(n):
            total = total + buf_t[i]
        feat_best_proxy = -np.inf
        feat_best_thr = 0.0
        feat_best_i = -1
        ls = 0.0
        for i in range(n - 1):
            ls = ls + buf_t[i]
            k = i + 1  # rows on the left
            if buf_v[i + 1] > buf_v[i] and k >= min_leaf and n - k >= min_leaf:
                nl = <double> k
                nr = <double> (n - k)
                rs = total - ls
                proxy = ls * ls / nl + rs * rs / nr
                if proxy > feat_best_proxy:
                    feat_best_proxy = proxy
                    feat_best_i = i
        if feat_best_i < 0:
            continue
        if feat_best_proxy > best_proxy:
            best_feat = <int> j
            best_thr = (buf_v[feat_best_i] + buf_v[feat_best_i + 1]) / 2.0
            best_proxy = feat_best_proxy
            best_total = total
    return best_feat, best_thr, best_proxy, best_total
