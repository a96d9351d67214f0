"""Pure-numpy best-split scan; the reference for the compiled kernel.

Both backends must be bit-identical: prefix sums run left to right in float64
over the same globally presorted order, candidate gains use the same
expression, and ties keep the first occurrence (lowest feature index, then
lowest threshold).
"""

from __future__ import annotations

import numpy as np


def find_best_split(
    X: np.ndarray,
    target: np.ndarray,
    sort_idx: np.ndarray,
    in_node: np.ndarray,
    min_leaf: int,
) -> tuple[int, float, float, float]:
    """Best axis-aligned split for one node.

    Arguments:
        X: (n_rows, n_features) float64 feature matrix.
        target: (n_rows,) float64 residual targets.
        sort_idx: (n_features, n_rows) int32, rows presorted per feature.
        in_node: (n_rows,) uint8/bool node-membership mask.
        min_leaf: minimum rows on each side of a split.

    Returns (feature, threshold, proxy_score, node_sum); feature is -1 when no
    valid split exists. proxy_score is sum_l^2/n_l + sum_r^2/n_r, to be
    compared by the caller against node_sum^2/n for the actual gain.
    """
    n_feat = X.shape[1]
    member = in_node.view(bool) if in_node.dtype == np.uint8 else in_node
    best_feat = -1
    best_thr = 0.0
    best_proxy = -np.inf
    best_total = 0.0
    for j in range(n_feat):
        idx = sort_idx[j]
        rows = idx[member[idx]]
        n = rows.shape[0]
        if n < 2 * min_leaf:
            break  # node too small for any feature
        v = X[rows, j]
        cs = np.cumsum(target[rows])
        total = cs[-1]
        nl = np.arange(1, n, dtype=np.float64)
        ok = (v[1:] > v[:-1]) & (nl >= min_leaf) & (nl <= n - min_leaf)
        if not ok.any():
            continue
        ls = cs[:-1]
        rs = total - ls
        proxy = ls * ls / nl + rs * rs / (n - nl)
        proxy[~ok] = -np.inf
        i = int(np.argmax(proxy))
        if proxy[i] > best_proxy:
            best_feat = j
            best_thr = (v[i] + v[i + 1]) / 2.0
            best_proxy = float(proxy[i])
            best_total = float(total)
    return best_feat, best_thr, best_proxy, best_total
