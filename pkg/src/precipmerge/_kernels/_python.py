"""Pure-numpy kernels; the reference the compiled backend must match.

All kernels work on a presorted column layout: ``pos`` has shape (p, n)
and ``pos[f]`` holds row indices sorted ascending by feature f (stable, so
ties keep their original order). A tree node owns the index range
[start, end) of every row of ``pos`` simultaneously, which lets a split
partition each feature's segment in O(n) without re-sorting.

Floating-point order matters: prefix sums are sequential (np.cumsum), the
right-hand statistics are derived by subtraction from the segment total,
and candidate comparisons are strict. The compiled backend mirrors these
choices operation for operation so both produce bit-identical trees.
"""

from __future__ import annotations

import numpy as np

NO_SPLIT = (-1, 0.0, 0.0)


def _midpoint(a: float, b: float) -> float:
    thr = (a + b) / 2.0
    if thr == b:  # midpoint rounded up onto the right value
        thr = a
    return thr


def best_split_sse(X, y, pos, start, end, feats, min_leaf):
    """Best variance-reducing split over the node segment.

    Returns (feature, threshold, gain) where gain is the reduction in sum
    of squared deviations; (-1, 0, 0) when no split strictly improves.
    Ties go to the lowest feature index, then the lowest threshold.
    """
    n = end - start
    best_feat, best_thr, best_gain = NO_SPLIT
    for f in feats:
        seg = pos[f, start:end]
        xs = X[seg, f]
        csum = np.cumsum(y[seg])
        total = csum[-1]
        bnd = np.nonzero(xs[:-1] < xs[1:])[0]
        if bnd.size == 0:
            continue
        n_left = (bnd + 1).astype(np.float64)
        n_right = n - n_left
        valid = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        s_left = csum[bnd]
        s_right = total - s_left
        proxy = s_left * s_left / n_left + s_right * s_right / n_right
        gain = proxy - total * total / n
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_feat = int(f)
            best_gain = float(gain[i])
            best_thr = _midpoint(float(xs[bnd[i]]), float(xs[bnd[i] + 1]))
    return best_feat, best_thr, best_gain


def best_split_grad(X, g, h, pos, start, end, feats, lam, gamma, min_child_weight):
    """Best split by the regularized second-order gain

        0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma

    over the node segment; children must carry hessian mass of at least
    ``min_child_weight``. Returns (-1, 0, 0) when no candidate has
    strictly positive gain.
    """
    best_feat, best_thr, best_gain = NO_SPLIT
    for f in feats:
        seg = pos[f, start:end]
        xs = X[seg, f]
        gcum = np.cumsum(g[seg])
        hcum = np.cumsum(h[seg])
        g_tot = gcum[-1]
        h_tot = hcum[-1]
        bnd = np.nonzero(xs[:-1] < xs[1:])[0]
        if bnd.size == 0:
            continue
        g_left = gcum[bnd]
        h_left = hcum[bnd]
        g_right = g_tot - g_left
        h_right = h_tot - h_left
        valid = (h_left >= min_child_weight) & (h_right >= min_child_weight)
        if not valid.any():
            continue
        gain = 0.5 * (
            g_left * g_left / (h_left + lam)
            + g_right * g_right / (h_right + lam)
            - g_tot * g_tot / (h_tot + lam)
        ) - gamma
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_feat = int(f)
            best_gain = float(gain[i])
            best_thr = _midpoint(float(xs[bnd[i]]), float(xs[bnd[i] + 1]))
    return best_feat, best_thr, best_gain


def partition_segments(pos, start, end, goes_left):
    """Stable-partition [start, end) of every feature row of ``pos`` by the
    per-row ``goes_left`` byte mask. Returns the left-child size."""
    n_left = 0
    for f in range(pos.shape[0]):
        seg = pos[f, start:end].copy()
        mask = goes_left[seg].astype(bool)
        left = seg[mask]
        pos[f, start : start + left.size] = left
        pos[f, start + left.size : end] = seg[~mask]
        n_left = int(left.size)
    return n_left


def predict_tree(feature, threshold, left, right, value, X):
    """Route every row of X to its leaf; returns the leaf values."""
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int32)
    active = feature[node] >= 0
    while active.any():
        rows = np.nonzero(active)[0]
        cur = node[rows]
        f = feature[cur]
        go_left = X[rows, f] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        active[rows] = feature[node[rows]] >= 0
    return value[node]
