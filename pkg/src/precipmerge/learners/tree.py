"""CART-style regression trees over the presorted column layout.

Trees are stored as parallel node arrays (struct-of-arrays) so prediction
and serialization never walk Python objects. Node 0 is the root; children
are created depth-first, left child first, which also fixes the order in
which per-node feature subsets are drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from precipmerge import _kernels


@dataclass
class RegressionTree:
    """Binary regression tree; ``feature[i] < 0`` marks node i as a leaf."""

    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32, -1 at leaves
    right: np.ndarray  # int32, -1 at leaves
    value: np.ndarray  # float64 node prediction
    gain: np.ndarray  # float64 split gain, 0.0 at leaves

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


class FeatureSampler:
    """Uniform without-replacement feature subsets, one per split node.

    Subsets are pregenerated in chunks from a single generator (argsort of
    random keys) and consumed in node-creation order, so serial and
    parallel tree construction see identical draws.
    """

    _CHUNK = 256

    def __init__(self, rng: np.random.Generator, n_features: int, mtry: int):
        if not (1 <= mtry <= n_features):
            raise ValueError(f"mtry={mtry} outside [1, {n_features}]")
        self._rng = rng
        self._p = n_features
        self._mtry = mtry
        self._buf = np.empty((0, mtry), dtype=np.int32)
        self._next = 0

    def draw(self) -> np.ndarray:
        if self._next >= len(self._buf):
            keys = self._rng.random((self._CHUNK, self._p))
            perm = np.argsort(keys, axis=1)[:, : self._mtry]
            self._buf = np.ascontiguousarray(np.sort(perm, axis=1), dtype=np.int32)
            self._next = 0
        out = self._buf[self._next]
        self._next += 1
        return out


def _presort(X: np.ndarray) -> np.ndarray:
    """(p, n) int32 row indices, each row stable-sorted by one feature."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int32)


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty 2-D matrix")
    return X


class _NodeStore:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.gain: list[float] = []

    def new(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.gain.append(0.0)
        return len(self.feature) - 1

    def split(self, node: int, feat: int, thr: float, gain: float) -> tuple[int, int]:
        lid = self.new()
        rid = self.new()
        self.feature[node] = feat
        self.threshold[node] = thr
        self.gain[node] = gain
        self.left[node] = lid
        self.right[node] = rid
        return lid, rid

    def freeze(self) -> RegressionTree:
        return RegressionTree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
            gain=np.asarray(self.gain, dtype=np.float64),
        )


def grow_sse_tree(
    X,
    y,
    *,
    max_depth: int | None = None,
    min_leaf: int = 1,
    fixed_features=None,
    feature_sampler: FeatureSampler | None = None,
) -> RegressionTree:
    """Greedy variance-reduction tree.

    Splits maximize the reduction in sum of squared deviations; candidate
    thresholds are midpoints between consecutive distinct sorted values;
    leaves predict the node mean. A node stays a leaf when the depth limit
    is reached, it is pure, no candidate keeps both children at
    ``min_leaf`` rows, or no candidate strictly reduces the loss.
    """
    X = _as_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError("y length does not match X")
    if min_leaf < 1:
        raise ValueError("min_leaf must be at least 1")
    if fixed_features is not None and feature_sampler is not None:
        raise ValueError("pass either fixed_features or feature_sampler, not both")

    if fixed_features is None:
        base_feats = np.arange(p, dtype=np.int32)
    else:
        base_feats = np.unique(np.asarray(fixed_features, dtype=np.int32))
        if base_feats.size == 0 or base_feats[0] < 0 or base_feats[-1] >= p:
            raise ValueError("fixed_features outside the feature range")

    pos = _presort(X)
    goes_left = np.zeros(n, dtype=np.uint8)
    depth_cap = math.inf if max_depth is None else max_depth
    store = _NodeStore()
    stack = [(store.new(), 0, n, 0)]
    while stack:
        node, start, end, depth = stack.pop()
        rows = pos[0, start:end]
        yv = y[rows]
        store.value[node] = float(yv.mean())
        if end - start < 2 * min_leaf or depth >= depth_cap:
            continue
        if yv.min() == yv.max():
            continue
        feats = base_feats if feature_sampler is None else feature_sampler.draw()
        feat, thr, gain = _kernels.best_split_sse(X, y, pos, start, end, feats, min_leaf)
        if feat < 0:
            continue
        goes_left[rows] = X[rows, feat] <= thr
        n_left = _kernels.partition_segments(pos, start, end, goes_left)
        lid, rid = store.split(node, feat, thr, gain)
        stack.append((rid, start + n_left, end, depth + 1))
        stack.append((lid, start, start + n_left, depth + 1))
    return store.freeze()


def grow_grad_tree(
    X,
    g,
    h,
    *,
    max_depth: int,
    lam: float,
    gamma: float,
    min_child_weight: float,
    pos: np.ndarray | None = None,
) -> RegressionTree:
    """Second-order tree on per-row gradients/hessians.

    Leaf weight is ``-G / (H + lam)``; splits use the regularized gain of
    :func:`precipmerge._kernels.best_split_grad` and are only accepted when
    strictly positive. ``pos`` may carry a reusable presorted index layout
    (it is copied, the caller's array is untouched).
    """
    X = _as_matrix(X)
    g = np.ascontiguousarray(g, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    n, p = X.shape
    pos = _presort(X) if pos is None else pos.copy()
    feats = np.arange(p, dtype=np.int32)
    goes_left = np.zeros(n, dtype=np.uint8)
    store = _NodeStore()
    stack = [(store.new(), 0, n, 0)]
    while stack:
        node, start, end, depth = stack.pop()
        rows = pos[0, start:end]
        g_sum = float(g[rows].sum())
        h_sum = float(h[rows].sum())
        store.value[node] = -g_sum / (h_sum + lam)
        if end - start < 2 or depth >= max_depth:
            continue
        feat, thr, gain = _kernels.best_split_grad(
            X, g, h, pos, start, end, feats, lam, gamma, min_child_weight
        )
        if feat < 0:
            continue
        goes_left[rows] = X[rows, feat] <= thr
        n_left = _kernels.partition_segments(pos, start, end, goes_left)
        lid, rid = store.split(node, feat, thr, gain)
        stack.append((rid, start + n_left, end, depth + 1))
        stack.append((lid, start, start + n_left, depth + 1))
    return store.freeze()


def fit_tree(X, y, *, max_depth=None, min_node=1, candidate_features=None) -> RegressionTree:
    """Public single-tree fit; ``candidate_features`` restricts every split
    to the given feature subset."""
    return grow_sse_tree(
        X, y, max_depth=max_depth, min_leaf=min_node, fixed_features=candidate_features
    )


def tree_predict(tree: RegressionTree, X) -> np.ndarray:
    X = _as_matrix(X)
    return _kernels.predict_tree(
        tree.feature, tree.threshold, tree.left, tree.right, tree.value, X
    )
