"""Bagged ensemble of variance-reduction trees (random forest)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from precipmerge.learners.tree import (
    FeatureSampler,
    RegressionTree,
    grow_sse_tree,
    tree_predict,
)


@dataclass(frozen=True)
class ForestParams:
    """Defaults follow the usual regression-forest conventions: many deep
    trees, mtry = floor(sqrt(p)), small leaves, bootstrap resampling."""

    n_trees: int = 500
    mtry: int | None = None  # None resolves to floor(sqrt(n_features))
    min_node: int = 5
    bootstrap: bool = True
    max_depth: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be at least 1")
        if self.min_node < 1:
            raise ValueError("min_node must be at least 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")

    def resolve_mtry(self, n_features: int) -> int:
        if self.mtry is None:
            return max(1, math.isqrt(n_features))
        if self.mtry > n_features:
            raise ValueError(f"mtry={self.mtry} exceeds {n_features} features")
        return self.mtry


@dataclass
class ForestModel:
    trees: list[RegressionTree]
    params: ForestParams
    n_features: int
    seed: int = 0


def _build_one(X, y, params: ForestParams, mtry: int, seq: np.random.SeedSequence):
    # Draw order within a tree stream: bootstrap rows first, then feature
    # subsets in node-creation order.
    rng = np.random.default_rng(seq)
    n, p = X.shape
    if params.bootstrap:
        rows = rng.integers(0, n, size=n)
        Xb, yb = X[rows], y[rows]
    else:
        Xb, yb = X, y
    sampler = None if mtry == p else FeatureSampler(rng, p, mtry)
    return grow_sse_tree(
        Xb,
        yb,
        max_depth=params.max_depth,
        min_leaf=params.min_node,
        feature_sampler=sampler,
    )


def fit_random_forest(
    X, y, params: ForestParams | None = None, *, seed: int = 0, threads: int = 1
) -> ForestModel:
    """Fit ``params.n_trees`` trees on independent bootstrap resamples.

    Each tree gets its own child stream of ``seed`` (SeedSequence spawn),
    so the result is identical for any ``threads`` value and any tree
    completion order.
    """
    params = params or ForestParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError("y length does not match X")
    mtry = params.resolve_mtry(p)
    children = np.random.SeedSequence(seed).spawn(params.n_trees)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(
                pool.map(lambda s: _build_one(X, y, params, mtry, s), children)
            )
    else:
        trees = [_build_one(X, y, params, mtry, s) for s in children]
    return ForestModel(trees=trees, params=params, n_features=p, seed=seed)


def forest_predict(model: ForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    out = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        out += tree_predict(tree, X)
    out /= len(model.trees)
    return out
