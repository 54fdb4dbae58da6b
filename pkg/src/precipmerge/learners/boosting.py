"""Gradient boosting: classic shrunken-residual stages and a second-order
regularized variant.

The classic fit (``fit_gbm``) starts from the target mean, grows each stage
on residuals of a without-replacement subsample, and adds stages scaled by
the shrinkage factor. The second-order fit (``fit_xgb``) starts from a flat
base score and grows each stage on squared-error gradients g = 2(F - y)
with constant hessian h = 2, using leaf weights -G/(H + lambda) and the
regularized split gain with penalty gamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from precipmerge.learners.tree import (
    RegressionTree,
    _presort,
    grow_grad_tree,
    grow_sse_tree,
    tree_predict,
)


@dataclass(frozen=True)
class GBMParams:
    n_trees: int = 500
    depth: int = 1
    shrinkage: float = 0.1
    min_obs_node: int = 10
    bag_fraction: float = 0.5

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValueError("n_trees must not be negative")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must be in (0, 1]")
        if self.min_obs_node < 1:
            raise ValueError("min_obs_node must be at least 1")
        if not 0.0 < self.bag_fraction <= 1.0:
            raise ValueError("bag_fraction must be in (0, 1]")


@dataclass(frozen=True)
class XGBParams:
    n_rounds: int = 500
    eta: float = 0.3
    max_depth: int = 6
    lam: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    base_score: float = 0.5

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError("n_rounds must not be negative")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.lam < 0.0:
            raise ValueError("lam must not be negative")
        if self.gamma < 0.0:
            raise ValueError("gamma must not be negative")
        if self.min_child_weight < 0.0:
            raise ValueError("min_child_weight must not be negative")


@dataclass
class GBMModel:
    init_value: float
    shrinkage: float
    trees: list[RegressionTree]
    n_features: int
    seed: int
    train_mse: np.ndarray  # train_mse[m] = MSE after m stages


@dataclass
class XGBModel:
    base_score: float
    eta: float
    trees: list[RegressionTree]
    n_features: int
    train_mse: np.ndarray


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be 2-D with one y value per row")
    return X, y


def fit_gbm(X, y, params: GBMParams | None = None, *, seed: int = 0) -> GBMModel:
    params = params or GBMParams()
    X, y = _check_xy(X, y)
    n = X.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    init = float(np.mean(y))
    F = np.full(n, init)
    mse = [float(np.mean((y - F) ** 2))]
    trees = []
    n_bag = max(1, int(params.bag_fraction * n))
    for _ in range(params.n_trees):
        if n_bag < n:
            rows = np.sort(rng.choice(n, size=n_bag, replace=False))
            Xm, rm = X[rows], (y - F)[rows]
        else:
            Xm, rm = X, y - F
        tree = grow_sse_tree(
            Xm, rm, max_depth=params.depth, min_leaf=params.min_obs_node
        )
        F += params.shrinkage * tree_predict(tree, X)
        trees.append(tree)
        mse.append(float(np.mean((y - F) ** 2)))
    return GBMModel(
        init_value=init,
        shrinkage=params.shrinkage,
        trees=trees,
        n_features=X.shape[1],
        seed=seed,
        train_mse=np.asarray(mse),
    )


def fit_xgb(X, y, params: XGBParams | None = None) -> XGBModel:
    params = params or XGBParams()
    X, y = _check_xy(X, y)
    n = X.shape[0]
    F = np.full(n, params.base_score)
    mse = [float(np.mean((y - F) ** 2))]
    trees = []
    h = np.full(n, 2.0)
    pos = _presort(X)  # X never changes across rounds, sort once
    for _ in range(params.n_rounds):
        g = 2.0 * (F - y)
        tree = grow_grad_tree(
            X,
            g,
            h,
            max_depth=params.max_depth,
            lam=params.lam,
            gamma=params.gamma,
            min_child_weight=params.min_child_weight,
            pos=pos,
        )
        F += params.eta * tree_predict(tree, X)
        trees.append(tree)
        mse.append(float(np.mean((y - F) ** 2)))
    return XGBModel(
        base_score=params.base_score,
        eta=params.eta,
        trees=trees,
        n_features=X.shape[1],
        train_mse=np.asarray(mse),
    )


def _staged_predict(X, start: float, scale: float, trees, limit) -> np.ndarray:
    if limit is None:
        limit = len(trees)
    if not 0 <= limit <= len(trees):
        raise ValueError(f"stage limit {limit} outside [0, {len(trees)}]")
    out = np.full(X.shape[0], start)
    for tree in trees[:limit]:
        out += scale * tree_predict(tree, X)
    return out


def gbm_predict(model: GBMModel, X, n_trees: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    return _staged_predict(X, model.init_value, model.shrinkage, model.trees, n_trees)


def xgb_predict(model: XGBModel, X, n_rounds: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    return _staged_predict(X, model.base_score, model.eta, model.trees, n_rounds)
