"""Regression learners: OLS baseline, random forest, and two boosting
variants, all sharing one tree representation."""

from __future__ import annotations

import numpy as np

from precipmerge.learners.boosting import (
    GBMModel,
    GBMParams,
    XGBModel,
    XGBParams,
    fit_gbm,
    fit_xgb,
    gbm_predict,
    xgb_predict,
)
from precipmerge.learners.forest import (
    ForestModel,
    ForestParams,
    fit_random_forest,
    forest_predict,
)
from precipmerge.learners.importance import ImportanceTable, gain_importance
from precipmerge.learners.linear import LinearModel, fit_linear, linear_predict
from precipmerge.learners.serialize import dump_model_text, load_model, save_model
from precipmerge.learners.tree import RegressionTree, fit_tree, tree_predict

__all__ = [
    "ForestModel",
    "ForestParams",
    "GBMModel",
    "GBMParams",
    "ImportanceTable",
    "LinearModel",
    "RegressionTree",
    "XGBModel",
    "XGBParams",
    "dump_model_text",
    "fit_gbm",
    "fit_linear",
    "fit_random_forest",
    "fit_tree",
    "fit_xgb",
    "forest_predict",
    "gain_importance",
    "gbm_predict",
    "linear_predict",
    "load_model",
    "predict",
    "save_model",
    "tree_predict",
    "xgb_predict",
]


def predict(model, x):
    """Predict for one feature vector (1-D input, scalar out) or a batch
    (2-D input, vector out). The feature count must match the model."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2:
        raise ValueError("x must be a feature vector or a matrix of rows")
    if isinstance(model, RegressionTree):
        # trees carry no feature count of their own; bounds-check the splits
        max_feat = int(model.feature.max(initial=-1))
        if X.shape[1] <= max_feat:
            raise ValueError(
                f"feature vector has {X.shape[1]} entries, tree splits on x{max_feat}"
            )
        out = tree_predict(model, X)
    else:
        if X.shape[1] != model.n_features:
            raise ValueError(
                f"feature vector has {X.shape[1]} entries, model expects {model.n_features}"
            )
        if isinstance(model, LinearModel):
            out = linear_predict(model, X)
        elif isinstance(model, ForestModel):
            out = forest_predict(model, X)
        elif isinstance(model, GBMModel):
            out = gbm_predict(model, X)
        elif isinstance(model, XGBModel):
            out = xgb_predict(model, X)
        else:
            raise TypeError(f"cannot predict with {type(model).__name__}")
    return float(out[0]) if single else out
