"""Split-gain variable importance for tree ensembles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from precipmerge.learners.boosting import GBMModel, XGBModel
from precipmerge.learners.forest import ForestModel


@dataclass(frozen=True)
class ImportanceTable:
    """Per-feature share of total split gain.

    ``fractions`` sums to 1 unless no tree in the ensemble ever split, in
    which case it is all zeros and ``degenerate`` is set.
    """

    fractions: np.ndarray
    degenerate: bool


def gain_importance(model) -> ImportanceTable:
    if not isinstance(model, (ForestModel, GBMModel, XGBModel)):
        raise TypeError(f"no split gains on {type(model).__name__}")
    totals = np.zeros(model.n_features)
    for tree in model.trees:
        internal = tree.feature >= 0
        np.add.at(totals, tree.feature[internal], tree.gain[internal])
    grand = float(totals.sum())
    if grand <= 0.0:
        return ImportanceTable(fractions=np.zeros(model.n_features), degenerate=True)
    return ImportanceTable(fractions=totals / grand, degenerate=False)
