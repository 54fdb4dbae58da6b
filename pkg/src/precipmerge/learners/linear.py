"""Ordinary least squares baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from precipmerge.errors import DataError


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coef: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.coef)


def _collinear_columns(A: np.ndarray, rank: int, feature_names) -> list[str]:
    # Pivoted QR orders columns by decreasing contribution; everything past
    # the numerical rank is expressible from the columns before it.
    _, _, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    names = []
    for j in sorted(piv[rank:]):
        if j == 0:
            names.append("intercept")
        elif feature_names is not None:
            names.append(str(feature_names[j - 1]))
        else:
            names.append(f"x{j - 1}")
    return names


def fit_linear(X, y, feature_names=None) -> LinearModel:
    """Least-squares fit of ``y ~ 1 + X``.

    Raises :class:`DataError` when the design matrix is rank-deficient,
    naming the offending columns, and when there are not strictly more
    samples than fitted coefficients.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError("y length does not match X")
    if n <= p:
        raise DataError(f"need more samples ({n}) than predictors ({p})")
    A = np.column_stack([np.ones(n), X])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < p + 1:
        bad = _collinear_columns(A, rank, feature_names)
        raise DataError(
            "design matrix is rank-deficient; drop or merge collinear columns: "
            + ", ".join(bad)
        )
    return LinearModel(intercept=float(coef[0]), coef=coef[1:].copy())


def linear_predict(model: LinearModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    return model.intercept + X @ model.coef
