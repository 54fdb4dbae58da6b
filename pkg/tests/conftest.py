import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_regression(rng, n=80, p=5, noise=0.1):
    """Small nonlinear regression problem used across learner tests."""
    X = rng.uniform(-2.0, 2.0, size=(n, p))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2 + noise * rng.normal(size=n)
    return X, y
