"""Timing comparison of the compiled and pure-numpy kernel backends.

Fits each tree learner on the same synthetic regression task under both
backends, checks that the predictions agree bit for bit, and prints the
wall-clock ratio. Run from the repository root:

    python3 benchmarks/bench_backends.py [--n 2000] [--p 17]
"""

import argparse
import time

import numpy as np

import precipmerge._kernels as kernels
from precipmerge.learners import (
    ForestParams,
    GBMParams,
    XGBParams,
    fit_gbm,
    fit_random_forest,
    fit_xgb,
    forest_predict,
    gbm_predict,
    xgb_predict,
)


def _task(n, p, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (
        np.sin(X[:, 0])
        + 0.5 * X[:, 1] ** 2
        + np.where(X[:, 2] > 0.3, 1.5, -0.5)
        + 0.1 * rng.normal(size=n)
    )
    return X, y


def _fits(n, p):
    X, y = _task(n, p)
    return (
        ("forest (60 trees)", lambda: fit_random_forest(X, y, ForestParams(n_trees=60), seed=1),
         forest_predict, X),
        ("gbm (200 stumps)", lambda: fit_gbm(X, y, GBMParams(n_trees=200), seed=1),
         gbm_predict, X),
        ("xgb (40 rounds, depth 6)", lambda: fit_xgb(X, y, XGBParams(n_rounds=40)),
         xgb_predict, X),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="training samples")
    ap.add_argument("--p", type=int, default=17, help="features")
    args = ap.parse_args()

    try:
        kernels.set_backend("c")
    except ImportError:
        raise SystemExit("compiled kernels are not built; nothing to compare")

    print(f"n={args.n} p={args.p}")
    print(f"{'fit':<28}{'c [s]':>10}{'python [s]':>12}{'speedup':>10}")
    for name, fit, predict, X in _fits(args.n, args.p):
        times = {}
        preds = {}
        for backend in ("c", "python"):
            kernels.set_backend(backend)
            t0 = time.perf_counter()
            model = fit()
            times[backend] = time.perf_counter() - t0
            preds[backend] = predict(model, X)
        if not np.array_equal(preds["c"], preds["python"]):
            raise SystemExit(f"{name}: backends disagree, this is a bug")
        ratio = times["python"] / times["c"]
        print(f"{name:<28}{times['c']:>10.3f}{times['python']:>12.3f}{ratio:>9.1f}x")
    print("predictions bit-identical across backends")


if __name__ == "__main__":
    main()
