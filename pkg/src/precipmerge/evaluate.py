"""Cross-validation, scoring and ranking.

The benchmark protocol: split stations into two folds, fit every
{algorithm, predictor set} pair on each training fold, score the held-out
fold with the median of squared errors, express each cell relative to a
linear-regression reference, and rank algorithms per sample with
fractional (average) ranks for ties, both within a predictor set (ranks
1-4) and collectively over all {algorithm, set} pairs (ranks 1-12).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from precipmerge.errors import DataError
from precipmerge.ingest.samples import (
    PREDICTOR_NAMES,
    PREDICTOR_SETS,
    SampleTable,
    predictor_matrix,
)
from precipmerge.learners import (
    ForestParams,
    GBMParams,
    XGBParams,
    fit_gbm,
    fit_linear,
    fit_random_forest,
    fit_xgb,
    forest_predict,
    gbm_predict,
    linear_predict,
    xgb_predict,
)

ALGORITHMS = ("linear", "forest", "gbm", "xgb")


@dataclass(frozen=True)
class FoldAssignment:
    seed: int
    fold_of: dict  # key -> fold id (1-based)
    n_folds: int = 2

    def keys_in(self, fold: int) -> list:
        return sorted(k for k, f in self.fold_of.items() if f == fold)


@dataclass(frozen=True)
class CellScore:
    algorithm: str
    predictor_set: str
    test_fold: int
    med_se: float
    n_cases: int = 0


@dataclass(frozen=True)
class RelativeScore:
    algorithm: str
    predictor_set: str
    reference: str
    raw_relative: float
    improvement: float
    test_fold: int | None = None


@dataclass(frozen=True)
class RankTable:
    contenders: tuple
    mean_rank: np.ndarray  # (k,)
    freq_percent: np.ndarray  # (k, k): row contender, column position 1..k
    n_cases: int


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple
    values: np.ndarray  # NaN where undefined
    defined: np.ndarray  # bool mask


def make_folds(keys, seed: int, n_folds: int = 2) -> FoldAssignment:
    """Uniform random partition of ``keys`` into folds whose sizes differ
    by at most one; the assignment depends only on the sorted key set and
    the seed."""
    keys = sorted(set(keys))
    if len(keys) < n_folds:
        raise DataError(f"need at least {n_folds} distinct keys, got {len(keys)}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    perm = rng.permutation(len(keys))
    fold_of = {}
    for slot, key_idx in enumerate(perm):
        fold_of[keys[key_idx]] = slot % n_folds + 1
    return FoldAssignment(seed=seed, fold_of=fold_of, n_folds=n_folds)


def squared_error(prediction, observation):
    prediction = np.asarray(prediction, dtype=np.float64)
    observation = np.asarray(observation, dtype=np.float64)
    if not (np.all(np.isfinite(prediction)) and np.all(np.isfinite(observation))):
        raise ValueError("squared_error needs finite inputs")
    return (prediction - observation) ** 2


def median_squared_error(errors) -> float:
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("median of an empty error list is undefined")
    return float(np.median(errors))


def relative_score(cell: CellScore, ref: CellScore) -> RelativeScore:
    if cell.test_fold != ref.test_fold:
        raise ValueError("relative score compares cells on the same test fold")
    if not ref.med_se > 0.0:
        raise ValueError("reference median squared error must be positive")
    raw = 100.0 * (cell.med_se - ref.med_se) / ref.med_se
    return RelativeScore(
        algorithm=cell.algorithm,
        predictor_set=cell.predictor_set,
        reference=f"{ref.algorithm}:{ref.predictor_set}",
        raw_relative=raw,
        improvement=0.0 - raw,  # 0.0 - 0.0 is +0.0; plain negation is not
        test_fold=cell.test_fold,
    )


def mean_relative_score(fold_scores) -> float:
    """Arithmetic mean of the two per-fold raw relative scores."""
    scores = list(fold_scores)
    if len(scores) != 2:
        raise DataError(f"need scores for both folds, got {len(scores)}")
    if all(isinstance(s, RelativeScore) for s in scores):
        a, b = scores
        if (a.algorithm, a.predictor_set, a.reference) != (
            b.algorithm,
            b.predictor_set,
            b.reference,
        ):
            raise DataError("fold scores describe different cells")
        if a.test_fold == b.test_fold:
            raise DataError("fold scores come from the same fold")
        return (a.raw_relative + b.raw_relative) / 2.0
    return float(np.mean([float(s) for s in scores]))


def rank_per_case(errors) -> np.ndarray:
    """Ascending ranks of one case's errors; tied contenders share the
    mean of the positions their group spans."""
    e = np.asarray(errors, dtype=np.float64)
    if e.ndim != 1 or e.size < 2:
        raise ValueError("need at least two contenders to rank")
    if not np.all(np.isfinite(e)):
        raise ValueError("ranks need finite errors")
    order = np.argsort(e, kind="stable")
    ranks = np.empty(e.size, dtype=np.float64)
    i = 0
    while i < e.size:
        j = i
        while j + 1 < e.size and e[order[j + 1]] == e[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _accumulate_positions(rank_row: np.ndarray, counts: np.ndarray) -> None:
    # Contenders sharing a rank value form the tie group; each spreads one
    # unit of weight evenly over the integer positions the group spans.
    k = rank_row.size
    for idx in range(k):
        r = rank_row[idx]
        group = int(np.sum(rank_row == r))
        lo = int(round(r - (group - 1) / 2.0))
        counts[idx, lo - 1 : lo - 1 + group] += 1.0 / group


def mean_rankings(ranks_by_fold: dict, contenders) -> RankTable:
    """Two-stage mean ranks (within fold, then across folds) plus the
    position-frequency matrix pooled over all folds' cases."""
    contenders = tuple(contenders)
    k = len(contenders)
    fold_means = []
    counts = np.zeros((k, k))
    total = 0
    for fold in sorted(ranks_by_fold):
        ranks = np.asarray(ranks_by_fold[fold], dtype=np.float64)
        if ranks.ndim != 2 or ranks.shape[1] != k:
            raise ValueError(f"fold {fold}: expected (cases, {k}) rank array")
        if ranks.shape[0] == 0:
            raise DataError(f"fold {fold} has no ranked cases")
        fold_means.append(ranks.mean(axis=0))
        for row in ranks:
            _accumulate_positions(row, counts)
        total += ranks.shape[0]
    if not fold_means:
        raise DataError("no folds to rank")
    return RankTable(
        contenders=contenders,
        mean_rank=np.mean(fold_means, axis=0),
        freq_percent=counts * (100.0 / total),
        n_cases=total,
    )


def _rank_columns(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    for c in range(values.shape[1]):
        out[:, c] = rank_per_case(values[:, c])
    return out


def spearman_matrix(values, labels) -> CorrelationMatrix:
    """Spearman correlation over columns of ``values`` (average ranks for
    ties, then Pearson on the rank transforms). Columns with zero rank
    variance give undefined (NaN) entries, flagged in ``defined``."""
    values = np.asarray(values, dtype=np.float64)
    labels = tuple(labels)
    if values.ndim != 2 or values.shape[1] != len(labels):
        raise ValueError("values must be (samples, len(labels))")
    if values.shape[0] < 2:
        raise DataError("need at least two samples for correlations")
    ranks = _rank_columns(values)
    centered = ranks - ranks.mean(axis=0)
    scale = np.sqrt(np.sum(centered**2, axis=0))
    ok = scale > 0.0
    m = len(labels)
    out = np.full((m, m), np.nan)
    defined = np.outer(ok, ok)
    safe = np.where(ok, scale, 1.0)
    normed = centered / safe
    corr = normed.T @ normed
    out[defined] = np.clip(corr, -1.0, 1.0)[defined]
    if np.any(ok):
        idx = np.where(ok)[0]
        out[idx, idx] = 1.0
    return CorrelationMatrix(labels=labels, values=out, defined=defined)


@dataclass
class EvaluationReport:
    seed: int
    split_unit: str
    algorithms: tuple
    predictor_sets: tuple
    fold_sizes: dict  # fold -> test-sample count
    cells: list  # CellScore
    relative_cells: list  # RelativeScore, both reference modes, per fold
    mean_relative: list  # dicts: algorithm, predictor_set, reference_mode, ...
    rank4: dict = field(default_factory=dict)  # set tag -> RankTable
    rank12: RankTable | None = None


def _fit_predict(algorithm, Xtr, ytr, Xte, params, seed, threads):
    if algorithm == "linear":
        model = fit_linear(Xtr, ytr)
        return linear_predict(model, Xte), model
    if algorithm == "forest":
        model = fit_random_forest(Xtr, ytr, params, seed=seed, threads=threads)
        return forest_predict(model, Xte), model
    if algorithm == "gbm":
        model = fit_gbm(Xtr, ytr, params, seed=seed)
        return gbm_predict(model, Xte), model
    if algorithm == "xgb":
        model = fit_xgb(Xtr, ytr, params)
        return xgb_predict(model, Xte), model
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _cell_seed(cv_seed: int, fold: int, set_idx: int, alg_idx: int) -> int:
    seq = np.random.SeedSequence(entropy=cv_seed, spawn_key=(fold, set_idx, alg_idx))
    return int(seq.generate_state(1)[0])


def run_benchmark(
    table: SampleTable,
    *,
    seed: int = 0,
    split_unit: str = "station",
    n_folds: int = 2,
    algorithms=ALGORITHMS,
    set_tags=("set1", "set2", "set3"),
    forest: ForestParams | None = None,
    gbm: GBMParams | None = None,
    xgb: XGBParams | None = None,
    threads: int = 1,
) -> EvaluationReport:
    """Fit and score every {algorithm, predictor set} cell under two-fold
    cross-validation.

    Stochastic trainers get per-cell seeds derived from ``seed`` and the
    (fold, set, algorithm) coordinates, so any subset of cells can be
    recomputed independently with identical results.
    """
    if table.n_samples == 0:
        raise DataError("sample table is empty")
    if split_unit == "station":
        keys = table.station_ids
    elif split_unit == "sample":
        keys = np.arange(table.n_samples)
    else:
        raise ValueError(f"unknown split unit {split_unit!r}")
    params_by_alg = {
        "linear": None,
        "forest": forest or ForestParams(),
        "gbm": gbm or GBMParams(),
        "xgb": xgb or XGBParams(),
    }
    algorithms = tuple(algorithms)
    set_tags = tuple(set_tags)
    folds = make_folds(keys.tolist(), seed, n_folds)
    sample_fold = np.asarray([folds.fold_of[k] for k in keys.tolist()], dtype=np.int64)
    fold_ids = tuple(range(1, n_folds + 1))

    cells: dict[tuple, CellScore] = {}
    se: dict[tuple, np.ndarray] = {}  # (alg, set, fold) -> per-test-sample sq. errors
    fold_sizes = {}
    for fold in fold_ids:
        test = sample_fold == fold
        train = ~test
        if not test.any() or not train.any():
            raise DataError(f"fold {fold} leaves an empty train or test side")
        fold_sizes[fold] = int(test.sum())
        ytr, yte = table.y[train], table.y[test]
        for s_idx, tag in enumerate(set_tags):
            pset = PREDICTOR_SETS[tag]
            X = predictor_matrix(table, pset)
            Xtr, Xte = X[train], X[test]
            for a_idx, alg in enumerate(algorithms):
                pred, _ = _fit_predict(
                    alg,
                    Xtr,
                    ytr,
                    Xte,
                    params_by_alg[alg],
                    _cell_seed(seed, fold, s_idx, a_idx),
                    threads,
                )
                err = squared_error(pred, yte)
                se[(alg, tag, fold)] = err
                cells[(alg, tag, fold)] = CellScore(
                    algorithm=alg,
                    predictor_set=tag,
                    test_fold=fold,
                    med_se=median_squared_error(err),
                    n_cases=len(err),
                )

    relative_cells = []
    mean_relative = []
    # Relative scores need the linear baseline cells; a run without the
    # baseline still produces medians and rankings.
    modes = ("same-set", "set1") if "linear" in algorithms else ()
    if "set1" not in set_tags:
        modes = tuple(m for m in modes if m != "set1")
    for mode in modes:
        for tag in set_tags:
            for alg in algorithms:
                per_fold = []
                for fold in fold_ids:
                    ref_tag = tag if mode == "same-set" else "set1"
                    rel = relative_score(cells[(alg, tag, fold)], cells[("linear", ref_tag, fold)])
                    per_fold.append(rel)
                    relative_cells.append((mode, rel))
                if len(fold_ids) == 2:
                    mean_raw = mean_relative_score(per_fold)
                else:
                    mean_raw = float(np.mean([r.raw_relative for r in per_fold]))
                mean_relative.append(
                    {
                        "algorithm": alg,
                        "predictor_set": tag,
                        "reference_mode": mode,
                        "reference": per_fold[0].reference,
                        "mean_raw_relative": mean_raw,
                        "mean_improvement": 0.0 - mean_raw,
                    }
                )

    rank4 = {}
    if len(algorithms) >= 2:
        for tag in set_tags:
            ranks_by_fold = {}
            for fold in fold_ids:
                errs = np.column_stack([se[(alg, tag, fold)] for alg in algorithms])
                ranks_by_fold[fold] = np.vstack([rank_per_case(row) for row in errs])
            rank4[tag] = mean_rankings(ranks_by_fold, algorithms)

    contenders12 = tuple(f"{alg}:{tag}" for tag in set_tags for alg in algorithms)
    rank12 = None
    if len(contenders12) >= 2:
        ranks_by_fold = {}
        for fold in fold_ids:
            errs = np.column_stack(
                [se[(alg, tag, fold)] for tag in set_tags for alg in algorithms]
            )
            ranks_by_fold[fold] = np.vstack([rank_per_case(row) for row in errs])
        rank12 = mean_rankings(ranks_by_fold, contenders12)

    return EvaluationReport(
        seed=seed,
        split_unit=split_unit,
        algorithms=algorithms,
        predictor_sets=set_tags,
        fold_sizes=fold_sizes,
        cells=[cells[k] for k in sorted(cells)],
        relative_cells=relative_cells,
        mean_relative=mean_relative,
        rank4=rank4,
        rank12=rank12,
    )


def table_variable_matrix(table: SampleTable):
    """(samples, 18) matrix of predictand plus the 17 predictors, with
    matching labels, for correlation exploration."""
    labels = ("gauge_mm",) + PREDICTOR_NAMES
    return np.column_stack([table.y, table.predictors]), labels


def importance_fit_full(table: SampleTable, xgb: XGBParams | None = None):
    """Full-data predictor-set-3 second-order boosting fit, the basis of
    the gain-importance ranking."""
    X = predictor_matrix(table, PREDICTOR_SETS["set3"])
    return fit_xgb(X, table.y, xgb or XGBParams())


__all__ = [
    "ALGORITHMS",
    "CellScore",
    "CorrelationMatrix",
    "EvaluationReport",
    "FoldAssignment",
    "RankTable",
    "RelativeScore",
    "make_folds",
    "mean_rankings",
    "mean_relative_score",
    "median_squared_error",
    "rank_per_case",
    "relative_score",
    "run_benchmark",
    "spearman_matrix",
    "squared_error",
    "table_variable_matrix",
    "importance_fit_full",
]
