"""Feature-subset selection: a correlation-based filter and a learner-wrapped
evaluator, both driven by best-first search over the subset lattice.

The correlation measure is symmetric uncertainty,

    SU(A; B) = 2 * I(A; B) / (H(A) + H(B)),

computed on discretized columns. Continuous features are discretized into 10
equal-frequency bins by rank: each distinct value takes the bin
``first_rank * bins // n`` where ``first_rank`` is the ascending-sort rank of
its first occurrence, so tied values always share a bin. The rule depends
only on ranks (exactly invariant under strictly increasing transforms;
mirror-exact under decreasing ones when the bins divide n evenly).
Already-discrete columns (e.g. tri-state hero features) skip binning.

A subset of size k with mean feature-class correlation rcf and mean pairwise
feature-feature correlation rff scores

    merit = k * rcf / sqrt(k + k * (k - 1) * rff)

with the empty subset defined as merit 0.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from .errors import InvalidConfig, SingleClassData, TooFewRows

CFS_BINS = 10


@dataclass(frozen=True)
class SearchConfig:
    stale_limit: int = 5
    direction: str = "forward"  # searches start from the empty set

    def validate(self) -> None:
        if self.stale_limit < 1:
            raise InvalidConfig(f"stale_limit must be >= 1, got {self.stale_limit}")
        if self.direction != "forward":
            raise InvalidConfig(f"unsupported search direction {self.direction!r}")


@dataclass(frozen=True)
class FeatureSubset:
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(set(self.indices))))


def equal_frequency_bins(column: np.ndarray, bins: int = CFS_BINS) -> np.ndarray:
    """Rank-based equal-frequency bin codes in [0, bins); ties share a bin."""
    unique, inverse = np.unique(column, return_inverse=True)
    counts = np.bincount(inverse)
    first_rank = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return (first_rank * bins // column.size)[inverse]


def _discrete_codes(column: np.ndarray) -> np.ndarray:
    return np.unique(column, return_inverse=True)[1]


def _su_from_codes(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric uncertainty of two integer code columns."""
    na = int(a.max()) + 1
    nb = int(b.max()) + 1
    joint = np.bincount(a * nb + b, minlength=na * nb).astype(np.float64) / a.size
    pa = joint.reshape(na, nb).sum(axis=1)
    pb = joint.reshape(na, nb).sum(axis=0)

    def entropy(p):
        nz = p > 0
        return float(-(p[nz] * np.log2(p[nz])).sum())

    ha, hb, hab = entropy(pa), entropy(pb), entropy(joint)
    denominator = ha + hb
    if denominator == 0.0:
        return 0.0
    return min(1.0, max(0.0, 2.0 * (ha + hb - hab) / denominator))


def feature_class_correlation(column, labels, discrete: bool = False) -> float:
    """SU between one feature column and the class labels, in [0, 1]."""
    column = np.asarray(column, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if np.unique(labels).size < 2:
        raise SingleClassData("labels contain a single class")
    codes = _discrete_codes(column) if discrete else equal_frequency_bins(column)
    return _su_from_codes(codes, labels)


class CfsEvaluator:
    """Correlation-based subset scorer with cached pairwise correlations."""

    def __init__(self, X, y, discrete: bool = False, bins: int = CFS_BINS):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if np.unique(y).size < 2:
            raise SingleClassData("labels contain a single class")
        if discrete:
            self._codes = np.column_stack([_discrete_codes(X[:, j]) for j in range(X.shape[1])])
        else:
            self._codes = np.column_stack(
                [equal_frequency_bins(X[:, j], bins) for j in range(X.shape[1])]
            )
        self._y = y
        self.n_features = X.shape[1]
        self._class_su: dict[int, float] = {}
        self._pair_su: dict[tuple[int, int], float] = {}

    def class_su(self, j: int) -> float:
        if j not in self._class_su:
            self._class_su[j] = _su_from_codes(self._codes[:, j], self._y)
        return self._class_su[j]

    def pair_su(self, i: int, j: int) -> float:
        key = (i, j) if i < j else (j, i)
        if key not in self._pair_su:
            self._pair_su[key] = _su_from_codes(self._codes[:, key[0]], self._codes[:, key[1]])
        return self._pair_su[key]

    def evaluate(self, indices: tuple[int, ...]) -> float:
        k = len(indices)
        if k == 0:
            return 0.0
        rcf = sum(self.class_su(j) for j in indices) / k
        if k == 1:
            return rcf
        pairs = [(indices[a], indices[b]) for a in range(k) for b in range(a + 1, k)]
        rff = sum(self.pair_su(i, j) for i, j in pairs) / len(pairs)
        return k * rcf / np.sqrt(k + k * (k - 1) * rff)


def cfs_merit(indices, X, y, discrete: bool = False) -> float:
    """Merit of one subset; convenience wrapper over :class:`CfsEvaluator`."""
    return CfsEvaluator(X, y, discrete=discrete).evaluate(tuple(sorted(indices)))


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Deterministic stratified fold ids: per class (0 then 1), shuffle that
    class's row indices with ``default_rng(seed)`` and deal them round-robin."""
    if folds < 2:
        raise InvalidConfig(f"folds must be >= 2, got {folds}")
    if y.size < folds:
        raise TooFewRows(f"{y.size} rows cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    fold = np.empty(y.size, dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        fold[idx] = np.arange(idx.size) % folds
    return fold


def wrapper_score(indices, X, y, train_fn, folds: int = 5, seed: int = 0) -> float:
    """Pooled accuracy of the learner over stratified k-fold CV restricted to
    the subset's columns: total correct predictions / total rows.

    The empty subset scores the majority-class fraction (a no-feature
    learner can only predict the prior).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if np.unique(y).size < 2:
        raise SingleClassData("labels contain a single class")
    indices = tuple(sorted(indices))
    if not indices:
        return float(max(np.bincount(y, minlength=2)) / y.size)
    fold = stratified_folds(y, folds, seed)
    Xsub = X[:, indices]
    correct = 0
    for k in range(folds):
        test = fold == k
        predict = train_fn(Xsub[~test], y[~test])
        correct += int((predict(Xsub[test]) == y[test]).sum())
    return correct / y.size


class WrapperEvaluator:
    """Scores subsets by cross-validated accuracy of the wrapped learner."""

    def __init__(self, X, y, train_fn, folds: int = 5, seed: int = 0):
        self._X = np.asarray(X, dtype=np.float64)
        self._y = np.asarray(y, dtype=np.int64)
        self._train_fn = train_fn
        self._folds = folds
        self._seed = seed
        self.n_features = self._X.shape[1]

    def evaluate(self, indices: tuple[int, ...]) -> float:
        return wrapper_score(indices, self._X, self._y, self._train_fn,
                             folds=self._folds, seed=self._seed)


def best_first_search(evaluate_fn, n_features: int,
                      config: SearchConfig = SearchConfig(),
                      workers: int = 1) -> tuple[FeatureSubset, float]:
    """Greedy best-first search over the subset lattice from the empty set.

    Expanding a node evaluates every unvisited single-feature addition and
    deletion (additions first, ascending index). The open list pops the
    highest score, ties resolved toward the lexicographically smaller subset.
    The search halts after ``stale_limit`` consecutive expansions that fail
    to improve the best score, and returns the best subset visited (the
    first one found, on score ties). No subset is evaluated twice.
    """
    config.validate()
    if n_features < 1:
        raise InvalidConfig("n_features must be >= 1")

    empty: tuple[int, ...] = ()
    best_subset, best_score = empty, evaluate_fn(empty)
    visited = {empty}
    heap: list[tuple[float, tuple[int, ...]]] = [(-best_score, empty)]
    stale = 0

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    map_fn = pool.map if pool is not None else map
    try:
        while heap and stale < config.stale_limit:
            _, current = heappop(heap)
            members = set(current)
            neighbors = [tuple(sorted(members | {j})) for j in range(n_features) if j not in members]
            neighbors += [tuple(j for j in current if j != drop) for drop in current]
            fresh = [s for s in neighbors if s not in visited]
            visited.update(fresh)
            improved = False
            for subset, score in zip(fresh, map_fn(evaluate_fn, fresh)):
                heappush(heap, (-score, subset))
                if score > best_score:
                    best_subset, best_score = subset, score
                    improved = True
            stale = 0 if improved else stale + 1
    finally:
        if pool is not None:
            pool.shutdown()
    return FeatureSubset(best_subset), best_score


def select_features(X, y, kind: str, train_fn=None, discrete: bool = False,
                    folds: int = 5, seed: int = 0,
                    config: SearchConfig = SearchConfig(),
                    workers: int = 1) -> tuple[FeatureSubset, float]:
    """Run best-first search with the chosen evaluator ('cfs' or 'wrapper').

    Callers are responsible for passing training rows only.
    """
    X = np.asarray(X, dtype=np.float64)
    if kind == "cfs":
        evaluator = CfsEvaluator(X, y, discrete=discrete)
    elif kind == "wrapper":
        if train_fn is None:
            raise InvalidConfig("wrapper selection needs a learner train_fn")
        evaluator = WrapperEvaluator(X, y, train_fn, folds=folds, seed=seed)
    else:
        raise InvalidConfig(f"unknown evaluator kind {kind!r}")
    return best_first_search(evaluator.evaluate, X.shape[1], config=config, workers=workers)
