"""Random forest classifier: bootstrap sampling, entropy-gain decision trees
over randomly drawn feature subsets, and majority-vote prediction.

Split search considers, for each candidate feature, thresholds at the
midpoints between consecutive distinct sorted values, and picks the pair
maximizing information gain. Ties break toward the lower feature index, then
the lower threshold, so induction is fully deterministic given the per-node
feature draw. Class index 0 is DireWin, 1 is RadiantWin; vote and leaf ties
go to RadiantWin, matching the logistic model's 0.5 tie rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyData,
    InvalidConfig,
    NonFiniteFeature,
    SingleClassData,
)
from .matchdata import MatchOutcome

FORMAT_VERSION = 1


@dataclass(frozen=True)
class RfConfig:
    num_trees: int = 100
    features_per_split: int = 0  # 0 = auto: floor(log2 d) + 1
    max_depth: int = 0  # 0 = unlimited
    min_leaf: int = 1
    seed: int = 0

    def validate(self, n_features: int | None = None) -> None:
        if self.num_trees < 1:
            raise InvalidConfig(f"num_trees must be >= 1, got {self.num_trees}")
        if self.min_leaf < 1:
            raise InvalidConfig(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.features_per_split < 0:
            raise InvalidConfig("features_per_split must be >= 0")
        if self.max_depth < 0:
            raise InvalidConfig("max_depth must be >= 0")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")
        if n_features is not None and self.features_per_split > n_features:
            raise InvalidConfig(
                f"features_per_split {self.features_per_split} exceeds {n_features} features"
            )

    def resolved_features_per_split(self, n_features: int) -> int:
        if self.features_per_split:
            return self.features_per_split
        if n_features == 0:
            return 0
        return int(math.floor(math.log2(n_features))) + 1


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (class counts)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: tuple[int, int] | None = None  # (dire, radiant) rows routed here

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None


@dataclass
class RfModel:
    trees: list[TreeNode]
    config: RfConfig
    feature_names: list[str] = field(default_factory=list)


def _entropy_counts(dire, radiant):
    """Binary entropy in bits from class counts; accepts scalars or arrays."""
    dire = np.asarray(dire, dtype=np.float64)
    radiant = np.asarray(radiant, dtype=np.float64)
    n = dire + radiant
    h = np.zeros_like(n)
    for c in (dire, radiant):
        nz = c > 0
        p = c[nz] / n[nz]
        h[nz] -= p * np.log2(p)
    return h if h.ndim else float(h)


def bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform draws with replacement; the sample is an index multiset."""
    if n < 1:
        raise EmptyData("cannot bootstrap an empty dataset")
    return rng.integers(0, n, size=n)


def bootstrap_sample(X: np.ndarray, y: np.ndarray,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    idx = bootstrap_indices(X.shape[0], rng)
    return X[idx], y[idx]


def best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray,
               feature_ids, min_leaf: int = 1):
    """Best (gain, feature, threshold) over the given features, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; a candidate is admissible only if both children hold at least
    ``min_leaf`` rows. The returned split is the first maximum in (feature,
    threshold) order, i.e. ties prefer the lower feature then lower threshold.
    """
    n = rows.size
    labels = y[rows]
    total_radiant = int(labels.sum())
    total_dire = n - total_radiant
    h_parent = _entropy_counts(total_dire, total_radiant)

    best = None
    for f in feature_ids:
        values = X[rows, f]
        order = np.argsort(values, kind="mergesort")
        sv = values[order]
        sy = labels[order]
        cut = np.flatnonzero(sv[1:] != sv[:-1]) + 1  # left child = sorted rows [:cut]
        if cut.size == 0:
            continue
        n_left = cut
        n_right = n - n_left
        if min_leaf > 1:
            ok = (n_left >= min_leaf) & (n_right >= min_leaf)
            if not ok.any():
                continue
            cut, n_left, n_right = cut[ok], n_left[ok], n_right[ok]
        radiant_left = np.cumsum(sy)[cut - 1]
        dire_left = n_left - radiant_left
        radiant_right = total_radiant - radiant_left
        dire_right = total_dire - dire_left
        gains = h_parent - (
            n_left * _entropy_counts(dire_left, radiant_left)
            + n_right * _entropy_counts(dire_right, radiant_right)
        ) / n
        i = int(np.argmax(gains))  # first max = lowest threshold within the feature
        gain = float(gains[i])
        if best is None or gain > best[0]:
            threshold = float((sv[cut[i] - 1] + sv[cut[i]]) / 2.0)
            best = (gain, int(f), threshold)
    return best


def train_tree(X: np.ndarray, y: np.ndarray, config: RfConfig,
               rng: np.random.Generator,
               rows: np.ndarray | None = None) -> TreeNode:
    """Grow one tree over ``rows`` (default: all rows, duplicates allowed).

    Nodes are processed in preorder; the feature subset for each node is
    drawn from ``rng`` at that node, so the tree is deterministic given the
    generator state and the multiset of rows (row order does not matter).
    """
    if X.shape[0] == 0:
        raise EmptyData("cannot train a tree on no rows")
    config.validate(n_features=X.shape[1])
    if rows is None:
        rows = np.arange(X.shape[0])
    d = X.shape[1]
    k = config.resolved_features_per_split(d)

    root = TreeNode()
    stack: list[tuple[TreeNode, np.ndarray, int]] = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        labels = y[node_rows]
        radiant = int(labels.sum())
        dire = node_rows.size - radiant
        if (
            dire == 0
            or radiant == 0
            or (config.max_depth and depth >= config.max_depth)
            or node_rows.size < 2 * config.min_leaf
        ):
            node.counts = (dire, radiant)
            continue
        feats = np.sort(rng.choice(d, size=k, replace=False)) if k < d else np.arange(d)
        found = best_split(X, y, node_rows, feats, config.min_leaf)
        if found is None or found[0] <= 0.0:
            node.counts = (dire, radiant)
            continue
        _, node.feature, node.threshold = found
        mask = X[node_rows, node.feature] <= node.threshold
        node.left = TreeNode()
        node.right = TreeNode()
        # push right first so the left subtree is grown first (preorder)
        stack.append((node.right, node_rows[~mask], depth + 1))
        stack.append((node.left, node_rows[mask], depth + 1))
    return root


def train_rf(X, y, config: RfConfig = RfConfig(), bootstrap: bool = True,
             feature_names: list[str] | None = None) -> RfModel:
    """Train ``num_trees`` trees, each on its own bootstrap sample with an
    indexed rng substream, so training is reproducible and order-independent.

    ``bootstrap=False`` is a test hook that grows every tree on the full
    training set.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X shape {X.shape} does not match {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise EmptyData("cannot train on an empty dataset")
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix contains non-finite values")
    if np.unique(y).size < 2:
        raise SingleClassData("training data contains a single class")
    config.validate(n_features=X.shape[1])

    if feature_names is None:
        feature_names = [f"x{i}" for i in range(X.shape[1])]
    trees = []
    for i in range(config.num_trees):
        rng = np.random.default_rng([config.seed, i])
        rows = bootstrap_indices(X.shape[0], rng) if bootstrap else None
        trees.append(train_tree(X, y, config, rng, rows=rows))
    return RfModel(trees=trees, config=config, feature_names=list(feature_names))


def _tree_votes(root: TreeNode, X: np.ndarray) -> np.ndarray:
    """Per-row vote (0/1) of one tree; leaf ties vote RadiantWin."""
    out = np.empty(X.shape[0], dtype=np.int64)
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = 1 if node.counts[1] >= node.counts[0] else 0
        else:
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.right, idx[~mask]))
            stack.append((node.left, idx[mask]))
    return out


def predict_rf(model: RfModel, x):
    """Majority vote over trees; even-split ties return RadiantWin.

    A single vector yields one MatchOutcome, a matrix a list of them.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    d = len(model.feature_names)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise DimensionMismatch(f"expected {d} features, got shape {np.asarray(x).shape}")
    votes = predict_rf_votes(model, arr)
    labels = [MatchOutcome.from_int(int(v)) for v in (2 * votes >= len(model.trees))]
    return labels[0] if single else labels


def predict_rf_votes(model: RfModel, X: np.ndarray) -> np.ndarray:
    """Number of RadiantWin votes per row."""
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for tree in model.trees:
        votes += _tree_votes(tree, X)
    return votes


# -- persistence ---------------------------------------------------------------

def serialize_rf(model: RfModel) -> str:
    cfg = model.config
    lines = [
        f"winpred-rf {FORMAT_VERSION}",
        f"num_trees={cfg.num_trees}",
        f"features_per_split={cfg.features_per_split}",
        f"max_depth={cfg.max_depth}",
        f"min_leaf={cfg.min_leaf}",
        f"seed={cfg.seed}",
        "features=" + ",".join(model.feature_names),
    ]
    for index, tree in enumerate(model.trees):
        lines.append(f"tree {index}")
        stack = [tree]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                lines.append(f"L {node.counts[0]} {node.counts[1]}")
            else:
                lines.append(f"N {node.feature} {node.threshold:.17g}")
                stack.append(node.right)
                stack.append(node.left)
    return "\n".join(lines) + "\n"


def save_rf(model: RfModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(serialize_rf(model))


def load_rf(path) -> RfModel:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].startswith("winpred-rf "):
        raise InvalidConfig(f"{path} is not a winpred-rf model file")
    header = dict(line.split("=", 1) for line in lines[1:7])
    config = RfConfig(
        num_trees=int(header["num_trees"]),
        features_per_split=int(header["features_per_split"]),
        max_depth=int(header["max_depth"]),
        min_leaf=int(header["min_leaf"]),
        seed=int(header["seed"]),
    )
    names = header["features"].split(",") if header["features"] else []

    pos = 7
    trees: list[TreeNode] = []

    def parse_node() -> TreeNode:
        nonlocal pos
        parts = lines[pos].split(" ")
        pos += 1
        if parts[0] == "L":
            return TreeNode(counts=(int(parts[1]), int(parts[2])))
        return TreeNode(feature=int(parts[1]), threshold=float(parts[2]))

    def read_tree() -> TreeNode:
        root = parse_node()
        if root.is_leaf:
            return root
        open_nodes = [root]  # internal nodes still missing a child; left fills first
        while open_nodes:
            node = parse_node()
            parent = open_nodes[-1]
            if parent.left is None:
                parent.left = node
            else:
                parent.right = node
                open_nodes.pop()
            if not node.is_leaf:
                open_nodes.append(node)
        return root

    while pos < len(lines):
        if not lines[pos].startswith("tree "):
            raise InvalidConfig(f"{path}: expected tree header at line {pos + 1}")
        pos += 1
        trees.append(read_tree())
    if len(trees) != config.num_trees:
        raise InvalidConfig(f"{path}: {len(trees)} trees, header says {config.num_trees}")
    return RfModel(trees=trees, config=config, feature_names=names)
