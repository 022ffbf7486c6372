"""Decision trees and random forests grown with Gini impurity.

Splits send ``x[feature] < threshold`` left and the rest right. Candidate
thresholds are midpoints between consecutive distinct values of a feature.
Forests use bootstrap resampling and evaluate floor(sqrt(n)) randomly drawn
features per node. Every tree draws from its own ``SeedSequence`` child, so
a forest is a pure function of (data, config) whatever the thread count.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, EmptySetError, ModelParseError, ModelVersionError, SingleClassError

FOREST_FORMAT = "vfrate-forest"
FOREST_VERSION = 1

# gains closer than this are treated as ties
GAIN_TOL = 1e-12


@dataclass(frozen=True)
class Leaf:
    counts: tuple


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"
    n_samples: int = 0
    gain: float = 0.0


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    gain: float


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 100
    max_depth: Optional[int] = 7
    features_per_node: Optional[int] = None  # None -> floor(sqrt(n_features))
    min_samples_split: int = 2
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.features_per_node is not None and self.features_per_node < 1:
            raise ValueError("features_per_node must be positive")
        if self.min_samples_split < 1:
            raise ValueError("min_samples_split must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def resolved_features_per_node(self, n_features: int) -> int:
        if self.features_per_node is not None:
            return min(self.features_per_node, n_features)
        return max(1, math.isqrt(n_features))


def gini(class_counts) -> float:
    """Gini impurity sum_c p_c (1 - p_c)."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total == 0:
        raise EmptySetError("gini of an empty set")
    p = counts / total
    return float(np.sum(p * (1.0 - p)))


def _midpoint(a: float, b: float) -> float:
    t = a + (b - a) / 2.0
    if not a < t <= b:
        t = b
    return t


def _feature_gains(x: np.ndarray, y: np.ndarray, n_classes: int, parent: float):
    """Gains and thresholds for every midpoint of one feature (ascending)."""
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    valid = np.nonzero(xs[:-1] < xs[1:])[0]
    if valid.size == 0:
        return None, None
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), y[order]] = 1
    left = np.cumsum(onehot, axis=0)[valid]
    right = np.bincount(y, minlength=n_classes) - left
    n_left = (valid + 1).astype(np.float64)
    n_right = n - n_left
    w_left = (n_left - (left.astype(np.float64) ** 2).sum(axis=1) / n_left) / n
    w_right = (n_right - (right.astype(np.float64) ** 2).sum(axis=1) / n_right) / n
    gains = parent - w_left - w_right
    thresholds = np.array([_midpoint(xs[i], xs[i + 1]) for i in valid])
    return gains, thresholds


def best_split(X, y, candidate_features: Sequence[int], n_classes: Optional[int] = None) -> Optional[SplitCandidate]:
    """Best (feature, threshold, gain) over midpoint thresholds, or None.

    ``y`` holds integer class codes. Ties go to the lowest feature index, then
    the lowest threshold. Returns None when no split has positive gain.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise EmptySetError("best_split on an empty sample set")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    counts = np.bincount(y, minlength=n_classes)
    parent = gini(counts)
    if parent == 0.0:
        return None
    per_feature = []
    for f in sorted(set(int(f) for f in candidate_features)):
        gains, thresholds = _feature_gains(X[:, f], y, n_classes, parent)
        if gains is not None:
            per_feature.append((f, gains, thresholds))
    if not per_feature:
        return None
    best = max(g.max() for _, g, _ in per_feature)
    if best <= GAIN_TOL:
        return None
    for f, gains, thresholds in per_feature:
        hits = np.nonzero(gains >= best - GAIN_TOL)[0]
        if hits.size:
            i = hits[0]
            return SplitCandidate(f, float(thresholds[i]), float(gains[i]))
    return None  # unreachable


def train_tree(X, y, n_classes: int, config: TrainConfig, rng: np.random.Generator,
               sample_idx: Optional[np.ndarray] = None) -> Node:
    """Grow one tree on the rows ``sample_idx`` (default: all) of (X, y)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if sample_idx is None:
        sample_idx = np.arange(y.size)
    if sample_idx.size == 0:
        raise EmptySetError("cannot train a tree on zero samples")
    n_features = X.shape[1]
    k = config.resolved_features_per_node(n_features)

    def grow(idx: np.ndarray, depth: int) -> Node:
        counts = np.bincount(y[idx], minlength=n_classes)
        if (np.count_nonzero(counts) <= 1
                or (config.max_depth is not None and depth >= config.max_depth)
                or idx.size < config.min_samples_split):
            return Leaf(tuple(int(c) for c in counts))
        feats = rng.choice(n_features, size=k, replace=False)
        cand = best_split(X[idx], y[idx], feats, n_classes)
        if cand is None:
            return Leaf(tuple(int(c) for c in counts))
        go_left = X[idx, cand.feature] < cand.threshold
        return Split(cand.feature, cand.threshold,
                     grow(idx[go_left], depth + 1), grow(idx[~go_left], depth + 1),
                     int(idx.size), cand.gain)

    return grow(np.asarray(sample_idx, dtype=np.int64), 0)


def tree_depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def iter_nodes(node: Node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Split):
            stack.extend((n.right, n.left))


def apply_tree(node: Node, X: np.ndarray) -> np.ndarray:
    """Leaf class-count vectors reached by each row of X, shape (rows, n_classes)."""
    X = np.asarray(X, dtype=np.float64)
    first = node
    while isinstance(first, Split):
        first = first.left
    out = np.zeros((X.shape[0], len(first.counts)), dtype=np.int64)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        n, idx = stack.pop()
        if idx.size == 0:
            continue
        if isinstance(n, Leaf):
            out[idx] = n.counts
            continue
        left = X[idx, n.feature] < n.threshold
        stack.append((n.left, idx[left]))
        stack.append((n.right, idx[~left]))
    return out


@dataclass(frozen=True)
class RandomForest:
    trees: tuple
    class_labels: tuple
    n_features: int
    config: TrainConfig
    tie_break: Any = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def max_depth(self) -> Optional[int]:
        return self.config.max_depth

    @property
    def seed(self) -> int:
        return self.config.seed

    def _winner(self, scores: np.ndarray) -> np.ndarray:
        """Row-wise argmax with ties resolved toward ``tie_break``."""
        top = scores.max(axis=1, keepdims=True)
        tied = scores == top
        win = np.argmax(tied, axis=1)
        if self.tie_break is not None:
            pref = self.class_labels.index(self.tie_break)
            win = np.where(tied[:, pref], pref, win)
        return win

    def votes(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatchError(f"expected {self.n_features} features, got {X.shape[1]}")
        n_classes = len(self.class_labels)
        v = np.zeros((X.shape[0], n_classes), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            v[rows, self._winner(apply_tree(tree, X))] += 1
        return v

    def predict_many(self, X) -> list:
        win = self._winner(self.votes(X))
        return [self.class_labels[i] for i in win]

    def predict(self, x) -> tuple[Any, dict]:
        """Majority vote for one vector; returns (label, {label: votes})."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionMismatchError("predict expects a single feature vector")
        v = self.votes(x[None, :])
        label = self.class_labels[int(self._winner(v)[0])]
        return label, dict(zip(self.class_labels, v[0].tolist()))

    def feature_importance(self) -> np.ndarray:
        """Mean decrease in impurity per feature, normalised to sum 1.

        Returns all zeros (with a warning) when no tree contains a split.
        """
        imp = np.zeros(self.n_features)
        for tree in self.trees:
            root_n = _node_size(tree)
            for node in iter_nodes(tree):
                if isinstance(node, Split):
                    imp[node.feature] += node.n_samples / root_n * node.gain
        imp /= self.n_trees
        total = imp.sum()
        if total <= 0:
            warnings.warn("forest has no splits; feature importance left unnormalised (all zero)")
            return imp
        return imp / total

    def to_dict(self) -> dict:
        return {
            "format": FOREST_FORMAT,
            "version": FOREST_VERSION,
            "class_labels": list(self.class_labels),
            "tie_break": self.tie_break,
            "n_features": self.n_features,
            "config": asdict(self.config),
            "trees": [_node_to_dict(t) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        if not isinstance(d, dict) or d.get("format") != FOREST_FORMAT:
            raise ModelParseError("not a forest record")
        if d.get("version") != FOREST_VERSION:
            raise ModelVersionError(f"forest version {d.get('version')!r}, expected {FOREST_VERSION}")
        try:
            config = TrainConfig(**d["config"])
            trees = tuple(_node_from_dict(t) for t in d["trees"])
            forest = cls(trees, tuple(d["class_labels"]), int(d["n_features"]), config, d.get("tie_break"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelParseError(f"malformed forest record: {exc}") from None
        if len(trees) != config.n_trees:
            raise ModelParseError("tree count does not match config")
        return forest

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RandomForest":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelParseError(f"invalid JSON: {exc}") from None
        return cls.from_dict(d)


def _node_size(node: Node) -> int:
    if isinstance(node, Leaf):
        return sum(node.counts)
    return node.n_samples


def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"counts": list(node.counts)}
    return {"feature": node.feature, "threshold": node.threshold, "n": node.n_samples,
            "gain": node.gain, "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(d: dict) -> Node:
    if "counts" in d:
        counts = tuple(int(c) for c in d["counts"])
        if sum(counts) <= 0:
            raise ValueError("leaf with no samples")
        return Leaf(counts)
    return Split(int(d["feature"]), float(d["threshold"]), _node_from_dict(d["left"]),
                 _node_from_dict(d["right"]), int(d["n"]), float(d["gain"]))


def encode_labels(y: Sequence) -> tuple[tuple, np.ndarray]:
    labels = tuple(sorted(set(y)))
    lookup = {lab: i for i, lab in enumerate(labels)}
    return labels, np.array([lookup[v] for v in y], dtype=np.int64)


def train_forest(X, y: Sequence, config: TrainConfig = TrainConfig(), tie_break=None,
                 n_jobs: int = 1) -> RandomForest:
    """Train a bagged forest. ``y`` may hold any sortable labels.

    ``n_jobs`` threads grow trees concurrently; the result does not depend on it.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatchError("X must be (n_samples, n_features) matching y")
    labels, codes = encode_labels(list(y))
    if len(labels) < 2:
        raise SingleClassError(f"training needs at least two classes, got {list(labels)}")
    if tie_break is not None and tie_break not in labels:
        raise ValueError(f"tie_break class {tie_break!r} not among {labels}")
    n = codes.size
    streams = np.random.SeedSequence(config.seed).spawn(config.n_trees)

    def build(ss):
        rng = np.random.default_rng(ss)
        idx = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        return train_tree(X, codes, len(labels), config, rng, idx)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(build, streams))
    else:
        trees = tuple(build(ss) for ss in streams)
    return RandomForest(trees, labels, X.shape[1], config, tie_break)
