"""Classifier evaluation, cross-validation and feature selection."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i, j] = samples of true class labels[i] predicted as labels[j]."""

    labels: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if counts.shape != (n, n):
            raise ValueError(f"counts must be {n}x{n}")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_predictions(cls, y_true: Sequence, y_pred: Sequence, labels: Optional[Sequence] = None):
        if len(y_true) != len(y_pred):
            raise ValueError("y_true and y_pred differ in length")
        if labels is None:
            labels = sorted(set(y_true) | set(y_pred))
        pos = {lab: i for i, lab in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for t, p in zip(y_true, y_pred):
            counts[pos[t], pos[p]] += 1
        return cls(tuple(labels), counts)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.labels != other.labels:
            raise ValueError("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.labels, self.counts + other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def index(self, label) -> int:
        return self.labels.index(label)

    def tp(self, label) -> int:
        i = self.index(label)
        return int(self.counts[i, i])

    def fp(self, label) -> int:
        i = self.index(label)
        return int(self.counts[:, i].sum() - self.counts[i, i])

    def fn(self, label) -> int:
        i = self.index(label)
        return int(self.counts[i, :].sum() - self.counts[i, i])

    def tn(self, label) -> int:
        return self.total - self.tp(label) - self.fp(label) - self.fn(label)

    def precision(self, label) -> float:
        d = self.tp(label) + self.fp(label)
        return self.tp(label) / d if d else 0.0

    def recall(self, label) -> float:
        d = self.tp(label) + self.fn(label)
        return self.tp(label) / d if d else 0.0

    def normalized(self) -> np.ndarray:
        """Row-normalised rates; rows with no samples stay zero."""
        rows = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        return np.divide(self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)


def macro_metrics(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Macro-averaged (precision, recall, F1); F1 is the mean of per-class F1."""
    if not cm.labels:
        raise ValueError("empty confusion matrix")
    ps, rs, fs = [], [], []
    for lab in cm.labels:
        p, r = cm.precision(lab), cm.recall(lab)
        ps.append(p)
        rs.append(r)
        fs.append(2 * p * r / (p + r) if p + r > 0 else 0.0)
    return float(np.mean(ps)), float(np.mean(rs)), float(np.mean(fs))


def m_crit(cm: ConfusionMatrix, low=None, high=None) -> float:
    """Mean of the lower-rate class precision and the higher-rate class recall.

    Penalises predicting the lower frame rate when the higher one was needed.
    ``low``/``high`` default to labels[0]/labels[1].
    """
    if len(cm.labels) != 2:
        raise ValueError("m_crit is defined for binary confusion matrices only")
    low = cm.labels[0] if low is None else low
    high = cm.labels[1] if high is None else high
    if {low, high} != set(cm.labels):
        raise ValueError(f"classes {low!r}, {high!r} do not match {cm.labels}")
    return 0.5 * (cm.precision(low) + cm.recall(high))


def score_weighted(f1: float, mcrit: float, weights: tuple[float, float] = (0.5, 0.5)) -> float:
    w1, w2 = weights
    if w1 < 0 or w2 < 0 or w1 + w2 <= 0:
        raise ValueError("weights must be non-negative and not both zero")
    return (w1 * f1 + w2 * mcrit) / (w1 + w2)


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    m_crit: Optional[float]
    confusion: ConfusionMatrix

    def score(self, weights=(0.5, 0.5)) -> float:
        if self.m_crit is None:
            return self.f1
        return score_weighted(self.f1, self.m_crit, weights)


def evaluate(cm: ConfusionMatrix, low=None, high=None) -> EvalReport:
    """Full report; m_crit is filled for binary matrices only."""
    p, r, f = macro_metrics(cm)
    mc = m_crit(cm, low, high) if len(cm.labels) == 2 else None
    return EvalReport(p, r, f, mc, cm)


def fold_slices(n: int, k: int, boundaries: Optional[Sequence[int]] = None) -> list[slice]:
    """Contiguous folds whose sizes differ by at most one.

    With ``boundaries`` (start rows of sequences), each cut is moved to the
    nearest sequence start so no sequence straddles two folds; duplicate cuts
    collapse, which can leave fewer than k folds.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    cuts = [i * (n // k) + min(i, n % k) for i in range(k + 1)]
    if boundaries is not None:
        starts = np.unique(np.concatenate([[0, n], np.asarray(boundaries, dtype=np.int64)]))
        cuts = sorted({int(starts[np.argmin(np.abs(starts - c))]) for c in cuts})
    return [slice(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


@dataclass
class CVResult:
    folds: list
    pooled: EvalReport
    predictions: list = field(repr=False)


def kfold_cv(X, y: Sequence, trainer: Callable, k: int = 10,
             scorer: Callable[[ConfusionMatrix], EvalReport] = evaluate,
             labels: Optional[Sequence] = None, boundaries: Optional[Sequence[int]] = None) -> CVResult:
    """Non-shuffled k-fold cross-validation.

    ``trainer(X_train, y_train)`` must return an object with ``predict_many``.
    Every sample is validated exactly once; errors raised by the trainer on a
    fold propagate unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = list(y)
    labels = tuple(sorted(set(y))) if labels is None else tuple(labels)
    predictions = [None] * len(y)
    reports = []
    for sl in fold_slices(len(y), k, boundaries):
        train = np.r_[0:sl.start, sl.stop:len(y)]
        model = trainer(X[train], [y[i] for i in train])
        pred = model.predict_many(X[sl])
        predictions[sl] = pred
        reports.append(scorer(ConfusionMatrix.from_predictions(y[sl], pred, labels)))
    pooled = scorer(ConfusionMatrix.from_predictions(y, predictions, labels))
    return CVResult(reports, pooled, predictions)


@dataclass(frozen=True)
class RFEStep:
    dimension: int
    score: float
    features: tuple
    importances: tuple


@dataclass
class RFEResult:
    best_features: tuple
    best_score: float
    curve: list

    def scores(self) -> list[tuple[int, float]]:
        return [(s.dimension, s.score) for s in self.curve]


def rfe(X, y: Sequence, features: Sequence[int], trainer: Callable,
        score: Callable[[ConfusionMatrix], float], k: int = 10, min_dim: int = 2,
        boundaries: Optional[Sequence[int]] = None) -> RFEResult:
    """Recursive feature elimination driven by cross-validated scores.

    At each dimension the current set is scored by ``kfold_cv``; a model
    trained on all rows then supplies ``feature_importance()`` and the least
    important feature is dropped (ties: the later-listed feature goes first).
    The best-scoring set wins, smaller sets winning ties.
    """
    X = np.asarray(X, dtype=np.float64)
    current = [int(f) for f in features]
    if len(current) < min_dim or min_dim < 1:
        raise ValueError(f"need at least min_dim={min_dim} initial features")
    labels = tuple(sorted(set(y)))
    curve = []
    while True:
        sub = X[:, current]
        cv = kfold_cv(sub, y, trainer, k, scorer=evaluate, labels=labels, boundaries=boundaries)
        s = float(score(cv.pooled.confusion))
        model = trainer(sub, list(y))
        imp = np.asarray(model.feature_importance(), dtype=np.float64)
        curve.append(RFEStep(len(current), s, tuple(current), tuple(imp.tolist())))
        if len(current) == min_dim:
            break
        # lowest importance; among equals the last position
        drop = max(range(len(current)), key=lambda i: (-imp[i], i))
        del current[drop]
    best = max(curve, key=lambda st: (st.score, -st.dimension))
    return RFEResult(best.features, best.score, curve)


@dataclass(frozen=True)
class GridPoint:
    n_trees: int
    max_depth: int
    score: float


def grid_search(X, y: Sequence, make_trainer: Callable[[int, int], Callable],
                score: Callable[[ConfusionMatrix], float],
                n_trees_grid: Sequence[int], depth_grid: Sequence[int], k: int = 10,
                boundaries: Optional[Sequence[int]] = None) -> tuple[GridPoint, list]:
    """Plain grid over (n_trees, max_depth); ties favour the smaller model."""
    labels = tuple(sorted(set(y)))
    points = []
    for n_trees, depth in itertools.product(n_trees_grid, depth_grid):
        cv = kfold_cv(X, y, make_trainer(n_trees, depth), k, scorer=evaluate, labels=labels,
                      boundaries=boundaries)
        points.append(GridPoint(n_trees, depth, float(score(cv.pooled.confusion))))
    best = max(points, key=lambda p: (p.score, -p.n_trees, -p.max_depth))
    return best, points


def write_confusion_csv(path, cm: ConfusionMatrix) -> None:
    """Raw counts followed by row-normalised percentages."""
    rates = cm.normalized()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "true", *cm.labels])
        for i, lab in enumerate(cm.labels):
            w.writerow(["count", lab, *cm.counts[i].tolist()])
        for i, lab in enumerate(cm.labels):
            w.writerow(["percent", lab, *(f"{100 * r:.2f}" for r in rates[i])])


def write_report_csv(path, reports: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "precision", "recall", "f1", "m_crit", "n_samples"])
        for name, r in reports.items():
            w.writerow([name, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f1:.6f}",
                        "" if r.m_crit is None else f"{r.m_crit:.6f}", r.confusion.total])


def write_curve_csv(path, result: RFEResult, feature_names: Optional[Sequence[str]] = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dimension", "score", "features"])
        for st in result.curve:
            names = [feature_names[f] for f in st.features] if feature_names else [str(f) for f in st.features]
            w.writerow([st.dimension, f"{st.score:.6f}", " ".join(names)])
