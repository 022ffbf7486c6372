"""Two cascaded binary forests: 120fps vs FD, then 60fps vs 30fps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, ModelParseError, ModelVersionError, VfrError
from .features import FEATURE_NAMES, N_FEATURES, FeatureVector
from .forest import RandomForest, TrainConfig, train_forest

MODEL_FORMAT = "vfrate-cascade"
MODEL_VERSION = 1
FEATURE_SET_VERSION = "maps8x4-v1"

C120, CFD = "120fps", "FD"
C60, C30 = "60fps", "30fps"

CLF1_CONFIG = TrainConfig(n_trees=200, max_depth=7)
CLF2_CONFIG = TrainConfig(n_trees=100, max_depth=7)


class FrameRate(IntEnum):
    F30 = 30
    F60 = 60
    F120 = 120

    @property
    def period(self) -> int:
        """Decimation period in source (120 fps) frames."""
        return 120 // int(self)

    @classmethod
    def parse(cls, value) -> "FrameRate":
        try:
            return cls(int(str(value).removesuffix("fps")))
        except ValueError:
            raise ValueError(f"frame rate must be 30, 60 or 120, got {value!r}") from None


@dataclass(frozen=True)
class BinaryDataset:
    """Rows of the source table selected for one classifier, in source order."""

    indices: np.ndarray
    labels: np.ndarray       # binary class names
    source_labels: np.ndarray  # original 30/60/120 labels

    def __len__(self):
        return int(self.indices.size)

    def class_sizes(self) -> dict:
        names, counts = np.unique(self.labels, return_counts=True)
        return dict(zip(names.tolist(), counts.tolist()))


def _sample(rng, idx: np.ndarray, size: int) -> np.ndarray:
    if size >= idx.size:
        return idx
    return np.sort(rng.choice(idx, size=size, replace=False))


def build_training_sets(labels: Sequence[int], seed: int = 0) -> tuple[BinaryDataset, BinaryDataset]:
    """Balanced datasets for the two classifiers.

    ds1: every 120 fps sample against an FD class made of all 30 fps samples
    topped up with randomly chosen 60 fps samples to the same size.
    ds2: every 30 fps sample against an equally sized random 60 fps subset.
    Undersampling is without replacement; selected rows keep source order.
    """
    y = np.array([int(FrameRate.parse(v)) for v in labels], dtype=np.int64)
    idx30, idx60, idx120 = (np.nonzero(y == r)[0] for r in (30, 60, 120))
    missing = [r for r, ix in zip((30, 60, 120), (idx30, idx60, idx120)) if ix.size == 0]
    if missing:
        raise VfrError(f"labelled samples lack class(es) {missing}")
    rng = np.random.default_rng(seed)

    target = min(idx120.size, idx30.size + idx60.size)
    keep120 = _sample(rng, idx120, target)
    if idx30.size >= target:
        fd = _sample(rng, idx30, target)
    else:
        fd = np.concatenate([idx30, _sample(rng, idx60, target - idx30.size)])
    rows1 = np.sort(np.concatenate([keep120, fd]))
    ds1 = BinaryDataset(rows1, np.where(y[rows1] == 120, C120, CFD), y[rows1])

    target = min(idx30.size, idx60.size)
    rows2 = np.sort(np.concatenate([_sample(rng, idx30, target), _sample(rng, idx60, target)]))
    ds2 = BinaryDataset(rows2, np.where(y[rows2] == 30, C30, C60), y[rows2])
    return ds1, ds2


@dataclass(frozen=True)
class CascadeModel:
    clf1: RandomForest
    features1: tuple
    clf2: RandomForest
    features2: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for feats in (self.features1, self.features2):
            if not feats or any(not 0 <= f < N_FEATURES for f in feats):
                raise ValueError("feature subsets must index the 32 canonical features")

    def predict_chunk(self, fv) -> FrameRate:
        x = fv.values if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=np.float64)
        if x.shape != (N_FEATURES,):
            raise DimensionMismatchError(f"expected a {N_FEATURES}-value vector, got shape {x.shape}")
        label, _ = self.clf1.predict(x[list(self.features1)])
        if label == C120:
            return FrameRate.F120
        label, _ = self.clf2.predict(x[list(self.features2)])
        return FrameRate.F60 if label == C60 else FrameRate.F30

    def predict_many(self, X) -> list[FrameRate]:
        """Batch prediction; clf2 only sees rows that clf1 sent to FD."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != N_FEATURES:
            raise DimensionMismatchError(f"expected {N_FEATURES} features, got {X.shape[1]}")
        out = [FrameRate.F120] * X.shape[0]
        if X.shape[0] == 0:
            return out
        first = self.clf1.predict_many(X[:, list(self.features1)])
        fd_rows = [i for i, lab in enumerate(first) if lab != C120]
        if fd_rows:
            second = self.clf2.predict_many(X[np.ix_(fd_rows, list(self.features2))])
            for i, lab in zip(fd_rows, second):
                out[i] = FrameRate.F60 if lab == C60 else FrameRate.F30
        return out

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "feature_names": list(FEATURE_NAMES),
            "metadata": self.metadata,
            "clf1": {"features": list(self.features1), "forest": self.clf1.to_dict()},
            "clf2": {"features": list(self.features2), "forest": self.clf2.to_dict()},
        }

    @classmethod
    def from_dict(cls, d) -> "CascadeModel":
        if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
            raise ModelParseError("not a cascade model file")
        if d.get("version") != MODEL_VERSION:
            raise ModelVersionError(f"model version {d.get('version')!r}, expected {MODEL_VERSION}")
        if d.get("feature_names") != list(FEATURE_NAMES):
            raise ModelParseError("model was trained on a different feature set")
        try:
            return cls(RandomForest.from_dict(d["clf1"]["forest"]), tuple(int(f) for f in d["clf1"]["features"]),
                       RandomForest.from_dict(d["clf2"]["forest"]), tuple(int(f) for f in d["clf2"]["features"]),
                       dict(d.get("metadata", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelParseError(f"malformed model file: {exc}") from None


def train_cascade(X, labels: Sequence[int], seed: int = 0,
                  features1: Optional[Sequence[int]] = None, features2: Optional[Sequence[int]] = None,
                  config1: TrainConfig = CLF1_CONFIG, config2: TrainConfig = CLF2_CONFIG,
                  n_jobs: int = 1) -> CascadeModel:
    """Build balanced datasets from 30/60/120 labels and train both forests."""
    X = np.asarray(X, dtype=np.float64)
    features1 = tuple(range(N_FEATURES)) if features1 is None else tuple(int(f) for f in features1)
    features2 = tuple(range(N_FEATURES)) if features2 is None else tuple(int(f) for f in features2)
    ds1, ds2 = build_training_sets(labels, seed)
    clf1 = train_forest(X[np.ix_(ds1.indices, features1)], ds1.labels.tolist(),
                        replace(config1, seed=seed), tie_break=C120, n_jobs=n_jobs)
    clf2 = train_forest(X[np.ix_(ds2.indices, features2)], ds2.labels.tolist(),
                        replace(config2, seed=seed), tie_break=C60, n_jobs=n_jobs)
    meta = {"seed": seed, "feature_set_version": FEATURE_SET_VERSION}
    return CascadeModel(clf1, features1, clf2, features2, meta)


def dumps_model(model: CascadeModel) -> str:
    return json.dumps(model.to_dict(), indent=1, sort_keys=True) + "\n"


def save_model(model: CascadeModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> CascadeModel:
    with open(path) as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: invalid JSON: {exc}") from None
    return CascadeModel.from_dict(d)
