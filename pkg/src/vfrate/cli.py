"""Command-line front end.

Every subcommand reads a JSON run configuration (``--config``) whose values
can be overridden by flags. Errors are reported on stderr as a single
``error: <ErrorClass>: <message>`` line with exit codes 2 (usage),
3 (data format) or 4 (model version).
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import cascade, features, pipeline, selection, stats
from .errors import DataFormatError, VfrError
from .forest import TrainConfig, train_forest
from .video_io import read_yuv, write_yuv

log = logging.getLogger("vfrate")

EXIT_USAGE, EXIT_FORMAT, EXIT_VERSION = 2, 3, 4
REFERENCE_RUNTIME_MS = 7.2


class UsageError(VfrError, ValueError):
    exit_code = EXIT_USAGE


@dataclass(frozen=True)
class RunConfig:
    width: Optional[int] = None
    height: Optional[int] = None
    threshold: float = features.DEFAULT_THRESHOLD
    block_size: int = features.DEFAULT_BLOCK_SIZE
    search_range: int = features.DEFAULT_SEARCH_RANGE
    search: str = "full"
    seed: int = 0
    trees1: int = 200
    depth1: int = 7
    trees2: int = 100
    depth2: int = 7
    folds: int = 10
    min_dim: int = 2
    score_weights: tuple = (0.5, 0.5)
    align_folds: bool = False
    n_jobs: int = 1

    def validate(self) -> "RunConfig":
        try:
            self.feature_config()
            self.forest_configs()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if (self.width is None) != (self.height is None):
            raise UsageError("width and height must be given together")
        if self.width is not None and (self.width <= 0 or self.height <= 0 or self.width % 2 or self.height % 2):
            raise UsageError("width and height must be even and positive")
        if self.folds < 2 or self.min_dim < 1 or self.n_jobs < 1:
            raise UsageError("folds must be >= 2, min_dim and n_jobs >= 1")
        if len(self.score_weights) != 2 or min(self.score_weights) < 0 or sum(self.score_weights) <= 0:
            raise UsageError("score_weights must be two non-negative numbers")
        return self

    def feature_config(self) -> features.FeatureConfig:
        return features.FeatureConfig(self.threshold, self.block_size, self.search_range, self.search)

    def forest_configs(self) -> tuple[TrainConfig, TrainConfig]:
        return (TrainConfig(self.trees1, self.depth1, seed=self.seed),
                TrainConfig(self.trees2, self.depth2, seed=self.seed))

    def geometry(self) -> tuple[int, int]:
        if self.width is None:
            raise UsageError("video geometry required: pass --width/--height or set them in the config")
        return self.width, self.height

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def load(cls, path: Optional[str], overrides: dict) -> "RunConfig":
        data = {}
        if path:
            try:
                data = json.loads(Path(path).read_text())
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: invalid JSON config: {exc}") from None
            if not isinstance(data, dict):
                raise DataFormatError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if k in known and v is not None})
        if "score_weights" in data:
            data["score_weights"] = tuple(data["score_weights"])
        return cls(**data).validate()


def _load_labelled(paths):
    """Concatenate feature CSVs in order; returns X, labels and file start rows."""
    Xs, ys, starts, n = [], [], [], 0
    for p in paths:
        _, X, y = features.read_feature_csv(p)
        if y is None:
            raise DataFormatError(f"{p}: training features need a label column")
        starts.append(n)
        n += len(y)
        Xs.append(X)
        ys.append(y)
    if n == 0:
        raise DataFormatError("no labelled samples")
    return np.vstack(Xs), np.concatenate(ys).tolist(), starts


def _forest_trainer(config: TrainConfig, tie_break, n_jobs: int):
    def trainer(X, y):
        return train_forest(X, y, config, tie_break=tie_break, n_jobs=n_jobs)
    return trainer


def _binary_tasks(X, labels, cfg: RunConfig):
    """(name, dataset, train config, tie-break class, (low, high)) for both classifiers."""
    ds1, ds2 = cascade.build_training_sets(labels, cfg.seed)
    c1, c2 = cfg.forest_configs()
    return [("clf1", ds1, c1, cascade.C120, (cascade.CFD, cascade.C120)),
            ("clf2", ds2, c2, cascade.C60, (cascade.C30, cascade.C60))]


def _sub_boundaries(starts, rows):
    """Map source file starts onto positions within a selected row subset."""
    return sorted({int(np.searchsorted(rows, s)) for s in starts})


def cmd_extract(args, cfg: RunConfig) -> int:
    w, h = cfg.geometry()
    frames = read_yuv(args.video, w, h)
    vectors = features.extract_features(frames, cfg.feature_config())
    labels = [args.label] * len(vectors) if args.label else None
    features.write_feature_csv(args.output, vectors, labels)
    print(f"{len(vectors)} chunks -> {args.output}")
    return 0


def _load_feature_sets(path):
    if not path:
        return None, None
    try:
        sel = json.loads(Path(path).read_text())
        return tuple(features.FEATURE_NAMES.index(n) for n in sel["clf1"]), \
            tuple(features.FEATURE_NAMES.index(n) for n in sel["clf2"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: bad feature selection file: {exc}") from None


def cmd_train(args, cfg: RunConfig) -> int:
    X, labels, starts = _load_labelled(args.features)
    f1, f2 = _load_feature_sets(args.feature_sets)
    c1, c2 = cfg.forest_configs()
    model = cascade.train_cascade(X, labels, cfg.seed, f1, f2, c1, c2, n_jobs=cfg.n_jobs)
    model.metadata["run_config"] = json.loads(cfg.to_json())
    cascade.save_model(model, args.output)
    print(f"model -> {args.output}")
    if args.cv_report:
        reports = {}
        subsets = {"clf1": model.features1, "clf2": model.features2}
        for name, ds, conf, tie, (low, high) in _binary_tasks(X, labels, cfg):
            sub = X[np.ix_(ds.indices, subsets[name])]
            bounds = _sub_boundaries(starts, ds.indices) if cfg.align_folds else None
            cv = selection.kfold_cv(sub, ds.labels.tolist(), _forest_trainer(conf, tie, cfg.n_jobs), cfg.folds,
                                    scorer=lambda cm, lo=low, hi=high: selection.evaluate(cm, lo, hi),
                                    boundaries=bounds)
            reports[name] = cv.pooled
            selection.write_confusion_csv(f"{args.cv_report}.{name}.confusion.csv", cv.pooled.confusion)
        selection.write_report_csv(args.cv_report, reports)
        print(f"cross-validation report -> {args.cv_report}")
    return 0


def cmd_select_features(args, cfg: RunConfig) -> int:
    X, labels, starts = _load_labelled(args.features)
    chosen = {}
    for name, ds, conf, tie, (low, high) in _binary_tasks(X, labels, cfg):
        def score(cm, lo=low, hi=high):
            _, _, f1 = selection.macro_metrics(cm)
            return selection.score_weighted(f1, selection.m_crit(cm, lo, hi), cfg.score_weights)
        bounds = _sub_boundaries(starts, ds.indices) if cfg.align_folds else None
        result = selection.rfe(X[ds.indices], ds.labels.tolist(), range(features.N_FEATURES),
                               _forest_trainer(conf, tie, cfg.n_jobs), score, cfg.folds, cfg.min_dim, bounds)
        selection.write_curve_csv(f"{args.output}.{name}.curve.csv", result, features.FEATURE_NAMES)
        chosen[name] = [features.FEATURE_NAMES[f] for f in result.best_features]
        print(f"{name}: {len(result.best_features)} features, score {result.best_score:.4f}")
    Path(args.output).write_text(json.dumps(chosen, indent=1) + "\n")
    print(f"feature sets -> {args.output}")
    return 0


def cmd_predict(args, cfg: RunConfig) -> int:
    w, h = cfg.geometry()
    model = cascade.load_model(args.model)
    frames = read_yuv(args.video, w, h)
    timings = []
    timeline = pipeline.decide_sequence(frames, model, cfg.feature_config(), timings)
    timeline.write_csv(args.output)
    if timings:
        feat_ms = 1e3 * statistics.mean(t[0] for t in timings)
        pred_ms = 1e3 * statistics.mean(t[1] for t in timings)
        log.info("per-chunk latency: features %.2f ms + predict %.2f ms = %.2f ms (reference %.1f ms)",
                 feat_ms, pred_ms, feat_ms + pred_ms, REFERENCE_RUNTIME_MS)
    if args.plot:
        pipeline.plot_timeline(timeline, args.plot, Path(args.video).name)
    print(f"{len(timeline.rates)} decisions -> {args.output}")
    return 0


def cmd_decimate(args, cfg: RunConfig) -> int:
    w, h = cfg.geometry()
    frames = read_yuv(args.video, w, h)
    timeline = pipeline.DecisionTimeline.read_csv(args.timeline)
    kept, _ = pipeline.decimate(frames, timeline)
    write_yuv(args.output, kept)
    sidecar = args.output + ".timeline.csv"
    timeline.write_csv(sidecar)
    print(f"kept {len(kept)}/{len(frames)} frames -> {args.output} (sidecar {sidecar})")
    return 0


def cmd_upsample(args, cfg: RunConfig) -> int:
    w, h = cfg.geometry()
    kept = read_yuv(args.video, w, h)
    timeline = pipeline.DecisionTimeline.read_csv(args.timeline)
    frames = pipeline.duplicate_upsample(kept, timeline)
    write_yuv(args.output, frames)
    print(f"{len(frames)} frames -> {args.output}")
    return 0


def _read_labels(path) -> list[int]:
    with open(path) as fh:
        first = fh.readline()
    if first.startswith(pipeline.TIMELINE_MAGIC):
        return [int(r) for r in pipeline.DecisionTimeline.read_csv(path).rates]
    _, _, y = features.read_feature_csv(path)
    if y is None:
        raise DataFormatError(f"{path}: no label column")
    return y.tolist()


def cmd_evaluate(args, cfg: RunConfig) -> int:
    pred = _read_labels(args.predictions)
    truth = _read_labels(args.truth)
    if len(pred) != len(truth):
        raise DataFormatError(f"{len(pred)} predictions vs {len(truth)} ground-truth labels")
    cm = selection.ConfusionMatrix.from_predictions(truth, pred, (30, 60, 120))
    report = selection.evaluate(cm)
    critical = sum(p < t for p, t in zip(pred, truth))
    selection.write_confusion_csv(args.output + ".confusion.csv", cm)
    selection.write_report_csv(args.output + ".metrics.csv", {"cascade": report})
    print(f"precision {report.precision:.4f} recall {report.recall:.4f} f1 {report.f1:.4f} "
          f"critical errors {critical}/{len(truth)}")
    return 0


def cmd_report(args, cfg: RunConfig) -> int:
    timeline = pipeline.DecisionTimeline.read_csv(args.timeline)
    report = pipeline.frames_dropped_report(timeline)
    if args.output:
        pipeline.write_report_csv(args.output, report)
    print(f"{report.percent:.1f}%")
    print(report.summary())
    print(f"note: {report.note}")
    return 0


def cmd_stats(args, cfg: RunConfig) -> int:
    table = stats.ScoreTable.read_csv(args.scores)
    dm, pv = [], []
    for seq in table.sequences:
        dm.extend(stats.dmos(table, seq, f) for f in stats.CONDITIONS)
        pv.append(stats.pairwise_table(table, seq))
    stats.write_dmos_csv(args.output + ".dmos.csv", dm)
    stats.write_pvalue_csv(args.output + ".pvalues.csv", pv)
    print(f"{len(table.sequences)} sequences -> {args.output}.dmos.csv, {args.output}.pvalues.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--width", type=int)
    common.add_argument("--height", type=int)
    common.add_argument("--threshold", type=float)
    common.add_argument("--block-size", type=int, dest="block_size")
    common.add_argument("--search-range", type=int, dest="search_range")
    common.add_argument("--search", choices=("full", "diamond"))
    common.add_argument("--jobs", type=int, dest="n_jobs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="vfrate", description="Quality-driven variable frame-rate for 120 fps video.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract", parents=[common], help="chunk features of a raw YUV video")
    s.add_argument("video")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--label", type=int, choices=(30, 60, 120), help="label every chunk (training data)")
    s.set_defaults(func=cmd_extract)

    forest_flags = argparse.ArgumentParser(add_help=False)
    forest_flags.add_argument("--trees1", type=int)
    forest_flags.add_argument("--depth1", type=int)
    forest_flags.add_argument("--trees2", type=int)
    forest_flags.add_argument("--depth2", type=int)
    forest_flags.add_argument("--folds", type=int)
    forest_flags.add_argument("--align-folds", action="store_true", default=None, dest="align_folds",
                              help="snap CV folds to input-file boundaries")

    s = sub.add_parser("train", parents=[common, forest_flags], help="train the cascade from labelled features")
    s.add_argument("features", nargs="+")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--feature-sets", help="JSON from select-features")
    s.add_argument("--cv-report", help="write cross-validation metrics CSV here")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("select-features", parents=[common, forest_flags], help="recursive feature elimination")
    s.add_argument("features", nargs="+")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--min-dim", type=int, dest="min_dim")
    s.set_defaults(func=cmd_select_features)

    s = sub.add_parser("predict", parents=[common], help="frame-rate decision per chunk")
    s.add_argument("video")
    s.add_argument("--model", required=True)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--plot", help="SVG staircase of decisions")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("decimate", parents=[common], help="drop frames according to a timeline")
    s.add_argument("video")
    s.add_argument("--timeline", required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_decimate)

    s = sub.add_parser("upsample", parents=[common], help="duplicate frames back to 120 fps")
    s.add_argument("video")
    s.add_argument("--timeline", required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_upsample)

    s = sub.add_parser("evaluate", parents=[common], help="confusion matrix of predictions vs ground truth")
    s.add_argument("predictions", help="timeline CSV")
    s.add_argument("truth", help="timeline CSV or labelled feature CSV")
    s.add_argument("-o", "--output", required=True, help="output prefix")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", parents=[common], help="frames-dropped report")
    s.add_argument("timeline")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("stats", parents=[common], help="DMOS and Welch p-value tables")
    s.add_argument("scores")
    s.add_argument("-o", "--output", required=True, help="output prefix")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = RunConfig.load(args.config, vars(args))
        t0 = time.perf_counter()
        code = args.func(args, cfg)
        log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
        return code
    except VfrError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        code = EXIT_FORMAT if isinstance(exc, OSError) else EXIT_USAGE
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
