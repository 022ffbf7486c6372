"""Frame-rate decision timelines and the decimation/upsampling they drive."""

from __future__ import annotations

import csv
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .cascade import FrameRate
from .errors import DataFormatError, DimensionMismatchError
from .features import FeatureConfig, extract_chunk_features
from .video_io import CHUNK_SIZE, Frame, chunk_frames

log = logging.getLogger(__name__)

SOURCE_FPS = 120
TIMELINE_MAGIC = "# vfrate-timeline v1"

BITRATE_NOTE = ("frames dropped is not bit-rate saving: dropped frames sit in the upper temporal "
                "layers, which are the cheapest to code")


@dataclass(frozen=True)
class DecisionTimeline:
    rates: tuple
    n_frames: int

    def __post_init__(self):
        rates = tuple(FrameRate.parse(r) if not isinstance(r, FrameRate) else r for r in self.rates)
        object.__setattr__(self, "rates", rates)
        n = len(rates)
        if not CHUNK_SIZE * n <= self.n_frames < CHUNK_SIZE * n + CHUNK_SIZE:
            raise DimensionMismatchError(
                f"{n} chunks are inconsistent with a {self.n_frames}-frame source")

    @classmethod
    def uniform(cls, rate, n_frames: int) -> "DecisionTimeline":
        return cls((FrameRate.parse(rate),) * (n_frames // CHUNK_SIZE), n_frames)

    @property
    def entries(self) -> list[tuple[int, FrameRate]]:
        return list(enumerate(self.rates))

    @property
    def tail_length(self) -> int:
        return self.n_frames - CHUNK_SIZE * len(self.rates)

    def kept_indices(self) -> list[int]:
        kept = []
        for i, rate in enumerate(self.rates):
            start = CHUNK_SIZE * i
            kept.extend(range(start, start + CHUNK_SIZE, rate.period))
        kept.extend(range(CHUNK_SIZE * len(self.rates), self.n_frames))
        return kept

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"{TIMELINE_MAGIC} frames={self.n_frames} source_fps={SOURCE_FPS}\n")
            w = csv.writer(fh)
            w.writerow(["chunk_index", "start_frame", "fps"])
            for i, rate in enumerate(self.rates):
                w.writerow([i, CHUNK_SIZE * i, int(rate)])

    @classmethod
    def read_csv(cls, path) -> "DecisionTimeline":
        with open(path, newline="") as fh:
            first = fh.readline().strip()
            if not first.startswith(TIMELINE_MAGIC):
                raise DataFormatError(f"{path}: missing timeline header")
            try:
                meta = dict(tok.split("=", 1) for tok in first[len(TIMELINE_MAGIC):].split())
                n_frames = int(meta["frames"])
            except (ValueError, KeyError):
                raise DataFormatError(f"{path}: malformed timeline header") from None
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["chunk_index", "start_frame", "fps"]:
            raise DataFormatError(f"{path}: unexpected timeline columns")
        rates = []
        for lineno, row in enumerate(rows[1:], start=3):
            try:
                idx, start, fps = (int(v) for v in row)
                rate = FrameRate.parse(fps)
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            if idx != len(rates) or start != CHUNK_SIZE * idx:
                raise DataFormatError(f"{path}:{lineno}: chunk rows must be contiguous from 0")
            rates.append(rate)
        try:
            return cls(tuple(rates), n_frames)
        except DimensionMismatchError as exc:
            raise DataFormatError(f"{path}: {exc}") from None


def decide_sequence(frames: Sequence[Frame], model, config: FeatureConfig = FeatureConfig(),
                    timings: Optional[list] = None) -> DecisionTimeline:
    """Classify every full chunk; trailing frames pass through at 120 fps.

    If ``timings`` is a list, per-chunk (feature_seconds, predict_seconds)
    pairs are appended to it.
    """
    chunks, _ = chunk_frames(frames)
    rates = []
    for chunk in chunks:
        t0 = time.perf_counter()
        fv = extract_chunk_features(chunk, config)
        t1 = time.perf_counter()
        rates.append(model.predict_chunk(fv))
        t2 = time.perf_counter()
        log.debug("chunk %d: features %.2f ms, predict %.2f ms -> %s",
                  chunk.index, 1e3 * (t1 - t0), 1e3 * (t2 - t1), rates[-1].name)
        if timings is not None:
            timings.append((t1 - t0, t2 - t1))
    return DecisionTimeline(tuple(rates), len(frames))


def decimate(frames: Sequence[Frame], timeline: DecisionTimeline) -> tuple[list[Frame], list[int]]:
    """Keep the first frame of each decimation period; tail frames are kept."""
    if len(frames) != timeline.n_frames:
        raise DimensionMismatchError(f"timeline covers {timeline.n_frames} frames, video has {len(frames)}")
    kept = timeline.kept_indices()
    return [frames[i] for i in kept], kept


def duplicate_upsample(kept: Sequence[Frame], timeline: DecisionTimeline) -> list[Frame]:
    """Repeat each kept frame over its decimation period to restore 120 fps."""
    expected = len(timeline.kept_indices())
    if len(kept) != expected:
        raise DimensionMismatchError(f"timeline expects {expected} kept frames, got {len(kept)}")
    out = []
    pos = 0
    for rate in timeline.rates:
        for _ in range(CHUNK_SIZE // rate.period):
            out.extend([kept[pos]] * rate.period)
            pos += 1
    out.extend(kept[pos:])
    return out


@dataclass(frozen=True)
class GopPlan:
    """Hierarchical-B GOP with dyadic temporal layers.

    For gop_size 16: POC % 16 == 0 is TL0, POC % 8 == 0 TL1, POC % 4 == 0 TL2,
    POC % 2 == 0 TL3 and odd POCs TL4.
    """

    gop_size: int = 16
    intra_period: int = 112

    def __post_init__(self):
        if self.gop_size < 4 or self.gop_size & (self.gop_size - 1):
            raise ValueError("gop_size must be a power of two >= 4")
        if self.intra_period <= 0 or self.intra_period % self.gop_size:
            raise ValueError("intra_period must be a positive multiple of gop_size")

    @property
    def top_layer(self) -> int:
        return self.gop_size.bit_length() - 1

    def temporal_layer(self, poc: int) -> int:
        r = poc % self.gop_size
        if r == 0:
            return 0
        return self.top_layer - ((r & -r).bit_length() - 1)

    def references(self, poc: int) -> tuple:
        """POCs this picture predicts from (nearest lower-layer neighbours)."""
        if poc % self.intra_period == 0:
            return ()
        r = poc % self.gop_size
        if r == 0:
            return (poc - self.gop_size,)
        step = r & -r
        return (poc - step, poc + step)


@dataclass
class GopSkipReport:
    kept_pocs: list
    dropped_pocs: list
    illegal: list = field(default_factory=list)

    @property
    def legal(self) -> bool:
        return not self.illegal


def gop_skip_plan(timeline: DecisionTimeline, plan: GopPlan = GopPlan(),
                  extra_drops: Iterable[int] = ()) -> GopSkipReport:
    """Map chunk decisions to skipped POCs and check coding dependencies.

    A drop is illegal if its temporal layer is not removable at the chunk's
    rate, or if a kept picture references it. ``extra_drops`` injects
    additional skipped POCs (used to exercise the checker).
    """
    n = timeline.n_frames
    kept = set(timeline.kept_indices())
    for poc in extra_drops:
        kept.discard(int(poc))
    dropped = sorted(set(range(n)) - kept)
    illegal = []
    for poc in dropped:
        chunk = poc // CHUNK_SIZE
        rate = timeline.rates[chunk] if chunk < len(timeline.rates) else FrameRate.F120
        tl = plan.temporal_layer(poc)
        # period p removes the layers whose POCs are not multiples of p
        min_droppable = plan.top_layer - (rate.period.bit_length() - 1) + 1
        if rate.period == 1 or tl < min_droppable:
            illegal.append((poc, f"TL{tl} is not removable at {int(rate)} fps"))
    for poc in sorted(kept):
        for ref in plan.references(poc):
            if 0 <= ref < n and ref not in kept:
                illegal.append((ref, f"referenced by kept POC {poc}"))
    return GopSkipReport(sorted(kept), dropped, illegal)


@dataclass(frozen=True)
class DropReport:
    dropped_frames: int
    total_frames: int
    histogram: dict
    note: str = BITRATE_NOTE

    @property
    def fraction(self) -> float:
        return self.dropped_frames / self.total_frames if self.total_frames else 0.0

    @property
    def percent(self) -> float:
        return 100.0 * self.fraction

    def summary(self) -> str:
        hist = ", ".join(f"{fps}fps={self.histogram.get(fps, 0)}" for fps in (30, 60, 120))
        return f"frames dropped: {self.percent:.1f}% ({self.dropped_frames}/{self.total_frames}); chunks: {hist}"


def frames_dropped_report(timeline: DecisionTimeline) -> DropReport:
    dropped = sum(CHUNK_SIZE - CHUNK_SIZE // r.period for r in timeline.rates)
    counts = Counter(int(r) for r in timeline.rates)
    return DropReport(dropped, timeline.n_frames, {fps: counts.get(fps, 0) for fps in (30, 60, 120)})


def write_report_csv(path, report: DropReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["total_frames", "dropped_frames", "dropped_percent", "chunks_30", "chunks_60", "chunks_120"])
        w.writerow([report.total_frames, report.dropped_frames, f"{report.percent:.2f}",
                    report.histogram[30], report.histogram[60], report.histogram[120]])


def plot_timeline(timeline: DecisionTimeline, path, title: str = "") -> None:
    """Staircase of decisions over time, saved as SVG (or any matplotlib format)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    times = [CHUNK_SIZE * i / SOURCE_FPS for i in range(len(timeline.rates) + 1)]
    values = [int(r) for r in timeline.rates]
    fig, ax = plt.subplots(figsize=(8, 2.5))
    if values:
        ax.step(times, values + values[-1:], where="post")
    ax.set_yticks([30, 60, 120])
    ax.set_ylim(20, 130)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("fps")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
