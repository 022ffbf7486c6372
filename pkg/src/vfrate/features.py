"""Per-chunk spatio-temporal features.

Eight maps are computed for each frame of a chunk::

    NormMV, HorMV, VerMV   block motion vector norm and |dx|, |dy| against the previous frame
    ThreshDiffMap          binary map of |F_n - F_{n-1}| >= Th
    GradMag, GradHor, GradVer  3x3 Sobel responses on luma (absolute values)
    Luma                   raw luma samples

and each map is summarised by (mean, std, max, top10mean). The chunk vector is
the mean of the four per-frame summaries, giving 32 values.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numba
import numpy as np

from .errors import DataFormatError, DimensionMismatchError
from .video_io import Chunk, Frame, chunk_frames

# the bundled TBB is often too old for numba and only produces a warning
if "NUMBA_THREADING_LAYER" not in os.environ and "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

MAP_NAMES = ("NormMV", "HorMV", "VerMV", "ThreshDiffMap", "GradMag", "GradHor", "GradVer", "Luma")
STAT_NAMES = ("mean", "std", "max", "top10mean")
FEATURE_NAMES = tuple(f"{m}_{s}" for m in MAP_NAMES for s in STAT_NAMES)
N_FEATURES = len(FEATURE_NAMES)
TEMPORAL_MAPS = MAP_NAMES[:4]

DEFAULT_THRESHOLD = 25
DEFAULT_BLOCK_SIZE = 16
DEFAULT_SEARCH_RANGE = 32


@dataclass(frozen=True)
class FeatureConfig:
    threshold: float = DEFAULT_THRESHOLD
    block_size: int = DEFAULT_BLOCK_SIZE
    search_range: int = DEFAULT_SEARCH_RANGE
    search: str = "full"

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.block_size <= 0 or self.search_range < 0:
            raise ValueError("block_size must be > 0 and search_range >= 0")
        if self.search not in ("full", "diamond"):
            raise ValueError(f"unknown motion search {self.search!r}")


@dataclass(frozen=True)
class MotionField:
    """Integer block motion vectors.

    ``vectors[r, c] = (dx, dy)`` means the block at grid cell (r, c) of the
    current frame best matches the previous frame displaced by (-dx, -dy),
    i.e. content moved by (dx, dy) between the two frames.
    """

    block_size: int
    search_range: int
    vectors: np.ndarray  # (rows, cols, 2) int32

    @property
    def dx(self) -> np.ndarray:
        return self.vectors[..., 0]

    @property
    def dy(self) -> np.ndarray:
        return self.vectors[..., 1]

    def norm(self) -> np.ndarray:
        return np.hypot(self.dx, self.dy)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    chunk_index: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (N_FEATURES,):
            raise DimensionMismatchError(f"feature vector must have {N_FEATURES} values")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_NAMES.index(name)])

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values.tolist()))


def _luma(x) -> np.ndarray:
    return x.luma if isinstance(x, Frame) else np.asarray(x)


def frame_difference(frame, prev) -> np.ndarray:
    """Absolute per-pixel luma difference (uint8)."""
    a, b = _luma(frame), _luma(prev)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return np.abs(a.astype(np.int16) - b.astype(np.int16)).astype(np.uint8)


def threshold_map(diff: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """1 where diff >= threshold, else 0."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return (np.asarray(diff) >= threshold).astype(np.uint8)


def sobel_gradients(frame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (|GradHor|, |GradVer|, GradMag) from 3x3 Sobel on luma.

    Borders replicate the edge sample. GradHor responds to horizontal
    intensity changes (vertical edges).
    """
    p = np.pad(_luma(frame).astype(np.int32), 1, mode="edge")
    left = p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2]
    right = p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]
    top = p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:]
    bottom = p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]
    gx = right - left
    gy = bottom - top
    mag = np.sqrt((gx * gx + gy * gy).astype(np.float64))
    return np.abs(gx), np.abs(gy), mag


@numba.njit(cache=True, inline="always")
def _block_sad(cur, ref, y0, x0, bh, bw, oy, ox, limit):
    # ref is padded; (oy, ox) is the top-left of the candidate inside it
    s = 0
    for i in range(bh):
        a = cur[y0 + i, x0:x0 + bw]
        b = ref[oy + i, ox:ox + bw]
        row = 0
        for j in range(bw):  # branch-free so it vectorises
            row += abs(np.int32(a[j]) - np.int32(b[j]))
        s += row
        if s > limit:
            return s
    return s


@numba.njit(cache=True, parallel=True)
def _full_search(cur, ref, block, rng):
    h, w = cur.shape
    rows = (h + block - 1) // block
    cols = (w + block - 1) // block
    out = np.zeros((rows, cols, 2), dtype=np.int32)
    big = np.iinfo(np.int64).max
    for k in numba.prange(rows * cols):
        r = k // cols
        c = k % cols
        y0 = r * block
        x0 = c * block
        bh = min(block, h - y0)
        bw = min(block, w - x0)
        best = big
        best_l1 = 0
        bdx = 0
        bdy = 0
        for dy in range(-rng, rng + 1):
            for dx in range(-rng, rng + 1):
                s = _block_sad(cur, ref, y0, x0, bh, bw, y0 - dy + rng, x0 - dx + rng, best)
                l1 = abs(dx) + abs(dy)
                if s < best or (s == best and l1 < best_l1):
                    best = s
                    best_l1 = l1
                    bdx = dx
                    bdy = dy
        out[r, c, 0] = bdx
        out[r, c, 1] = bdy
    return out


_LDSP = np.array([[0, 0], [0, -2], [-1, -1], [1, -1], [-2, 0], [2, 0], [-1, 1], [1, 1], [0, 2]],
                 dtype=np.int64)
_SDSP = np.array([[0, 0], [0, -1], [-1, 0], [1, 0], [0, 1]], dtype=np.int64)


@numba.njit(cache=True, parallel=True)
def _diamond_search(cur, ref, block, rng, ldsp, sdsp):
    h, w = cur.shape
    rows = (h + block - 1) // block
    cols = (w + block - 1) // block
    out = np.zeros((rows, cols, 2), dtype=np.int32)
    big = np.iinfo(np.int64).max
    for k in numba.prange(rows * cols):
        r = k // cols
        c = k % cols
        y0 = r * block
        x0 = c * block
        bh = min(block, h - y0)
        bw = min(block, w - x0)
        cx = 0
        cy = 0
        best = _block_sad(cur, ref, y0, x0, bh, bw, y0 + rng, x0 + rng, big)
        pattern = ldsp
        for _ in range(4 * rng + 4):
            nx = cx
            ny = cy
            nbest = best
            for p in range(1, pattern.shape[0]):
                dx = cx + pattern[p, 0]
                dy = cy + pattern[p, 1]
                if abs(dx) > rng or abs(dy) > rng:
                    continue
                s = _block_sad(cur, ref, y0, x0, bh, bw, y0 - dy + rng, x0 - dx + rng, nbest)
                if s < nbest or (s == nbest and abs(dx) + abs(dy) < abs(nx) + abs(ny)):
                    nbest = s
                    nx = dx
                    ny = dy
            if nx == cx and ny == cy:
                if pattern.shape[0] == sdsp.shape[0]:
                    break
                pattern = sdsp
            else:
                cx = nx
                cy = ny
                best = nbest
        out[r, c, 0] = cx
        out[r, c, 1] = cy
    return out


def estimate_motion(frame, prev, block_size: int = DEFAULT_BLOCK_SIZE,
                    search_range: int = DEFAULT_SEARCH_RANGE, search: str = "full") -> MotionField:
    """Block-matching motion estimation minimising SAD.

    The reference frame is extended by edge replication so every candidate
    within +-search_range is valid. Full search breaks ties by smallest
    |dx| + |dy|, then row-major (dy, dx) scan order. ``search="diamond"`` is a
    faster, non-exhaustive alternative.
    """
    cur, ref = _luma(frame), _luma(prev)
    if cur.shape != ref.shape:
        raise DimensionMismatchError(f"frame shapes differ: {cur.shape} vs {ref.shape}")
    cur = np.ascontiguousarray(cur, dtype=np.uint8)
    ref = np.pad(ref.astype(np.uint8), search_range, mode="edge")
    if search == "full":
        vectors = _full_search(cur, ref, block_size, search_range)
    elif search == "diamond":
        vectors = _diamond_search(cur, ref, block_size, search_range, _LDSP, _SDSP)
    else:
        raise ValueError(f"unknown motion search {search!r}")
    return MotionField(block_size, search_range, vectors)


def map_statistics(values) -> tuple[float, float, float, float]:
    """(mean, population std, max, mean of the ceil(10%) largest values)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("map is empty")
    k = math.ceil(0.1 * v.size)
    top = np.partition(v, v.size - k)[v.size - k:]
    mean = v.mean()
    return float(mean), float(np.sqrt(np.mean((v - mean) ** 2))), float(v.max()), float(top.mean())


_GRAD_MAX = 4 * 255


@numba.njit(cache=True)
def _spatial_histograms(luma):
    # one pass: Sobel with replicated borders, histograms of |gx|, |gy|, gx^2+gy^2 and luma
    h, w = luma.shape
    hx = np.zeros(_GRAD_MAX + 1, dtype=np.int64)
    hy = np.zeros(_GRAD_MAX + 1, dtype=np.int64)
    hm = np.zeros(2 * _GRAD_MAX * _GRAD_MAX + 1, dtype=np.int32)
    hl = np.zeros(256, dtype=np.int64)
    for i in range(h):
        im = max(i - 1, 0)
        ip = min(i + 1, h - 1)
        for j in range(w):
            jm = max(j - 1, 0)
            jp = min(j + 1, w - 1)
            a = np.int32(luma[im, jm])
            b = np.int32(luma[im, j])
            c = np.int32(luma[im, jp])
            d = np.int32(luma[i, jm])
            e = np.int32(luma[i, jp])
            f = np.int32(luma[ip, jm])
            g = np.int32(luma[ip, j])
            k = np.int32(luma[ip, jp])
            gx = (c + 2 * e + k) - (a + 2 * d + f)
            gy = (f + 2 * g + k) - (a + 2 * b + c)
            hx[abs(gx)] += 1
            hy[abs(gy)] += 1
            hm[gx * gx + gy * gy] += 1
            hl[luma[i, j]] += 1
    return hx, hy, hm, hl


def histogram_statistics(values: np.ndarray, counts: np.ndarray) -> tuple[float, float, float, float]:
    """map_statistics for a map given as a value histogram."""
    nz = np.nonzero(counts)[0]
    v = np.asarray(values, dtype=np.float64)[nz]
    c = counts[nz].astype(np.float64)
    n = c.sum()
    mean = float((v * c).sum() / n)
    std = float(np.sqrt((c * (v - mean) ** 2).sum() / n))
    k = math.ceil(0.1 * n)
    # walk bins from the top until k samples are covered
    v_desc, c_desc = v[::-1], c[::-1]
    cum = np.cumsum(c_desc)
    last = int(np.searchsorted(cum, k))
    taken = c_desc[:last + 1].copy()
    taken[-1] -= cum[last] - k
    top = float((v_desc[:last + 1] * taken).sum() / k)
    return mean, std, float(v[-1]), top


@numba.njit(cache=True)
def _compact(hist):
    # (bin, count) pairs of the occupied bins, ascending
    n = 0
    for c in hist:
        n += c != 0
    bins = np.empty(n, dtype=np.int64)
    counts = np.empty(n, dtype=np.int64)
    k = 0
    for i in range(hist.size):
        if hist[i] != 0:
            bins[k] = i
            counts[k] = hist[i]
            k += 1
    return bins, counts


def spatial_statistics(frame) -> np.ndarray:
    """(4, 4) statistics of GradMag, GradHor, GradVer and Luma via histograms."""
    hx, hy, hm, hl = _spatial_histograms(np.ascontiguousarray(_luma(frame), dtype=np.uint8))
    grad = np.arange(_GRAD_MAX + 1)
    mag_bins, mag_counts = _compact(hm)
    return np.array([
        histogram_statistics(np.sqrt(mag_bins.astype(np.float64)), mag_counts),
        histogram_statistics(grad, hx),
        histogram_statistics(grad, hy),
        histogram_statistics(np.arange(256), hl),
    ])


def frame_features(frame: Frame, prev: Optional[Frame], config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """32 statistics for one frame; temporal maps are zero when ``prev`` is None."""
    out = np.zeros((len(MAP_NAMES), len(STAT_NAMES)))
    if prev is not None:
        mf = estimate_motion(frame, prev, config.block_size, config.search_range, config.search)
        out[0] = map_statistics(mf.norm())
        out[1] = map_statistics(np.abs(mf.dx))
        out[2] = map_statistics(np.abs(mf.dy))
        active = threshold_map(frame_difference(frame, prev), config.threshold)
        n_on = int(np.count_nonzero(active))
        out[3] = histogram_statistics(np.array([0, 1]), np.array([active.size - n_on, n_on]))
    out[4:] = spatial_statistics(frame)
    return out.ravel()


def frame_features_reference(frame: Frame, prev: Optional[Frame], config: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Same as frame_features but computing every map explicitly (slow)."""
    out = np.zeros((len(MAP_NAMES), len(STAT_NAMES)))
    if prev is not None:
        mf = estimate_motion(frame, prev, config.block_size, config.search_range, config.search)
        out[0] = map_statistics(mf.norm())
        out[1] = map_statistics(np.abs(mf.dx))
        out[2] = map_statistics(np.abs(mf.dy))
        out[3] = map_statistics(threshold_map(frame_difference(frame, prev), config.threshold))
    gh, gv, gm = sobel_gradients(frame)
    out[4] = map_statistics(gm)
    out[5] = map_statistics(gh)
    out[6] = map_statistics(gv)
    out[7] = map_statistics(_luma(frame))
    return out.ravel()


def extract_chunk_features(chunk: Chunk, config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """Mean of the four per-frame feature rows of a chunk."""
    rows = []
    prev = chunk.prev_last
    for frame in chunk.frames:
        rows.append(frame_features(frame, prev, config))
        prev = frame
    return FeatureVector(np.mean(rows, axis=0), chunk.index)


def extract_features(frames: Sequence[Frame], config: FeatureConfig = FeatureConfig()) -> list[FeatureVector]:
    chunks, _ = chunk_frames(frames)
    return [extract_chunk_features(c, config) for c in chunks]


def write_feature_csv(path, vectors: Iterable[FeatureVector], labels: Optional[Sequence[int]] = None) -> None:
    vectors = list(vectors)
    if labels is not None and len(labels) != len(vectors):
        raise ValueError("labels and vectors differ in length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chunk_index", *FEATURE_NAMES] + (["label"] if labels is not None else []))
        for i, fv in enumerate(vectors):
            row = [fv.chunk_index, *(repr(float(x)) for x in fv.values)]
            if labels is not None:
                row.append(int(labels[i]))
            writer.writerow(row)


def read_feature_csv(path) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Return (chunk_index, X, labels-or-None) from a feature CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty feature file") from None
        has_label = header[-1] == "label"
        expected = ["chunk_index", *FEATURE_NAMES] + (["label"] if has_label else [])
        if header != expected:
            raise DataFormatError(f"{path}: unexpected feature CSV header")
        idx, rows, labels = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                idx.append(int(row[0]))
                rows.append([float(x) for x in row[1:1 + N_FEATURES]])
                if has_label:
                    label = int(row[-1])
                    if label not in (30, 60, 120):
                        raise ValueError(f"label {label} not in 30|60|120")
                    labels.append(label)
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    X = np.array(rows, dtype=np.float64).reshape(-1, N_FEATURES)
    return np.array(idx, dtype=np.int64), X, (np.array(labels, dtype=np.int64) if has_label else None)
