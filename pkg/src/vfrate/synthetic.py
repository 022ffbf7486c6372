"""Synthetic textured clips for tests, demos and sanity benchmarks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .video_io import Frame


def texture(rng: np.random.Generator, height: int, width: int, grain: int = 3) -> np.ndarray:
    """Box-blurred noise stretched to the full 8-bit range (float array)."""
    noise = rng.random((height + grain, width + grain))
    c = np.cumsum(np.cumsum(noise, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    box = c[grain:, grain:] - c[:-grain, grain:] - c[grain:, :-grain] + c[:-grain, :-grain]
    box = box[:height, :width]
    box -= box.min()
    return 255.0 * box / max(box.max(), 1e-9)


def pan_clip(rng: np.random.Generator, n_frames: int, height: int, width: int,
             velocity: tuple[int, int], noise: float = 0.0) -> list[Frame]:
    """Window sliding over a larger texture; content moves by ``velocity`` px/frame.

    ``velocity`` is (dx, dy) in integer pixels. Optional Gaussian sensor noise.
    """
    vx, vy = velocity
    span_x, span_y = abs(vx) * n_frames, abs(vy) * n_frames
    canvas = texture(rng, height + span_y, width + span_x)
    x0 = span_x if vx > 0 else 0
    y0 = span_y if vy > 0 else 0
    frames = []
    for t in range(n_frames):
        # moving the window by -v moves the content by +v
        x, y = x0 - vx * t, y0 - vy * t
        luma = canvas[y:y + height, x:x + width]
        if noise:
            luma = luma + rng.normal(0.0, noise, luma.shape)
        frames.append(Frame.from_luma(luma))
    return frames


@dataclass(frozen=True)
class Clip:
    kind: str
    label: int
    velocity: tuple
    frames: list


# rule-derived critical frame rate for each motion regime
REGIMES = {
    "static": (30, (0, 0)),
    "slow_pan": (60, (2, 1)),
    "fast_pan": (120, (9, 0)),
}


# clip counts per regime, skewed like real HFR material (few static shots)
DEFAULT_COUNTS = {"static": 2, "slow_pan": 8, "fast_pan": 6}


def make_corpus(seed: int, counts: dict = DEFAULT_COUNTS, n_frames: int = 24,
                height: int = 64, width: int = 64, noise: float = 1.0) -> list[Clip]:
    """Static / slow-pan / fast-pan clips with randomised direction and texture.

    The 30 fps class must stay smaller than the 120 fps class, otherwise the
    FD class of the first classifier is filled with 30 fps chunks only.
    """
    rng = np.random.default_rng(seed)
    clips = []
    for kind, n in counts.items():
        label, (vx, vy) = REGIMES[kind]
        for _ in range(n):
            sx, sy = rng.choice([-1, 1], size=2)
            velocity = (int(sx * vx), int(sy * vy))
            if rng.random() < 0.5:
                velocity = velocity[::-1]
            clips.append(Clip(kind, label, velocity, pan_clip(rng, n_frames, height, width, velocity, noise)))
    return clips
