"""Raw planar YUV 4:2:0 (8-bit) reading/writing and 4-frame chunking."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, SizeMismatchError

CHUNK_SIZE = 4


def _frozen(plane: np.ndarray) -> np.ndarray:
    plane = np.ascontiguousarray(plane, dtype=np.uint8)
    plane.setflags(write=False)
    return plane


@dataclass(frozen=True, eq=False)
class Frame:
    """One 8-bit 4:2:0 picture. Planes are read-only uint8 arrays (rows, cols)."""

    luma: np.ndarray
    chroma_u: np.ndarray
    chroma_v: np.ndarray

    def __post_init__(self):
        luma = np.asarray(self.luma)
        if luma.ndim != 2:
            raise DimensionMismatchError("luma plane must be 2-D")
        h, w = luma.shape
        if h <= 0 or w <= 0 or h % 2 or w % 2:
            raise DimensionMismatchError(f"frame dimensions must be even and positive, got {w}x{h}")
        for name in ("chroma_u", "chroma_v"):
            plane = np.asarray(getattr(self, name))
            if plane.shape != (h // 2, w // 2):
                raise DimensionMismatchError(
                    f"{name} plane has shape {plane.shape}, expected {(h // 2, w // 2)}")
        for name in ("luma", "chroma_u", "chroma_v"):
            arr = np.asarray(getattr(self, name))
            if arr.dtype != np.uint8 and (arr.min() < 0 or arr.max() > 255):
                raise DimensionMismatchError(f"{name} samples outside [0, 255]")
            object.__setattr__(self, name, _frozen(arr))

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    @property
    def nbytes(self) -> int:
        return frame_size(self.width, self.height)

    @classmethod
    def from_luma(cls, luma, chroma_value: int = 128) -> "Frame":
        """Build a frame from a luma plane, filling chroma with a flat value."""
        luma = np.asarray(luma)
        h, w = luma.shape
        chroma = np.full((h // 2, w // 2), chroma_value, dtype=np.uint8)
        return cls(np.clip(np.rint(luma), 0, 255).astype(np.uint8), chroma, chroma.copy())

    def tobytes(self) -> bytes:
        return self.luma.tobytes() + self.chroma_u.tobytes() + self.chroma_v.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (np.array_equal(self.luma, other.luma)
                and np.array_equal(self.chroma_u, other.chroma_u)
                and np.array_equal(self.chroma_v, other.chroma_v))

    __hash__ = None


@dataclass(frozen=True)
class Chunk:
    index: int
    frames: tuple
    prev_last: Optional[Frame] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.frames) != CHUNK_SIZE:
            raise ValueError(f"a chunk holds exactly {CHUNK_SIZE} frames, got {len(self.frames)}")
        if (self.prev_last is None) != (self.index == 0):
            raise ValueError("prev_last must be given iff chunk index > 0")


def frame_size(width: int, height: int) -> int:
    """Bytes per 4:2:0 8-bit frame."""
    return width * height * 3 // 2


def _check_geometry(width: int, height: int) -> None:
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise DimensionMismatchError(
            f"only 8-bit 4:2:0 with even positive dimensions is supported, got {width}x{height}")


def decode_frames(data: bytes, width: int, height: int) -> list[Frame]:
    _check_geometry(width, height)
    footprint = frame_size(width, height)
    if len(data) % footprint:
        raise SizeMismatchError(
            f"{len(data)} bytes is not a multiple of the {width}x{height} 4:2:0 frame size ({footprint})")
    buf = np.frombuffer(data, dtype=np.uint8)
    n_luma = width * height
    n_chroma = n_luma // 4
    frames = []
    for start in range(0, len(data), footprint):
        y = buf[start:start + n_luma].reshape(height, width)
        u = buf[start + n_luma:start + n_luma + n_chroma].reshape(height // 2, width // 2)
        v = buf[start + n_luma + n_chroma:start + footprint].reshape(height // 2, width // 2)
        frames.append(Frame(y, u, v))
    return frames


def read_yuv(path, width: int, height: int) -> list[Frame]:
    """Read every frame of a raw YUV420p file.

    Raises SizeMismatchError if the file is not a whole number of frames.
    """
    _check_geometry(width, height)
    footprint = frame_size(width, height)
    size = os.path.getsize(path)
    if size % footprint:
        raise SizeMismatchError(
            f"{path}: {size} bytes is not a multiple of the {width}x{height} frame size ({footprint})")
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_frames(data, width, height)


def write_yuv(path, frames: Iterable[Frame]) -> int:
    """Write frames as raw YUV420p; returns the number of bytes written."""
    frames = list(frames)
    if frames:
        shape = frames[0].luma.shape
        for i, f in enumerate(frames):
            if f.luma.shape != shape:
                raise DimensionMismatchError(
                    f"frame {i} is {f.width}x{f.height}, expected {shape[1]}x{shape[0]}")
    written = 0
    with open(path, "wb") as fh:
        for f in frames:
            written += fh.write(f.tobytes())
    return written


def chunk_frames(frames: Sequence[Frame]) -> tuple[list[Chunk], list[Frame]]:
    """Split frames into consecutive 4-frame chunks plus a pass-through tail."""
    frames = list(frames)
    n_chunks = len(frames) // CHUNK_SIZE
    chunks = []
    for i in range(n_chunks):
        start = i * CHUNK_SIZE
        prev_last = frames[start - 1] if i > 0 else None
        chunks.append(Chunk(i, tuple(frames[start:start + CHUNK_SIZE]), prev_last))
    return chunks, frames[n_chunks * CHUNK_SIZE:]
