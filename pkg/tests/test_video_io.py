import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vfrate.errors import DimensionMismatchError, SizeMismatchError
from vfrate.video_io import Chunk, Frame, chunk_frames, decode_frames, frame_size, read_yuv, write_yuv


def _frames(n, w=8, h=6, seed=0):
    rng = np.random.default_rng(seed)
    return [Frame(rng.integers(0, 256, (h, w), dtype=np.uint8),
                  rng.integers(0, 256, (h // 2, w // 2), dtype=np.uint8),
                  rng.integers(0, 256, (h // 2, w // 2), dtype=np.uint8)) for _ in range(n)]


def test_hd_footprint():
    assert frame_size(1920, 1080) == 3_110_400
    assert 10 * frame_size(1920, 1080) == 31_104_000


def test_read_counts_frames_by_file_size(tmp_path):
    p = tmp_path / "v.yuv"
    p.write_bytes(bytes(3 * frame_size(16, 8)))
    assert len(read_yuv(p, 16, 8)) == 3
    p.write_bytes(b"")
    assert read_yuv(p, 16, 8) == []


def test_off_by_one_size_is_rejected(tmp_path):
    p = tmp_path / "v.yuv"
    p.write_bytes(bytes(frame_size(16, 8) + 1))
    with pytest.raises(SizeMismatchError):
        read_yuv(p, 16, 8)


def test_hd_file_of_ten_frames(tmp_path):
    p = tmp_path / "hd.yuv"
    with open(p, "wb") as fh:
        fh.truncate(31_104_000)
    assert len(read_yuv(p, 1920, 1080)) == 10


def test_odd_geometry_rejected():
    with pytest.raises(DimensionMismatchError):
        decode_frames(b"", 15, 8)


def test_write_then_read(tmp_path):
    frames = _frames(5)
    p = tmp_path / "v.yuv"
    assert write_yuv(p, frames) == 5 * frame_size(8, 6)
    assert read_yuv(p, 8, 6) == frames


def test_mixed_dimensions_rejected(tmp_path):
    with pytest.raises(DimensionMismatchError):
        write_yuv(tmp_path / "v.yuv", _frames(1) + _frames(1, w=10))


def test_frames_are_read_only():
    f = _frames(1)[0]
    with pytest.raises(ValueError):
        f.luma[0, 0] = 1


@pytest.mark.parametrize("n, n_chunks, tail", [(9, 2, 1), (8, 2, 0), (3, 0, 3), (0, 0, 0)])
def test_chunking_counts(n, n_chunks, tail):
    chunks, rest = chunk_frames(_frames(n))
    assert len(chunks) == n_chunks and len(rest) == tail


def test_prev_last_links_chunks():
    frames = _frames(8)
    chunks, _ = chunk_frames(frames)
    assert chunks[0].prev_last is None
    assert chunks[1].prev_last == frames[3]
    assert chunks[1].frames == tuple(frames[4:8])


def test_chunk_validation():
    f = _frames(4)
    with pytest.raises(ValueError):
        Chunk(0, tuple(f[:3]))
    with pytest.raises(ValueError):
        Chunk(1, tuple(f))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 30))
def test_chunking_partitions_frames(n):
    frames = _frames(n, seed=n)
    chunks, tail = chunk_frames(frames)
    flat = [f for c in chunks for f in c.frames] + tail
    assert flat == frames
    assert len(tail) < 4
