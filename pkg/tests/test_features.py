import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import sad_oracle
from vfrate.features import (FEATURE_NAMES, FeatureConfig, FeatureVector, estimate_motion, extract_chunk_features,
                             extract_features, frame_difference, frame_features, frame_features_reference,
                             histogram_statistics, map_statistics, read_feature_csv, sobel_gradients,
                             threshold_map, write_feature_csv)
from vfrate.errors import DataFormatError
from vfrate.synthetic import pan_clip
from vfrate.video_io import Frame, chunk_frames


def test_feature_names_layout():
    assert len(FEATURE_NAMES) == 32
    assert FEATURE_NAMES[0] == "NormMV_mean" and FEATURE_NAMES[-1] == "Luma_top10mean"


def test_frame_difference():
    a = np.full((4, 4), 100, dtype=np.uint8)
    b = a.copy()
    b[1, 2] = 130
    assert not frame_difference(a, a).any()
    d = frame_difference(b, a)
    assert d[1, 2] == 30 and d.sum() == 30
    np.testing.assert_array_equal(d, frame_difference(a, b))


def test_threshold_single_activation_hd():
    diff = np.zeros((1080, 1920), dtype=np.uint8)
    assert not threshold_map(diff, 25).any()
    diff[5, 7] = 30
    assert map_statistics(threshold_map(diff, 25))[0] == 1 / 2_073_600


def test_sobel_flat_and_step():
    for m in sobel_gradients(np.full((8, 8), 77, dtype=np.uint8)):
        assert not m.any()
    step = np.zeros((8, 10), dtype=np.uint8)
    step[:, 5:] = 255
    gh, gv, gm = sobel_gradients(step)
    # hand convolution: columns 4 and 5 straddle the edge
    assert np.all(gh[:, 4] == 1020) and np.all(gh[:, 5] == 1020)
    assert np.all(gh[:, :4] == 0) and np.all(gh[:, 6:] == 0)
    assert not gv[1:-1].any()
    np.testing.assert_array_equal(gm, gh)


def test_sobel_rotation_swaps_axes(rng):
    img = rng.integers(0, 256, (12, 12), dtype=np.uint8)
    gh, gv, _ = sobel_gradients(img)
    rh, rv, _ = sobel_gradients(np.rot90(img))
    np.testing.assert_array_equal(rh, np.rot90(gv))
    np.testing.assert_array_equal(rv, np.rot90(gh))


def test_identical_frames_have_zero_motion(rng):
    f = Frame.from_luma(rng.integers(0, 256, (48, 64)))
    assert not estimate_motion(f, f).vectors.any()


def test_pan_two_pixels_matches_oracle(rng):
    prev, cur = pan_clip(rng, 2, 64, 64, (2, 0))
    mf = estimate_motion(cur, prev)
    np.testing.assert_array_equal(mf.vectors, sad_oracle(cur.luma, prev.luma, 16, 32))
    assert np.all(mf.vectors[1:-1, 1:-1] == (2, 0))


def test_noise_vectors_stay_in_window(rng):
    a = Frame.from_luma(rng.integers(0, 256, (64, 64)))
    b = Frame.from_luma(rng.integers(0, 256, (64, 64)))
    v = estimate_motion(a, b, search_range=6).vectors
    assert np.abs(v).max() <= 6


def test_partial_blocks_match_oracle(rng):
    prev, cur = pan_clip(rng, 2, 40, 52, (-3, 2))
    np.testing.assert_array_equal(estimate_motion(cur, prev, 16, 5).vectors,
                                  sad_oracle(cur.luma, prev.luma, 16, 5))


def test_diamond_recovers_small_pan(rng):
    prev, cur = pan_clip(rng, 2, 96, 96, (3, -1))
    v = estimate_motion(cur, prev, search="diamond").vectors
    assert np.all(v[1:-1, 1:-1] == (3, -1))


def test_map_statistics_examples():
    assert map_statistics(np.full((3, 3), 7)) == (7.0, 0.0, 7.0, 7.0)
    assert map_statistics(np.arange(10))[3] == 9.0
    m, s, mx, top = map_statistics([1, 2, 3, 4])
    assert m == 2.5 and s == pytest.approx(math.sqrt(1.25)) and mx == 4 and top == 4
    ref = np.array([1, 2, 3, 4], dtype=float)
    assert s == pytest.approx(float(np.std(ref)))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=1, max_size=200))
def test_histogram_statistics_match_direct(values):
    v = np.array(values)
    counts = np.bincount(v)
    got = histogram_statistics(np.arange(counts.size), counts)
    np.testing.assert_allclose(got, map_statistics(v), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("shape", [(16, 16), (30, 46), (64, 64)])
def test_fast_features_equal_reference(shape, rng):
    frames = pan_clip(rng, 2, *shape, (1, 2), noise=3.0)
    cfg = FeatureConfig(search_range=4)
    np.testing.assert_allclose(frame_features(frames[1], frames[0], cfg),
                               frame_features_reference(frames[1], frames[0], cfg), rtol=1e-12, atol=1e-12)


def test_constant_video_features():
    frames = [Frame.from_luma(np.full((32, 32), 90)) for _ in range(8)]
    fvs = extract_features(frames)
    assert len(fvs) == 2
    for fv in fvs:
        assert not fv.values[:16].any()
        assert fv["Luma_mean"] == 90.0
    np.testing.assert_array_equal(fvs[0].values, fvs[1].values)


def test_pan_three_pixels_normmv(rng):
    frames = pan_clip(rng, 8, 64, 64, (3, 0))
    fv = extract_chunk_features(chunk_frames(frames)[0][1], FeatureConfig(search_range=8))
    assert fv["NormMV_mean"] == pytest.approx(3.0, abs=0.3)
    assert fv["HorMV_max"] == 3.0


def test_first_chunk_frame0_has_no_temporal_maps(rng):
    frames = pan_clip(rng, 4, 32, 32, (2, 0))
    chunk = chunk_frames(frames)[0][0]
    cfg = FeatureConfig(search_range=4)
    rows = [frame_features(frames[0], None, cfg)] + [frame_features(frames[i], frames[i - 1], cfg) for i in range(1, 4)]
    np.testing.assert_allclose(extract_chunk_features(chunk, cfg).values, np.mean(rows, axis=0))
    assert not rows[0][:16].any()


def test_feature_csv_round_trip(tmp_path, rng):
    vecs = [FeatureVector(rng.normal(size=32), i) for i in range(3)]
    p = tmp_path / "f.csv"
    write_feature_csv(p, vecs, [30, 60, 120])
    idx, X, y = read_feature_csv(p)
    assert idx.tolist() == [0, 1, 2] and y.tolist() == [30, 60, 120]
    np.testing.assert_array_equal(X, np.array([v.values for v in vecs]))


def test_feature_csv_bad_header(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(DataFormatError):
        read_feature_csv(p)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_statistic_order_and_bounds(seed):
    rng = np.random.default_rng(seed)
    a = Frame.from_luma(rng.integers(0, 256, (32, 48)))
    b = Frame.from_luma(rng.integers(0, 256, (32, 48)))
    rows = frame_features(a, b).reshape(8, 4)
    assert np.all(rows[:, 0] <= rows[:, 3] + 1e-12) and np.all(rows[:, 3] <= rows[:, 2])
    assert np.all((rows[3] >= 0) & (rows[3] <= 1))
    assert rows[0, 2] <= math.sqrt(2) * 32
    np.testing.assert_array_equal(rows, frame_features(a, b).reshape(8, 4))
