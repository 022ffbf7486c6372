import json

import numpy as np
import pytest

from vfrate.cli import main
from vfrate.synthetic import pan_clip
from vfrate.video_io import read_yuv, write_yuv

W, H = 48, 32
FAST = ["--search-range", "10", "--width", str(W), "--height", str(H)]
TREES = ["--trees1", "15", "--trees2", "15", "--depth1", "4", "--depth2", "4"]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(0)
    feats = []
    # sequences interleaved by regime so contiguous folds see every class
    for k in range(2):
        for name, label, vel in [("still", 30, (0, 0)), ("slow", 60, (2, 1)), ("fast", 120, (9, 0))]:
            video = d / f"{name}{k}.yuv"
            write_yuv(video, pan_clip(rng, 26, H, W, vel, noise=1.0))
            out = d / f"{name}{k}.csv"
            assert main(["extract", str(video), "-o", str(out), "--label", str(label)] + FAST) == 0
            feats.append(str(out))
    return d, feats


def test_train_is_deterministic(workspace):
    d, feats = workspace
    for name in ("m1.json", "m2.json"):
        assert main(["train", *feats, "-o", str(d / name), "--seed", "3"] + TREES) == 0
    assert (d / "m1.json").read_bytes() == (d / "m2.json").read_bytes()


def test_predict_decimate_upsample(workspace, capsys):
    d, feats = workspace
    model = d / "m.json"
    assert main(["train", *feats, "-o", str(model), "--cv-report", str(d / "cv.csv"), "--folds", "3"] + TREES) == 0
    assert (d / "cv.csv").exists() and (d / "cv.csv.clf1.confusion.csv").exists()
    video = d / "fast0.yuv"
    tl = d / "tl.csv"
    assert main(["predict", str(video), "--model", str(model), "-o", str(tl), "--plot", str(d / "tl.svg")] + FAST) == 0
    assert main(["decimate", str(video), "--timeline", str(tl), "-o", str(d / "low.yuv")] + FAST) == 0
    assert (d / "low.yuv.timeline.csv").read_text() == tl.read_text()
    assert main(["upsample", str(d / "low.yuv"), "--timeline", str(tl), "-o", str(d / "up.yuv")] + FAST) == 0
    assert len(read_yuv(d / "up.yuv", W, H)) == len(read_yuv(video, W, H)) == 26
    capsys.readouterr()
    assert main(["evaluate", str(tl), str(d / "fast0.csv"), "-o", str(d / "ev")]) == 0
    assert "critical errors" in capsys.readouterr().out


def test_report_all_f30(tmp_path, capsys):
    tl = tmp_path / "t.csv"
    tl.write_text("# vfrate-timeline v1 frames=16 source_fps=120\nchunk_index,start_frame,fps\n"
                  + "".join(f"{i},{4 * i},30\n" for i in range(4)))
    assert main(["report", str(tl), "-o", str(tmp_path / "r.csv")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "75.0%"


def test_select_features(workspace):
    d, feats = workspace
    out = d / "sel.json"
    assert main(["select-features", *feats, "-o", str(out), "--folds", "2", "--min-dim", "30",
                 "--trees1", "4", "--trees2", "4", "--depth1", "3", "--depth2", "3"]) == 0
    sel = json.loads(out.read_text())
    assert set(sel) == {"clf1", "clf2"} and len(sel["clf1"]) >= 30
    assert main(["train", *feats, "-o", str(d / "ms.json"), "--feature-sets", str(out)] + TREES) == 0


def test_stats_command(tmp_path):
    rows = ["observer,sequence,condition,score"]
    rng = np.random.default_rng(1)
    for o in range(8):
        for c in ("120fps", "VFR", "60fps", "30fps"):
            rows.append(f"o{o},s,{c},{rng.uniform(40, 90):.1f}")
    p = tmp_path / "scores.csv"
    p.write_text("\n".join(rows) + "\n")
    assert main(["stats", str(p), "-o", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out.dmos.csv").exists() and (tmp_path / "out.pvalues.csv").exists()


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yuv"
    bad.write_bytes(b"\0" * 7)
    assert main(["extract", str(bad), "-o", str(tmp_path / "f.csv"), "--width", "4", "--height", "2"]) == 3
    assert "error: SizeMismatchError" in capsys.readouterr().err
    assert main(["extract", str(bad), "-o", str(tmp_path / "f.csv")]) == 2
    model = tmp_path / "m.json"
    model.write_text(json.dumps({"format": "vfrate-cascade", "version": 9}))
    assert main(["predict", str(bad), "--model", str(model), "-o", "x", "--width", "4", "--height", "2"]) == 4
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["report", "x", "--config", str(cfg)]) == 2


def test_config_file_values(tmp_path):
    from vfrate.cli import RunConfig
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"width": 64, "height": 32, "seed": 5, "score_weights": [1, 3]}))
    rc = RunConfig.load(str(cfg), {"seed": 9})
    assert (rc.width, rc.height, rc.seed, rc.score_weights) == (64, 32, 9, (1, 3))
