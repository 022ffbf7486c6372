import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import t_two_tailed_quadrature, welch_oracle
from vfrate.errors import DataFormatError, MissingScoreError, UndersizedSampleError
from vfrate.stats import (CONDITIONS, ScoreTable, betainc_regularized, dmos, pairwise_table, student_t_two_tailed,
                          welch_t, write_dmos_csv, write_pvalue_csv)


def test_identical_samples():
    r = welch_t([1, 2, 3], [1, 2, 3])
    assert (r.t_statistic, r.p_value, r.verdict) == (0.0, 1.0, "same")


def test_shift_by_one_against_quadrature():
    r = welch_t([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    t, df, p = welch_oracle([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert r.t_statistic == pytest.approx(-1.0) and r.degrees_of_freedom == pytest.approx(8.0)
    assert abs(r.p_value - p) < 1e-9


def test_swap_negates_t():
    a, b = [3, 5, 9, 2], [7, 8, 12, 10, 11]
    r1, r2 = welch_t(a, b), welch_t(b, a)
    assert r1.t_statistic == -r2.t_statistic and r1.p_value == r2.p_value


def test_zero_variance_cases():
    assert welch_t([4, 4], [4, 4, 4]).p_value == 1.0
    r = welch_t([4, 4], [5, 5])
    assert r.p_value == 0.0 and r.verdict == "different"
    with pytest.raises(UndersizedSampleError):
        welch_t([1], [1, 2])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 8.0), st.floats(1.0, 60.0))
def test_tail_probability_matches_quadrature(t, df):
    assert abs(student_t_two_tailed(t, df) - t_two_tailed_quadrature(t, df)) < 1e-9


def test_betainc_edges():
    assert betainc_regularized(2, 3, 0.0) == 0.0 and betainc_regularized(2, 3, 1.0) == 1.0
    # I_x(1, 1) = x and I_x(a, b) = 1 - I_{1-x}(b, a)
    assert betainc_regularized(1, 1, 0.3) == pytest.approx(0.3)
    assert betainc_regularized(2.5, 0.5, 0.4) == pytest.approx(1 - betainc_regularized(0.5, 2.5, 0.6))


def _table(shift30=0.0, seed=0, n_obs=20):
    rng = np.random.default_rng(seed)
    rows = []
    for o in range(n_obs):
        base = rng.uniform(60, 80)
        for c in CONDITIONS:
            s = base + rng.normal(0, 2) + (shift30 if c == "30fps" else 0.0)
            rows.append((f"o{o}", "seq", c, float(np.clip(s, 0, 100))))
    return ScoreTable(rows)


def test_dmos_examples():
    t = ScoreTable([("a", "s", "120fps", 70), ("a", "s", "60fps", 60),
                    ("b", "s", "120fps", 80), ("b", "s", "60fps", 50)])
    assert dmos(t, "s", "60fps").value == 80.0
    r = dmos(t, "s", "120fps")
    assert r.value == 100.0 and r.ci_low == r.ci_high == 100.0


def test_dmos_shift_invariance():
    rows = [("a", "s", "120fps", 70), ("a", "s", "VFR", 61), ("b", "s", "120fps", 80), ("b", "s", "VFR", 72)]
    shifted = [(o, s, c, v + 5) for o, s, c, v in rows]
    assert dmos(ScoreTable(rows), "s", "VFR").value == dmos(ScoreTable(shifted), "s", "VFR").value


def test_dmos_missing_observer():
    t = ScoreTable([("a", "s", "120fps", 70), ("b", "s", "120fps", 70), ("a", "s", "VFR", 70)])
    with pytest.raises(MissingScoreError):
        dmos(t, "s", "VFR")


def test_identical_columns_all_same():
    rows = [(f"o{i}", "s", c, 50.0 + i) for i in range(6) for c in CONDITIONS]
    tab = pairwise_table(ScoreTable(rows), "s")
    assert all(r.p_value == 1.0 and r.verdict == "same" for r in tab.results.values())
    m = tab.matrix()
    assert m[0][1] is None and m[2][2] == 1.0


def test_shifted_30fps_row():
    tab = pairwise_table(_table(shift30=-30.0), "seq")
    for ref in ("120fps", "VFR", "60fps"):
        assert tab.verdict("30fps", ref) == "different"
    assert tab.verdict("VFR", "120fps") == "same"


def test_observer_order_irrelevant():
    t = _table(seed=3)
    rows = [(o, "seq", c, v) for c in CONDITIONS for o, v in t.scores("seq", c).items()]
    again = pairwise_table(ScoreTable(reversed(rows)), "seq")
    assert again.matrix() == pairwise_table(t, "seq").matrix()


def test_score_csv(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("observer,sequence,condition,score\na,s,120fps,70\na,s,VFR,66\n")
    assert ScoreTable.read_csv(p).column("s", "VFR").tolist() == [66.0]
    p.write_text("observer,sequence,condition,score\na,s,24fps,70\n")
    with pytest.raises(DataFormatError):
        ScoreTable.read_csv(p)


def test_writers(tmp_path):
    t = _table()
    write_dmos_csv(tmp_path / "d.csv", [dmos(t, "seq", c) for c in CONDITIONS])
    write_pvalue_csv(tmp_path / "p.csv", [pairwise_table(t, "seq")])
    assert len((tmp_path / "d.csv").read_text().splitlines()) == 5
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 7
