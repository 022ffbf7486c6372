"""DMOS and Welch's t-test over subjective score sheets.

The Student t tail probability is computed through the regularised
incomplete beta function, P(|T| > t) = I_x(df/2, 1/2) with x = df/(df + t^2),
evaluated by a modified-Lentz continued fraction (absolute error well below
1e-10 for the degrees of freedom met here).
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError, MissingScoreError, UndersizedSampleError

REFERENCE = "120fps"
CONDITIONS = ("120fps", "VFR", "60fps", "30fps")
TEST_CONDITIONS = ("VFR", "60fps", "30fps")
REF_CONDITIONS = ("120fps", "VFR", "60fps")
ALPHA = 0.05
Z95 = 1.96

_EPS = 1e-16
_TINY = 1e-300


def _beta_cf(a: float, b: float, x: float, max_iter: int = 500) -> float:
    c = 1.0
    d = 1.0 - (a + b) * x / (a + 1.0)
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_two_tailed(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    return min(1.0, max(0.0, betainc_regularized(df / 2.0, 0.5, df / (df + t * t))))


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float

    @property
    def verdict(self) -> str:
        return "different" if self.p_value < ALPHA else "same"


def welch_t(samples_a: Sequence[float], samples_b: Sequence[float]) -> TTestResult:
    """Two-sided unequal-variance t-test of mean(a) - mean(b).

    Degrees of freedom follow Welch-Satterthwaite. Two zero-variance samples
    give t = 0, p = 1 for equal means and t = +-inf, p = 0 otherwise.
    """
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise UndersizedSampleError("each sample needs at least two values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    if va + vb == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, float(a.size + b.size - 2), 1.0)
        return TTestResult(math.copysign(math.inf, diff), float(a.size + b.size - 2), 0.0)
    t = diff / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    return TTestResult(float(t), float(df), student_t_two_tailed(t, df))


class ScoreTable:
    """Scores on a 0-100 scale keyed by (sequence, condition, observer)."""

    def __init__(self, rows: Iterable[tuple] = ()):
        self._scores = defaultdict(dict)
        for observer, sequence, condition, score in rows:
            self.add(observer, sequence, condition, score)

    def add(self, observer, sequence, condition, score) -> None:
        if condition not in CONDITIONS:
            raise DataFormatError(f"unknown condition {condition!r}; expected one of {CONDITIONS}")
        score = float(score)
        if not 0.0 <= score <= 100.0:
            raise DataFormatError(f"score {score} outside [0, 100]")
        self._scores[(str(sequence), condition)][str(observer)] = score

    @property
    def sequences(self) -> list[str]:
        return sorted({s for s, _ in self._scores})

    def observers(self, sequence: str, condition: str) -> list[str]:
        return sorted(self._scores.get((sequence, condition), {}))

    def scores(self, sequence: str, condition: str) -> dict:
        if (sequence, condition) not in self._scores:
            raise MissingScoreError(f"no scores for sequence {sequence!r}, condition {condition!r}")
        return dict(self._scores[(sequence, condition)])

    def column(self, sequence: str, condition: str) -> np.ndarray:
        s = self.scores(sequence, condition)
        return np.array([s[o] for o in sorted(s)])

    @classmethod
    def read_csv(cls, path) -> "ScoreTable":
        table = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["observer", "sequence", "condition", "score"]:
                raise DataFormatError(f"{path}: expected columns observer,sequence,condition,score")
            for lineno, row in enumerate(reader, start=2):
                try:
                    table.add(row["observer"], row["sequence"], row["condition"], row["score"])
                except (ValueError, TypeError) as exc:
                    raise DataFormatError(f"{path}:{lineno}: {exc}") from None
        return table


@dataclass(frozen=True)
class DmosResult:
    sequence: str
    condition: str
    value: float
    ci_low: float
    ci_high: float
    n: int


def dmos(table: ScoreTable, sequence: str, condition: str) -> DmosResult:
    """100 minus the mean (reference - test) score difference, with a 95% CI.

    The interval is +-1.96 * s / sqrt(N) using the sample standard deviation
    of the differences (zero width when N == 1).
    """
    ref = table.scores(sequence, REFERENCE)
    test = table.scores(sequence, condition)
    if set(ref) != set(test):
        missing = sorted(set(ref) ^ set(test))
        raise MissingScoreError(f"{sequence}: observers {missing} lack a {REFERENCE} or {condition} score")
    obs = sorted(ref)
    diffs = np.array([ref[o] - test[o] for o in obs])
    value = 100.0 - diffs.mean()
    half = Z95 * diffs.std(ddof=1) / math.sqrt(diffs.size) if diffs.size > 1 else 0.0
    return DmosResult(sequence, condition, float(value), float(value - half), float(value + half), len(obs))


@dataclass(frozen=True)
class PValueTable:
    sequence: str
    results: dict  # (f_test, f_ref) -> TTestResult

    def p(self, f_test: str, f_ref: str) -> float:
        return self.results[(f_test, f_ref)].p_value

    def verdict(self, f_test: str, f_ref: str) -> str:
        return self.results[(f_test, f_ref)].verdict

    def matrix(self) -> list[list]:
        """Rows VFR/60/30 by columns 120/VFR/60; None above the diagonal."""
        return [[self.results[(r, c)].p_value if (r, c) in self.results else None for c in REF_CONDITIONS]
                for r in TEST_CONDITIONS]


def pairwise_table(table: ScoreTable, sequence: str) -> PValueTable:
    """Welch p-values for every (tested, reference) pair below the diagonal."""
    results = {}
    for i, f_test in enumerate(TEST_CONDITIONS):
        for f_ref in REF_CONDITIONS[:i + 1]:
            results[(f_test, f_ref)] = welch_t(table.column(sequence, f_test), table.column(sequence, f_ref))
    return PValueTable(sequence, results)


def write_dmos_csv(path, results: Iterable[DmosResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sequence", "condition", "dmos", "ci_low", "ci_high", "n"])
        for r in results:
            w.writerow([r.sequence, r.condition, f"{r.value:.4f}", f"{r.ci_low:.4f}", f"{r.ci_high:.4f}", r.n])


def write_pvalue_csv(path, tables: Iterable[PValueTable]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sequence", "f_test", "f_ref", "t", "df", "p_value", "verdict"])
        for tab in tables:
            for (f_test, f_ref), r in tab.results.items():
                w.writerow([tab.sequence, f_test, f_ref, f"{r.t_statistic:.6g}", f"{r.degrees_of_freedom:.6g}",
                            f"{r.p_value:.6f}", r.verdict])
