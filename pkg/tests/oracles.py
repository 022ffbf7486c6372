"""Independent reference implementations used only by the tests.

They are deliberately naive: exact rational arithmetic, explicit loops and
numerical quadrature, sharing no code with the package.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np


def gini_exact(counts) -> Fraction:
    n = sum(counts)
    return 1 - sum(Fraction(c, n) ** 2 for c in counts)


def brute_force_split(X, y, features):
    """Exhaustive best split with exact Gini gains.

    Returns (feature, threshold, gain) or None. Ties: lowest feature, then
    lowest threshold. Thresholds are float midpoints of consecutive distinct
    values, falling back to the upper value when the midpoint rounds down.
    """
    X = np.asarray(X, dtype=np.float64)
    y = list(int(v) for v in y)
    classes = sorted(set(y))
    n = len(y)
    parent = gini_exact([y.count(c) for c in classes])
    best = None
    for f in sorted(features):
        values = sorted(set(X[:, f].tolist()))
        for a, b in zip(values[:-1], values[1:]):
            t = a + (b - a) / 2.0
            if not a < t <= b:
                t = b
            left = [y[i] for i in range(n) if X[i, f] < t]
            right = [y[i] for i in range(n) if X[i, f] >= t]
            g = parent
            for part in (left, right):
                g -= Fraction(len(part), n) * gini_exact([part.count(c) for c in classes])
            if g > 0 and (best is None or g > best[2]):
                best = (f, t, g)
    return best


def sad_oracle(cur, prev, block, rng):
    """Exhaustive SAD block matching on edge-replicated reference.

    Vector (dx, dy) means content moved by (dx, dy): block at (y, x) in cur is
    compared with prev at (y - dy, x - dx). Ties: smallest |dx|+|dy|, then
    first in row-major (dy, dx) order.
    """
    cur = np.asarray(cur, dtype=np.int64)
    h, w = cur.shape
    ref = np.pad(np.asarray(prev, dtype=np.int64), rng, mode="edge")
    rows, cols = -(-h // block), -(-w // block)
    out = np.zeros((rows, cols, 2), dtype=np.int64)
    for r in range(rows):
        for c in range(cols):
            y0, x0 = r * block, c * block
            blk = cur[y0:y0 + block, x0:x0 + block]
            bh, bw = blk.shape
            cands = []
            for dy in range(-rng, rng + 1):
                for dx in range(-rng, rng + 1):
                    oy, ox = y0 - dy + rng, x0 - dx + rng
                    s = int(np.abs(blk - ref[oy:oy + bh, ox:ox + bw]).sum())
                    cands.append((s, abs(dx) + abs(dy), len(cands), dx, dy))
            s, _, _, dx, dy = min(cands)
            out[r, c] = (dx, dy)
    return out


def t_two_tailed_quadrature(t: float, df: float) -> float:
    """P(|T| >= |t|) by integrating the Student t density with mpmath."""
    mpmath.mp.dps = 30
    v = mpmath.mpf(df)
    c = mpmath.gamma((v + 1) / 2) / (mpmath.sqrt(v * mpmath.pi) * mpmath.gamma(v / 2))
    dens = lambda x: c * (1 + x * x / v) ** (-(v + 1) / 2)
    return float(2 * mpmath.quad(dens, [abs(mpmath.mpf(t)), mpmath.inf]))


def welch_oracle(a, b):
    """Welch t, df and two-tailed p from textbook formulas in mpmath."""
    mpmath.mp.dps = 30
    a = [mpmath.mpf(float(v)) for v in a]
    b = [mpmath.mpf(float(v)) for v in b]
    ma, mb = sum(a) / len(a), sum(b) / len(b)
    va = sum((v - ma) ** 2 for v in a) / (len(a) - 1) / len(a)
    vb = sum((v - mb) ** 2 for v in b) / (len(b) - 1) / len(b)
    t = (ma - mb) / mpmath.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (len(a) - 1) + vb ** 2 / (len(b) - 1))
    return float(t), float(df), t_two_tailed_quadrature(float(t), float(df))


def macro_oracle(counts):
    """Macro precision and recall from a square count matrix via loops."""
    n = len(counts)
    ps, rs = [], []
    for k in range(n):
        tp = counts[k][k]
        col = sum(counts[i][k] for i in range(n))
        row = sum(counts[k][j] for j in range(n))
        ps.append(tp / col if col else 0.0)
        rs.append(tp / row if row else 0.0)
    return sum(ps) / n, sum(rs) / n
