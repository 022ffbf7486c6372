"""DMOS and Welch tests on a simulated panel.

Twenty observers score one sequence under four conditions. The 30 fps
version is rated clearly worse, VFR and 60 fps only marginally so.
"""

import numpy as np

from vfrate.stats import CONDITIONS, ScoreTable, dmos, pairwise_table

rng = np.random.default_rng(5)
penalty = {"120fps": 0.0, "VFR": 1.0, "60fps": 2.0, "30fps": 18.0}
rows = []
for o in range(20):
    base = rng.uniform(65, 85)
    for c in CONDITIONS:
        rows.append((f"obs{o:02d}", "harbour", c, float(np.clip(base - penalty[c] + rng.normal(0, 3), 0, 100))))
table = ScoreTable(rows)

print("DMOS with 95% confidence interval")
for c in CONDITIONS:
    r = dmos(table, "harbour", c)
    print(f"  {c:7s} {r.value:6.2f}  [{r.ci_low:6.2f}, {r.ci_high:6.2f}]")

tab = pairwise_table(table, "harbour")
print("\nWelch p-values (rows tested against columns)")
print("         " + "".join(f"{c:>10s}" for c in ("120fps", "VFR", "60fps")))
for name, row in zip(("VFR", "60fps", "30fps"), tab.matrix()):
    print(f"  {name:6s} " + "".join(f"{'':>10s}" if p is None else f"{p:10.4f}" for p in row))
print("\n30fps vs 120fps:", tab.verdict("30fps", "120fps"))
print("VFR vs 120fps:  ", tab.verdict("VFR", "120fps"))
