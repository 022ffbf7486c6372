import re
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", getattr(rep, "nodeid", ""))
            if not m or rep.when not in ("call", "setup"):
                continue
            n = int(m.group(1))
            status = "PASS" if outcome == "passed" else "FAIL"
            if lines.get(n, ("PASS",))[0] == "FAIL":
                continue
            notes = "; ".join(f"{k}={v}" for k, v in rep.user_properties)
            lines[n] = (status, m.group(2), notes)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        status, name, notes = lines[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}  {name}" + (f"  [{notes}]" if notes else ""))
