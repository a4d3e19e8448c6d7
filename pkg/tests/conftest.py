import math

import numpy as np
import pytest

from haarstein.rng import RngStream


def within_se(samples, target, k=4.0):
    """True when the sample mean is within ``k`` standard errors of ``target``."""
    x = np.asarray(samples)
    se = x.std(ddof=1) / math.sqrt(x.size)
    return abs(x.mean() - target) <= k * se


@pytest.fixture
def stream():
    return RngStream(20240601)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(k: int, ok: bool, detail: str):
    """Store and print the verdict for acceptance criterion ``k``."""
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[k] = (ok, line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k][1])
