from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings

from oddnormal.schedule import make_schedule

settings.register_profile("desk", max_examples=60, deadline=None)
settings.load_profile("desk")


@pytest.fixture
def desk():
    """K_l = 4^l (l <= 8), eps_l = 1/l."""
    return make_schedule("explicit", K=[0] + [4**ell for ell in range(1, 9)], eps="harmonic")


@pytest.fixture
def short4():
    return make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic")


@pytest.fixture
def fib():
    """Fine schedule whose (t, T) window is non-empty at desk-scale N."""
    K = [0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]
    return make_schedule("explicit", K=K, eps=[Fraction(1, 2)] * (len(K) - 1))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results, key=lambda c: (int(c.rstrip("abc")), c)):
        ok, detail = results[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")
