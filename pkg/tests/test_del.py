from __future__ import annotations

from fractions import Fraction

import pytest

from oddnormal.digits import digit_change_count_scan
from oddnormal.measure import mu_hat
from oddnormal.normality.del_sums import (R_of, del_decompose, del_series, eta_of, evaluate_grid, open_range,
                                          set_U1, set_U1_union, set_V1, u1_containment, xi_of)
from oddnormal.errors import BudgetExceeded


def test_V1_examples():
    v = set_V1(3, 16)
    assert (v.R, v.R0, v.order) == (4, 2, 2)
    assert v.members == list(range(2, 17, 2))
    v = set_V1(3, 1)
    assert (v.R, v.R0, v.members) == (1, 1, [1])


@pytest.mark.parametrize("r,N", [(3, 100), (5, 333), (7, 1024), (9, 77), (11, 4096)])
def test_V1_floor_count(r, N):
    v = set_V1(r, N)
    assert len(v.members) == N // v.order
    assert v.scan_agrees
    assert v.members == [u for u in range(1, N + 1) if (r**u - 1) % (1 << v.R0) == 0]


def brute_below(xi, sched, ell, alpha):
    lo, hi = sched.K[ell - 1], sched.K[ell] - 1
    return digit_change_count_scan(xi, lo, hi) < alpha * (sched.K[ell] - sched.K[ell - 1] + 1)


def test_U1_vs_scan_oracle(fib):
    N, alpha = 300, Fraction(1, 10)
    R = R_of(N)
    ells = list(open_range(fib, R))
    assert ells == [4, 5]
    for v in (1, 2, 3, 7):
        union = set()
        for ell in ells:
            got = set_U1(v, ell, 1, 3, N, fib, alpha)
            want = [u for u in range(1, N + 1)
                    if brute_below(xi_of(eta_of(1, 3, u, v), R), fib, ell, alpha)]
            assert got == want
            assert all(1 <= u <= N for u in got)
            union |= set(got)
        assert sorted(union) == set_U1_union(v, 1, 3, N, fib, alpha)


def test_U1_outside_window_rejected(fib):
    with pytest.raises(ValueError):
        set_U1(1, 2, 1, 3, 300, fib)


@pytest.mark.parametrize("v", [1, 2, 4, 5])
def test_U1_containment(fib, v):
    for ell in (4, 5):
        rep = u1_containment(v, ell, 1, 3, 300, fib)
        assert rep.holds
        assert rep.w_star <= rep.w_star_bound


def test_small_grid_frequencies(desk):
    g = evaluate_grid(1, 3, 2, desk, 1e-9)
    etas = sorted(eta_of(1, 3, u, v) for u in (1, 2) for v in (1, 2))
    assert etas == [6, 18, 24, 72]
    d = del_decompose(1, 3, 2, desk, grid=g)
    assert float(d.I) == pytest.approx(sum(mu_hat(desk, e).abs for e in etas), abs=1e-15)


def test_decompose_fine_schedule(fib):
    d = del_decompose(1, 3, 64, fib, 1e-9)
    assert d.identity_holds
    assert (d.t, d.T) == (3, 5)
    assert d.I21 > 0 and d.J1 > 0
    assert d.El_violations == 0 and d.El_checked > 0
    assert float(d.I) <= 64 * 64 * (1 + 1e-9)


def test_I1_counts_V1_columns(desk):
    d = del_decompose(1, 3, 16, desk)
    assert d.V1 == list(range(2, 17, 2))
    g = evaluate_grid(1, 3, 16, desk, 1e-9)
    assert float(d.I1) == pytest.approx(g.mag[:, 1::2].sum(), rel=1e-14)


def test_series_properties(desk):
    s = del_series(1, 3, 64, desk, decompose=False)
    assert all(inc >= 0 for inc in s.increments)
    assert all(p <= cap * (1 + 1e-9) for p, cap in zip(s.partial_sums, s.crude_cap))


def test_budget_cap(desk):
    with pytest.raises(BudgetExceeded):
        del_series(1, 3, 8192, desk)


def test_time_budget_partial(desk):
    with pytest.raises(BudgetExceeded) as exc:
        evaluate_grid(1, 3, 64, desk, 1e-9, evaluator=lambda e: mu_hat(desk, e, memo=False), time_budget=0.0)
    assert exc.value.partial is not None and exc.value.partial.mag.shape[1] >= 1
