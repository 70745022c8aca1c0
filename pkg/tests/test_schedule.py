from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oddnormal.errors import DepthSaturation, ScheduleError
from oddnormal.schedule import (ParamSchedule, check_admissible, indices_tT, make_schedule, omega,
                                slow_growth_check)


def test_geometric_K3():
    assert make_schedule("geometric", K_base=10).K_at(3) == 1000


def test_canonical_eps5():
    assert make_schedule("canonical", K_base=10).eps_at(5) == Fraction(1, 5)


def test_explicit_accept_and_reject():
    s = make_schedule("explicit", K=[0, 4, 16, 64], eps=[1, Fraction(1, 2), Fraction(1, 3)])
    assert s.num_blocks == 3
    with pytest.raises(ScheduleError):
        make_schedule("explicit", K=[0, 4, 4], eps=[1, 1])


def test_eps_out_of_range_rejected():
    with pytest.raises(ScheduleError):
        make_schedule("explicit", K=[0, 4], eps=[Fraction(3, 2)])


def test_blocks():
    s = make_schedule("explicit", K=[0, 4, 16], eps="harmonic")
    assert s.block(1) == (1, 4)
    assert s.block(2) == (5, 16)
    assert s.bar_block(2) == (3, 15)


@pytest.mark.parametrize("K,R,t,T", [
    ([0, 4, 16, 64, 256, 1024], 100, 2, 4),
    ([0, 4, 16, 64], 16, 1, 2),
    ([0, 4, 16, 64], 1, 1, 1),
])
def test_indices(K, R, t, T):
    ip = indices_tT(make_schedule("explicit", K=K, eps="harmonic"), R)
    assert (ip.t, ip.T) == (t, T)


@given(st.integers(1, 1024 * 1024))
def test_indices_brute(R):
    K = [0, 4, 16, 64, 256, 1024, 4096, 1 << 20]
    s = make_schedule("explicit", K=K, eps="harmonic")
    ip = indices_tT(s, R)
    assert K[ip.T - 1] < R <= K[ip.T]
    assert min(ell for ell in range(1, len(K)) if R <= K[ell] ** 2) == ip.t
    assert ip.t <= ip.T


def test_indices_too_short():
    with pytest.raises(ScheduleError):
        indices_tT(make_schedule("explicit", K=[0, 4], eps="harmonic"), 100)


def test_rule_schedule_saturates():
    s = make_schedule("geometric", K_base=10)
    assert s.saturated
    with pytest.raises(DepthSaturation):
        indices_tT(s, 10**40)


def test_admissibility_geometric_computed_truth():
    # K_T^-2 at R = 10^6 is 10^-12 while the eps product over (t, T) is only 1/20
    rep = check_admissible(make_schedule("geometric", K_base=10), 2, [10**6])
    row = rep.rows[0]
    assert (row.t, row.T) == (3, 6)
    assert row.product == Fraction(1, 20)
    assert not row.passed


def test_admissibility_empty_product_fails():
    rep = check_admissible(make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic"), 2, [4])
    assert rep.rows[0].product == 1 and not rep.rows[0].passed


@given(st.fractions(min_value=Fraction(1, 100), max_value=10))
def test_admissibility_all_ones_fails(gamma):
    s = make_schedule("explicit", K=[0, 4, 16, 64, 256, 1024], eps=[1] * 5)
    assert not check_admissible(s, gamma, [10, 100, 1000]).all_passed


def test_admissibility_passes_when_eps_small():
    s = make_schedule("explicit", K=[0, 4, 16, 64, 256, 1024, 4096],
                      eps=[1, 1, 1, Fraction(1, 10**9), Fraction(1, 10**9), 1])
    rep = check_admissible(s, 2, [3000])
    assert rep.rows[0].passed


def test_omega():
    assert omega(log_x=16.0) == 4
    assert omega(math.exp(16)) == 4


@given(st.floats(1.0, 500.0))
def test_omega_monotone(L):
    assert omega(log_x=L) <= omega(log_x=L + math.log(2))


def test_slow_growth_report():
    grid = [float(v) for v in range(1, 400)]
    rep = slow_growth_check(4, 0.5, grid)
    holds = [r[3] for r in rep.rows]
    assert all(r[2] <= 1.5 * r[1] for r in rep.rows if r[3])
    assert any(holds)


@given(st.lists(st.integers(1, 50), min_size=1, max_size=6),
       st.lists(st.fractions(min_value=0, max_value=1), min_size=6, max_size=6))
def test_serialization_roundtrip(widths, eps):
    K = [0]
    for w in widths:
        K.append(K[-1] + w)
    s = make_schedule("explicit", K=K, eps=eps[: len(widths)])
    t = ParamSchedule.from_json(s.to_json())
    assert t == s and t.id == s.id


def test_rule_roundtrip():
    s = make_schedule("canonical", K_base=10)
    assert ParamSchedule.from_json(s.to_json()) == s
