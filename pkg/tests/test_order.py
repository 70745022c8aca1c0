from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oddnormal.order import (is_minimal_order, lemma5a_constant, orbit_period, ord_pow2,
                             order_ratio_scan, pow_mod, residue_hit_count, residue_hit_table)


def test_pow_mod_examples():
    assert pow_mod(3, 2, 8) == 1
    assert pow_mod(5, 0, 7) == 1
    x = 3
    for _ in range(20):
        x = x * x % (1 << 24)
    assert pow_mod(3, 1 << 20, 1 << 24) == x


@pytest.mark.parametrize("r,k,o", [(3, 3, 2), (3, 5, 8), (3, 1, 1), (7, 3, 2), (5, 1, 1)])
def test_ord_examples(r, k, o):
    assert ord_pow2(r, k).ord == o


def test_ratio_scan_three():
    scan = order_ratio_scan(3, 30)
    assert all(rec.ratio == Fraction(1, 4) for rec in scan.records if rec.k >= 3)
    assert scan.min_ratio > 0


def test_ratio_seven_k3():
    rec = ord_pow2(7, 3)
    assert rec.ord == 2 and rec.ratio == Fraction(1, 4)


@given(st.integers(1, 200).map(lambda j: 2 * j + 1), st.integers(1, 14))
def test_ord_brute(r, k):
    m = 1 << k
    brute = next(n for n in range(1, m + 1) if pow(r, n, m) == 1 % m)
    assert ord_pow2(r, k).ord == brute
    assert is_minimal_order(r, k, brute)


def test_even_r_rejected():
    with pytest.raises(ValueError):
        ord_pow2(4, 5)


def test_residue_examples():
    assert residue_hit_count(2, 3, 3, 2) == 4
    assert residue_hit_count(2, 3, 3, 5) == 0


@given(st.sampled_from([3, 5, 7, 9, 11]), st.integers(1, 12), st.sampled_from([2, -2, 3, -3, 6, 12, 40]))
def test_residue_table_vs_brute(r, k, rho):
    m = 1 << k
    brute = np.zeros(m, dtype=np.int64)
    for e in range(m):
        brute[rho * pow(r, e, m) % m] += 1
    table = residue_hit_table(rho, r, k)
    assert np.array_equal(table, brute)
    assert table.sum() == m
    per = orbit_period(rho, r, k)
    assert set(np.unique(table).tolist()) <= {0, m // per}


def test_lemma5a_constant_values():
    assert [lemma5a_constant(r) for r in (3, 5, 7, 9)] == [4, 4, 8, 8]


def test_small_rho_rejected():
    with pytest.raises(ValueError):
        residue_hit_table(1, 3, 4)
