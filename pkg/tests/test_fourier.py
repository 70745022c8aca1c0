from __future__ import annotations

import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oddnormal.errors import DepthSaturation
from oddnormal.measure import (E_block, convolution_atoms, decay_envelope, lyons_bound, lyons_bound_exact,
                               mu_hat, mu_hat_many)
from oddnormal.measure.fourier import clear_memo
from oddnormal.schedule import make_schedule

half, third = Fraction(1, 2), Fraction(1, 3)


def atom_oracle(sched, eta):
    """Exact atom sum of e(eta x) for a small terminal schedule."""
    L = sched.K[-1]
    return sum(float(m) * cmath.exp(2j * math.pi * (eta * x % (1 << L)) / (1 << L))
               for x, m in convolution_atoms(sched).items())


def test_E_block_examples():
    s = make_schedule("explicit", K=[0, 2, 8], eps=[0, 0])
    one = E_block(s, 2, 1 << 8)
    assert (one.re, one.im, one.err) == (1.0, 0.0, 0.0)
    for eta in (1, 2):
        z = E_block(s, 1, eta)
        assert (z.re, z.im) == (0.0, 0.0)


def test_mu_hat_examples():
    s0 = make_schedule("explicit", K=[0, 1], eps=[0])
    assert mu_hat(s0, 1).value == 0 and mu_hat(s0, 2).value == 1
    s1 = make_schedule("explicit", K=[0, 1], eps=[third])
    assert mu_hat(s1, 1).re == pytest.approx(1 / 3, abs=1e-15)
    assert mu_hat(s1, 0).value == 1 and mu_hat(s1, 0).err == 0


SMALL = make_schedule("explicit", K=[0, 2, 5, 9, 14], eps=[third, half, Fraction(1, 5), Fraction(1, 7)])


@given(st.integers(-(2**20), 2**20))
def test_mu_hat_vs_atoms(eta):
    fv = mu_hat(SMALL, eta, 1e-10)
    ref = atom_oracle(SMALL, eta)
    assert abs(fv.value - ref) <= fv.err + 1e-10 + 1e-12


@given(st.integers(1, 2**200))
def test_mu_hat_conjugate_and_bounded(eta):
    s = make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic")
    a, b = mu_hat(s, eta), mu_hat(s, -eta)
    assert a.re == b.re and a.im == -b.im
    assert a.abs <= 1 + a.err


def test_tight_tol_uses_mp_path_consistently():
    s = make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic")
    clear_memo()
    for eta in (12345, 3**40 + 7, 2**70 + 1):
        lo = mu_hat(s, eta, 1e-9, memo=False)
        hi = mu_hat(s, eta, 1e-25, memo=False)
        assert abs(lo.value - complex(hi.value)) <= lo.err + float(hi.err) + 1e-15


def test_mu_hat_many_matches_serial():
    s = make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic")
    etas = [3**u * (3**v - 1) for u in range(1, 9) for v in range(1, 9)]
    par = mu_hat_many(s, etas, 1e-9, threads=4)
    ser = [mu_hat(s, e, 1e-9) for e in etas]
    assert [(p.re, p.im) for p in par] == [(q.re, q.im) for q in ser]


def test_depth_saturation_for_rule_schedules():
    s = make_schedule("geometric", K_base=10)
    with pytest.raises(DepthSaturation):
        mu_hat(s, 1 << (s.K[-1] + 5))


def test_lyons_direct_formula():
    s = make_schedule("explicit", K=[0, 5, 15, 30], eps=[1, Fraction(1, 5), Fraction(1, 10)])
    assert lyons_bound_exact(s, 2**20) == Fraction(2, 100) + Fraction(1, 10) + Fraction(2, 10) + Fraction(1, 2**10)


def test_lyons_geometric_far_range():
    s = make_schedule("geometric", K_base=10)
    b = lyons_bound_exact(s, 2**999)
    assert b == Fraction(1, 12) + Fraction(1, 4) + Fraction(1, 3) + Fraction(1, 2**900)
    assert lyons_bound(s, 2**999) == pytest.approx(2 / 3)


@given(st.integers(2**4, 2**255))
def test_lyons_capped_and_respected(n):
    s = make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic")
    b = lyons_bound(s, n)
    assert b <= 1
    assert mu_hat(s, n).abs <= b + 1e-9


def test_envelope_examples():
    assert decay_envelope(math.exp(math.e**4), 0.5) == pytest.approx(0.5)
    assert decay_envelope(10**6, 0.1) == pytest.approx(0.4194, abs=1e-3)
    assert decay_envelope(10**6, 0.999999) == pytest.approx(1, abs=1e-5)
    with pytest.raises(ValueError):
        decay_envelope(8, 0.5)
