"""Exact cylinder and interval masses of mu[K, eps]."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from ..errors import DepthSaturation, ScheduleError
from ..schedule import ParamSchedule


def _block_factor(eps: Fraction, nbits: int, zero: bool) -> Fraction:
    # mass of a prefix of nbits digits of one block, from the two-stage draw
    spread = (1 - eps) / (1 << nbits)
    return eps + spread if zero else spread


def cylinder_mass(sched: ParamSchedule, prefix: Sequence[int]) -> Fraction:
    """mu{x : d_k(x) = a_k for 1 <= k <= n} as an exact rational."""
    bits = [int(a) for a in prefix]
    if any(a not in (0, 1) for a in bits):
        raise ValueError("prefix bits must be 0 or 1")
    n = len(bits)
    mass = Fraction(1)
    K = sched.K
    for ell in range(1, sched.num_blocks + 1):
        lo = K[ell - 1]
        if lo >= n:
            return mass
        hi = min(K[ell], n)
        seg = bits[lo:hi]
        mass *= _block_factor(sched.eps[ell - 1], hi - lo, not any(seg))
    if n > K[-1]:
        if sched.saturated:
            raise DepthSaturation(f"prefix length {n} exceeds materialized K_L = {K[-1]}")
        # terminal schedule: every later digit is 0 almost surely
        if any(bits[K[-1]:]):
            return Fraction(0)
    return mass


def interval_mass(sched: ParamSchedule, ell: int, index: Sequence[int]) -> Fraction:
    """m_i for i = (i_1, ..., i_l), by multiplying the per-generation ratios."""
    if len(index) != ell:
        raise ValueError(f"index vector must have length {ell}")
    if ell > sched.num_blocks:
        raise ScheduleError(f"generation {ell} beyond the schedule")
    mass = Fraction(1)
    for j, i in enumerate(index, start=1):
        width = sched.width(j)
        if not 0 <= i < (1 << width):
            raise ValueError(f"i_{j} = {i} outside J_{j} = [0, 2^{width})")
        mass *= _block_factor(sched.eps[j - 1], width, i == 0)
    return mass


def interval_prefix(sched: ParamSchedule, index: Sequence[int]) -> list[int]:
    """Binary digits d_1..d_{K_l} of the left endpoint of the interval I_i."""
    bits: list[int] = []
    for j, i in enumerate(index, start=1):
        width = sched.width(j)
        bits.extend((i >> (width - 1 - t)) & 1 for t in range(width))
    return bits


def generation_masses(sched: ParamSchedule, ell: int) -> list[Fraction]:
    """All m_i over I_l in lexicographic order (small schedules only)."""
    total_bits = sched.K[ell]
    if total_bits > 20:
        raise ValueError("generation too large to enumerate")
    out = [Fraction(1)]
    for j in range(1, ell + 1):
        width = sched.width(j)
        zero = _block_factor(sched.eps[j - 1], width, True)
        other = _block_factor(sched.eps[j - 1], width, False)
        out = [m * (zero if i == 0 else other) for m in out for i in range(1 << width)]
    return out


def convolution_atoms(sched: ParamSchedule) -> dict[int, Fraction]:
    """Distribution of X * 2^{K_L} for a terminal schedule, by convolving the block laws.

    Each block law is eps delta_0 + (1 - eps) * uniform on the 2^w digit patterns
    of that block. Independent of the blockwise mass formulas above.
    """
    if not sched.terminal or sched.K[-1] > 20:
        raise ValueError("convolution enumeration needs a small terminal schedule")
    L = sched.K[-1]
    dist = {0: Fraction(1)}
    for ell in range(1, sched.num_blocks + 1):
        lo, hi = sched.K[ell - 1], sched.K[ell]
        eps = sched.eps[ell - 1]
        law: dict[int, Fraction] = {}
        for pattern in range(1 << (hi - lo)):
            # the block's value sum_{k in B} d_k 2^{-k}, scaled by 2^L
            atom = pattern << (L - hi)
            law[atom] = law.get(atom, Fraction(0)) + (1 - eps) / (1 << (hi - lo))
        law[0] += eps
        new: dict[int, Fraction] = {}
        for a, pa in dist.items():
            for b, pb in law.items():
                new[a + b] = new.get(a + b, Fraction(0)) + pa * pb
        dist = new
    return dist


def cylinder_mass_enumerated(sched: ParamSchedule, prefix: Sequence[int]) -> Fraction:
    atoms = convolution_atoms(sched)
    L, n = sched.K[-1], len(prefix)
    if n > L:
        raise ValueError("prefix longer than the enumerated depth")
    p = 0
    for a in prefix:
        p = 2 * p + int(a)
    lo, hi = p << (L - n), (p + 1) << (L - n)
    return sum((m for x, m in atoms.items() if lo <= x < hi), Fraction(0))
