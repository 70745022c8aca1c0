"""Binary-digit machinery on big naturals.

Digits are indexed from 0 at the least significant end: eta = sum d_k 2^k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .schedule import ParamSchedule, frac_str, to_fraction

DEFAULT_ALPHA = Fraction(1, 10)
BRUTE_K_MAX = 24


def digit(eta: int, k: int) -> int:
    if eta < 0 or k < 0:
        raise ValueError("digit needs eta >= 0 and k >= 0")
    return (eta >> k) & 1


def frac_part_scaled(eta: int, k: int) -> Fraction:
    """{eta / 2^k} as an exact rational."""
    if eta < 0 or k < 0:
        raise ValueError("frac_part_scaled needs eta >= 0 and k >= 0")
    return Fraction(eta & ((1 << k) - 1), 1 << k)


def reduce_mod_pow2(eta: int, R: int) -> int:
    if eta < 0 or R < 1:
        raise ValueError("reduce_mod_pow2 needs eta >= 0 and R >= 1")
    return eta & ((1 << R) - 1)


def digit_change_count(xi: int, a: int, b: int) -> int:
    """#{k in [a, b] : d_{k-1}(xi) != d_k(xi)}, with d_{-1} = 0.

    Bit k of xi ^ (xi << 1) is exactly d_k xor d_{k-1}.
    """
    if xi < 0 or a < 0 or b < a:
        raise ValueError("need xi >= 0 and 0 <= a <= b")
    changes = xi ^ (xi << 1)
    window = (changes >> a) & ((1 << (b - a + 1)) - 1)
    return window.bit_count()


def digit_change_count_scan(xi: int, a: int, b: int) -> int:
    """Direct two-digit scan, kept as an independent oracle."""
    s = bin(xi)[2:][::-1]
    d = lambda k: int(s[k]) if 0 <= k < len(s) else 0  # noqa: E731
    return sum(1 for k in range(a, b + 1) if d(k - 1) + 2 * d(k) in (1, 2))


# -- alpha -------------------------------------------------------------------


def alpha_inequality_holds(alpha) -> bool:
    """2^(1/8) > (2a)^a (1-2a)^(1/2-a), the sufficient condition for the count bound."""
    a = float(to_fraction(alpha))
    if not 0 < a < 0.5:
        return False
    lhs = 0.125 * math.log(2)
    rhs = a * math.log(2 * a) + (0.5 - a) * math.log(1 - 2 * a)
    return lhs > rhs


def validate_alpha(alpha) -> Fraction:
    """Accept alpha only inside (0, 1/4) and satisfying the sufficient inequality."""
    a = to_fraction(alpha)
    if not 0 < a < Fraction(1, 4):
        raise ValueError(f"alpha = {a} must lie in (0, 1/4)")
    if not alpha_inequality_holds(a):
        raise ValueError(f"alpha = {a} fails 2^(1/8) > (2a)^a (1-2a)^(1/2-a)")
    return a


# -- per-block profile ---------------------------------------------------------


@dataclass(frozen=True)
class BlockChange:
    ell: int
    count: int
    threshold: Fraction
    below: bool


@dataclass(frozen=True)
class DigitChangeProfile:
    xi: int
    per_block: tuple[BlockChange, ...]

    def csv_rows(self) -> list[list[str]]:
        return [
            [str(b.ell), str(b.count), str(b.threshold.numerator),
             str(b.threshold.denominator), "1" if b.below else "0"]
            for b in self.per_block
        ]


PROFILE_HEADER = ["ell", "count", "threshold_num", "threshold_den", "below"]


def bar_window(sched: ParamSchedule, ell: int) -> tuple[int, int]:
    """Pair positions scanned for N_l: k in [K_{l-1}, K_l - 1]."""
    lo, hi = sched.bar_block(ell)
    return lo + 1, hi


def profile(xi: int, sched: ParamSchedule, ell_range: Iterable[int], alpha=DEFAULT_ALPHA) -> DigitChangeProfile:
    a = validate_alpha(alpha)
    rows = []
    for ell in ell_range:
        lo, hi = bar_window(sched, ell)
        n = digit_change_count(xi, lo, hi)
        size = sched.K[ell] - sched.K[ell - 1] + 1  # #bar-B_l
        thr = a * size
        rows.append(BlockChange(ell, n, thr, n < thr))
    return DigitChangeProfile(xi, tuple(rows))


# -- low-change strings ---------------------------------------------------------


def count_low_change_strings(k: int, m: int) -> int:
    """Binary strings of length k with at most m adjacent changes: 2 sum_{j<=m} C(k-1, j)."""
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    m = min(m, k - 1)
    return 2 * sum(math.comb(k - 1, j) for j in range(m + 1))


def count_low_change_brute(k: int, m: int) -> int:
    """Enumerate all 2^k strings (k <= 24)."""
    if not 1 <= k <= BRUTE_K_MAX:
        raise ValueError(f"brute enumeration limited to 1 <= k <= {BRUTE_K_MAX}")
    x = np.arange(1 << k, dtype=np.uint32)
    inner = np.uint32((1 << (k - 1)) - 1)
    changes = np.bitwise_count((x ^ (x >> np.uint32(1))) & inner)
    return int(np.count_nonzero(changes <= m))


def lemma_count_bound(k: int) -> int:
    """2^ceil(3k/4)."""
    return 1 << -(-3 * k // 4)


# -- 2-adic valuation -----------------------------------------------------------


def v2(n: int) -> int:
    if n == 0:
        raise ValueError("v2(0) is undefined")
    n = abs(n)
    return (n & -n).bit_length() - 1


def split_pow2(n: int) -> tuple[int, int]:
    """(2^v2(n), n / 2^v2(n)); the odd part keeps the sign of n."""
    e = v2(n)
    return 1 << e, n >> e if n > 0 else -((-n) >> e)


__all__ = [
    "DEFAULT_ALPHA", "BlockChange", "DigitChangeProfile", "PROFILE_HEADER",
    "alpha_inequality_holds", "bar_window", "count_low_change_brute",
    "count_low_change_strings", "digit", "digit_change_count",
    "digit_change_count_scan", "frac_part_scaled", "frac_str", "lemma_count_bound",
    "profile", "reduce_mod_pow2", "split_pow2", "v2", "validate_alpha",
]
