"""Multiplicative order modulo powers of two and residue-orbit counting."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .digits import v2

ORDER_HEADER = ["r", "k", "ord", "ratio_num", "ratio_den"]
K_SCAN_MAX = 40


def pow_mod(a: int, e: int, m: int) -> int:
    """a^e mod m (Python's built-in square-and-multiply)."""
    if m < 1 or e < 0:
        raise ValueError("pow_mod needs m >= 1 and e >= 0")
    return pow(a, e, m)


@dataclass(frozen=True)
class OrderRecord:
    r: int
    k: int
    ord: int
    ratio: Fraction

    def csv_row(self) -> list[str]:
        return [str(self.r), str(self.k), str(self.ord),
                str(self.ratio.numerator), str(self.ratio.denominator)]


_memo: dict[tuple[int, int], OrderRecord] = {}
_memo_lock = threading.Lock()


def _check_r(r: int):
    if r < 3 or r % 2 == 0:
        raise ValueError(f"r must be odd and >= 3, got {r}")


def _order_brute(r: int, m: int) -> int:
    x, n = r % m, 1
    while x != 1 % m:
        x = x * r % m
        n += 1
    return n


def ord_pow2(r: int, k: int) -> OrderRecord:
    """ord_{2^k}(r), computed by bisection over the exponents of 2 and then verified."""
    _check_r(r)
    if k < 1:
        raise ValueError("k must be >= 1")
    key = (r, k)
    rec = _memo.get(key)
    if rec is not None:
        return rec
    m = 1 << k
    one = 1 % m
    # the group of odd residues has 2^(k-1) elements, so the order is 2^e, e <= k-1;
    # r^(2^e) == 1 is monotone in e, so bisection finds the least such e
    if pow(r, 1 << (k - 1), m) == one:
        lo, hi = 0, k - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if pow(r, 1 << mid, m) == one:
                hi = mid
            else:
                lo = mid + 1
        order = 1 << lo
        minimal = order == 1 or pow(r, order // 2, m) != one
        if not minimal:
            order = _order_brute(r, m)
    else:  # cannot happen for odd r; kept so correctness never rests on it
        order = _order_brute(r, m)
    rec = OrderRecord(r, k, order, Fraction(order, m))
    with _memo_lock:
        _memo.setdefault(key, rec)
    return rec


def is_minimal_order(r: int, k: int, order: int) -> bool:
    """r^ord == 1 and r^(ord/p) != 1 for every prime p | ord."""
    m = 1 << k
    if pow(r, order, m) != 1 % m:
        return False
    n, p, primes = order, 2, set()
    while p * p <= n:
        while n % p == 0:
            primes.add(p)
            n //= p
        p += 1
    if n > 1:
        primes.add(n)
    return all(pow(r, order // p, m) != 1 % m for p in primes)


@dataclass
class OrderScan:
    r: int
    records: list[OrderRecord]

    @property
    def min_ratio(self) -> Fraction:
        return min(rec.ratio for rec in self.records)


def order_ratio_scan(r: int, k_max: int, k_min: int = 1) -> OrderScan:
    if k_max > K_SCAN_MAX:
        raise ValueError(f"k_max capped at {K_SCAN_MAX} for desk scale")
    return OrderScan(r, [ord_pow2(r, k) for k in range(k_min, k_max + 1)])


# -- residue orbits -------------------------------------------------------------


def _check_rho(rho: int):
    if abs(rho) <= 1:
        raise ValueError("|rho| must be >= 2")


def residue_hit_table(rho: int, r: int, k: int) -> np.ndarray:
    """counts[s] = #{m in [0, 2^k) : rho r^m == s mod 2^k} for every residue s.

    The sequence m -> rho r^m is periodic with period dividing ord_{2^k}(r), which
    divides 2^k; one period is walked and the counts scaled.
    """
    _check_rho(rho)
    _check_r(r)
    m = 1 << k
    period = ord_pow2(r, k).ord
    counts = np.zeros(m, dtype=np.int64)
    x, rr = rho % m, r % m
    for _ in range(period):
        counts[x] += 1
        x = x * rr % m
    return counts * (m // period)


def residue_hit_count(rho: int, r: int, k: int, sigma: int) -> int:
    m = 1 << k
    if not 0 <= sigma < m:
        raise ValueError("sigma must lie in [0, 2^k)")
    _check_rho(rho)
    _check_r(r)
    period = ord_pow2(r, k).ord
    x, rr, hits = rho % m, r % m, 0
    for _ in range(period):
        hits += x == sigma
        x = x * rr % m
    return hits * (m // period)


def orbit_period(rho: int, r: int, k: int) -> int:
    """Least period of m -> rho r^m mod 2^k: ord_{2^(k - v2(rho))}(r), or 1 if 2^k | rho."""
    e = v2(rho)
    if e >= k:
        return 1
    return ord_pow2(r, k - e).ord


def lemma5a_constant(r: int) -> int:
    """2^(v2(r^2 - 1) - 1): the sharp c(r) in max_s count <= c(r) rho_2 at large k."""
    return 1 << (v2(r * r - 1) - 1)
