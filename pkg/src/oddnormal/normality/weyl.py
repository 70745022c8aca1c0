"""Weyl sums and base-b digit statistics for dyadic rationals x = X / 2^P."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import PrecisionStarvation

GUARD_BITS = 16
PRECISION_MARGIN = 40
ROUNDING_ERR = 4 * 2.0**-53  # per evaluation of e(.) from an exact fraction


@dataclass(frozen=True)
class DyadicApprox:
    """x = X / 2^P. ``exact`` means x itself is the number of interest, not a truncation."""

    X: int
    P: int
    exact: bool = False

    def __post_init__(self):
        if self.P < 0 or not 0 <= self.X < (1 << self.P) or (self.P == 0 and self.X != 0):
            raise ValueError("need 0 <= X < 2^P")

    @property
    def value(self) -> Fraction:
        return Fraction(self.X, 1 << self.P)

    @classmethod
    def from_fraction(cls, q, P: int) -> "DyadicApprox":
        """floor(q 2^P) / 2^P; exact when q is a dyadic rational with denominator <= 2^P."""
        q = Fraction(q)
        if not 0 <= q < 1:
            raise ValueError("x must lie in [0, 1)")
        num = q.numerator << P
        X, rem = divmod(num, q.denominator)
        return cls(X, P, exact=rem == 0)

    @classmethod
    def from_digits(cls, digits, exact: bool = False) -> "DyadicApprox":
        X = 0
        for d in digits:
            X = 2 * X + int(d)
        return cls(X, len(digits), exact)


def required_precision(b: int, N: int) -> int:
    return N * math.ceil(math.log2(b)) + PRECISION_MARGIN


@dataclass(frozen=True)
class WeylReport:
    b: int
    h: int
    N: int
    value: complex
    arith_err: float
    trace: tuple[complex, ...] = ()  # running averages (1/n) sum_{m <= n}

    @property
    def abs(self) -> float:
        return abs(self.value)

    @property
    def re(self) -> float:
        return self.value.real


def frac_parts(x: DyadicApprox, b: int, h: int, N: int) -> list[int]:
    """Numerators of {h x b^n} over 2^P for n = 1..N, exactly."""
    mask = (1 << x.P) - 1
    y = (h * x.X) & mask
    out = []
    for _ in range(N):
        y = (y * b) & mask
        out.append(y)
    return out


def weyl_sum(x: DyadicApprox, b: int, h: int, N: int, trace: bool = False) -> WeylReport:
    """(1/N) sum_{n=1}^{N} e(h x b^n) with fractional parts formed in exact integers."""
    if b < 2 or h == 0 or N < 1:
        raise ValueError("need b >= 2, h != 0, N >= 1")
    if not x.exact:
        need = required_precision(b, N)
        if x.P < need:
            raise PrecisionStarvation(need, x.P)
        trunc = 2 * math.pi * abs(h) * _pow_ratio(b, N, x.P)
    else:
        trunc = 0.0
    scale = 2.0**-x.P if x.P < 1000 else None
    total = 0j
    running = []
    for n, y in enumerate(frac_parts(x, b, h, N), start=1):
        f = y * scale if scale is not None else _to_unit_float(y, x.P)
        total += cmath.exp(2j * math.pi * f)
        if trace:
            running.append(total / n)
    return WeylReport(b, h, N, total / N, trunc + ROUNDING_ERR, tuple(running))


def _to_unit_float(y: int, P: int) -> float:
    sh = max(0, P - 60)
    return math.ldexp(float(y >> sh), sh - P)


def _pow_ratio(b: int, N: int, P: int) -> float:
    """b^N 2^-P as a float, rounded up and safe for large exponents."""
    lg = N * math.log2(b) - P
    return 2.0 ** (lg + 1e-9) if lg > -1070 else 0.0


# -- base-b digits ---------------------------------------------------------------


def valid_horizon(x: DyadicApprox, b: int) -> int | None:
    """Largest n with b^n <= 2^(P - guard); None (unbounded) for exact x."""
    if x.exact:
        return None
    bits = x.P - GUARD_BITS
    if bits < 0:
        return 0
    n = int(bits / math.log2(b))
    while b ** (n + 1) <= 1 << bits:
        n += 1
    while n > 0 and b**n > 1 << bits:
        n -= 1
    return n


def base_digits(x: DyadicApprox, b: int, count: int) -> tuple[list[int], int | None]:
    """First ``count`` base-b digits of X / 2^P and the valid horizon."""
    if b < 2:
        raise ValueError("b must be >= 2")
    horizon = valid_horizon(x, b)
    if horizon is not None and count > horizon:
        raise ValueError(f"count {count} exceeds the valid horizon {horizon}")
    mask = (1 << x.P) - 1
    y, out = x.X, []
    for _ in range(count):
        y *= b
        out.append(y >> x.P)
        y &= mask
    return out, horizon


@dataclass(frozen=True)
class BlockFreq:
    b: int
    k: int
    depth: int
    counts: np.ndarray  # indexed by the block read as a base-b number
    max_deviation: float

    @property
    def freqs(self) -> np.ndarray:
        return self.counts / max(1, self.counts.sum())


def block_freq(x: DyadicApprox, b: int, k: int, depth: int) -> BlockFreq:
    """Sliding-window counts of all b^k blocks over the first ``depth`` digits."""
    if k < 1 or depth < k:
        raise ValueError("need 1 <= k <= depth")
    digits, _ = base_digits(x, b, depth)
    return block_freq_of_digits(digits, b, k)


def block_freq_of_digits(digits, b: int, k: int) -> BlockFreq:
    d = np.asarray(digits, dtype=np.int64)
    windows = len(d) - k + 1
    code = np.zeros(windows, dtype=np.int64)
    for j in range(k):
        code = code * b + d[j:j + windows]
    counts = np.bincount(code, minlength=b**k)
    dev = float(np.max(np.abs(counts / windows - b**-k)))
    return BlockFreq(b, k, len(d), counts, dev)
