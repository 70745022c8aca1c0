"""Fourier coefficients of mu[K, eps] with rigorous error bounds.

For eta > 0 write f_k = {eta / 2^k}. Each digit contributes the factor
(1 + e(f_k)) / 2 = e^{i pi f_k} cos(pi f_k), so

    E_l(eta) = exp(i pi S_l) prod_{k in B_l} cos(pi f_k),   S_l = sum_{k in B_l} f_k.

Factors with k <= v2(eta) equal 1 and the factor at k = v2(eta) + 1 is exactly
0, so the block holding that digit contributes exactly eps_l and all earlier
blocks contribute 1. Only later digits need floating point.

The top 64 bits W_k of each f_k are read straight out of the words of eta, so
arguments are exact up to 2^-64 and the phase sum is formed exactly in
integers. When the float budget cannot meet the tolerance the same
computation runs under mpmath at a precision chosen from the tolerance.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from ..digits import v2
from ..errors import DepthSaturation
from ..schedule import ParamSchedule

FLOAT_FACTOR_ERR = 2.0**-47  # per digit factor, magnitude and phase together
FLOAT_BLOCK_ERR = 2.0**-49  # per block: eps mixing and the running product
_MASK32 = np.uint64(0xFFFFFFFF)


@dataclass(frozen=True)
class FourierValue:
    eta: int
    re: object  # float or mpmath.mpf
    im: object
    err: float
    blocks_used: int

    @property
    def value(self) -> complex:
        return complex(float(self.re), float(self.im))

    @property
    def abs(self) -> float:
        return math.hypot(float(self.re), float(self.im))


@dataclass(frozen=True)
class BlockValue:
    re: object
    im: object
    err: float

    @property
    def abs(self) -> float:
        return math.hypot(float(self.re), float(self.im))


# -- digit words ------------------------------------------------------------------


def top_words(eta: int, ks: np.ndarray) -> np.ndarray:
    """W_k = floor({eta / 2^k} 2^64) for each k in ks (uint64), i.e. bits k-64..k-1 of eta."""
    ks = np.asarray(ks, dtype=np.int64)
    if ks.size == 0:
        return np.zeros(0, dtype=np.uint64)
    kmax = int(ks.max())
    nwords = (kmax >> 6) + 2
    shifted = eta << 64
    shifted &= (1 << (64 * nwords)) - 1
    ew = np.frombuffer(shifted.to_bytes(8 * nwords, "little"), dtype="<u8").astype(np.uint64)
    q = ks >> 6
    s = (ks & 63).astype(np.uint64)
    lo = ew[q] >> s
    hi = ew[q + 1] << ((np.uint64(64) - s) & np.uint64(63))
    return lo | np.where(s == 0, np.uint64(0), hi)


def _float_segments(eta: int, segs: Sequence[tuple[int, int]]):
    """Per segment [a, b]: (E as complex, |prod cos|) in float64."""
    ks = np.concatenate([np.arange(a, b + 1, dtype=np.int64) for a, b in segs])
    W = top_words(eta, ks)
    cosv = np.cos(np.pi * (W.astype(np.float64) * 2.0**-64))
    lengths = np.array([b - a + 1 for a, b in segs], dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    mags = np.multiply.reduceat(cosv, starts)
    hi = np.add.reduceat(W >> np.uint64(32), starts)
    lo = np.add.reduceat(W & _MASK32, starts)
    out = []
    for m, h, l in zip(mags.tolist(), hi.tolist(), lo.tolist()):
        s = ((h << 32) + l) % (1 << 65)  # S * 2^64 mod 2^65
        ang = math.pi * s * 2.0**-64
        out.append((complex(m * math.cos(ang), m * math.sin(ang)), abs(m)))
    return out


def _mp_segments(eta: int, segs: Sequence[tuple[int, int]], prec: int):
    """Same as _float_segments under mpmath at ``prec`` bits (caller sets workprec)."""
    mask = (1 << prec) - 1
    shifted = eta << prec
    out = []
    for a, b in segs:
        mag = mpmath.mpf(1)
        total = 0
        for k in range(a, b + 1):
            w = (shifted >> k) & mask
            total += w
            mag *= mpmath.cospi(mpmath.ldexp(mpmath.mpf(w), -prec))
        s = total % (1 << (prec + 1))
        out.append((mag * mpmath.expjpi(mpmath.ldexp(mpmath.mpf(s), -prec)), abs(mag)))
    return out


def _tail_bound(eta: int, k: int) -> float:
    """Upper bound for pi * eta * 2^-k, safe for huge eta."""
    sh = max(0, eta.bit_length() - 60)
    return math.pi * math.ldexp(float((eta >> sh) + 1), sh - k)


def _cutoff(eta: int, tol: float) -> int:
    # pi * eta * 2^-k < pi * 2^(bitlen - k) <= tol / 2
    return eta.bit_length() + max(0, math.ceil(math.log2(2 * math.pi / tol)))


def mp_precision(n_factors: int, tol: float) -> int:
    return max(64, math.ceil(math.log2(8 * max(n_factors, 1) / tol)) + 10)


# -- E_l ---------------------------------------------------------------------------


def E_block(sched: ParamSchedule, ell: int, eta: int, precision: int = 53) -> BlockValue:
    """E_l(eta) = prod_{k in B_l} (1 + e(eta 2^-k)) / 2 with a rounding bound."""
    lo, hi = sched.block(ell)
    if eta < 0:
        b = E_block(sched, ell, -eta, precision)
        return BlockValue(b.re, -b.im, b.err)
    xi = eta & ((1 << hi) - 1)  # periodicity in eta mod 2^{K_l}
    if xi == 0:
        return BlockValue(1.0, 0.0, 0.0)
    v = v2(xi)
    if v + 1 >= lo:  # v + 1 <= K_l since xi < 2^{K_l}; that factor is 0
        return BlockValue(0.0, 0.0, 0.0)
    n = hi - lo + 1
    if precision <= 53:
        (E, _), = _float_segments(xi, [(lo, hi)])
        return BlockValue(E.real, E.imag, n * FLOAT_FACTOR_ERR)
    with mpmath.workprec(precision):
        (E, _), = _mp_segments(xi, [(lo, hi)], precision)
        return BlockValue(+E.real, +E.imag, 8 * (n + 1) * 2.0**-precision)


def block_magnitudes(sched: ParamSchedule, eta: int, ells: Iterable[int]) -> dict[int, float]:
    """|E_l(eta)| in float64 for the given blocks (each within FLOAT_FACTOR_ERR * #B_l)."""
    return {ell: E_block(sched, ell, eta).abs for ell in ells}


# -- mu-hat ---------------------------------------------------------------------------

_memo: dict[tuple[str, int, float], FourierValue] = {}
_memo_lock = threading.Lock()


def clear_memo():
    with _memo_lock:
        _memo.clear()


def mu_hat(sched: ParamSchedule, eta: int, tol: float = 1e-9, memo: bool = True) -> FourierValue:
    """mu-hat(eta) with err >= |true value - (re + i im)|, err <= tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    eta = int(eta)
    if eta < 0:
        fv = mu_hat(sched, -eta, tol, memo)
        return FourierValue(eta, fv.re, -fv.im, fv.err, fv.blocks_used)
    if eta == 0:
        return FourierValue(0, 1.0, 0.0, 0.0, 0)
    key = (sched.id, eta, tol)
    if memo:
        hit = _memo.get(key)
        if hit is not None:
            return hit
    fv = _mu_hat_pos(sched, eta, tol)
    if memo:
        with _memo_lock:
            _memo.setdefault(key, fv)
    return fv


def _mu_hat_pos(sched: ParamSchedule, eta: int, tol: float) -> FourierValue:
    K = sched.K
    k0 = v2(eta) + 1  # the vanishing digit factor
    if k0 > K[-1]:
        if sched.terminal:
            return FourierValue(eta, 1.0, 0.0, 0.0, sched.num_blocks)
        raise DepthSaturation(f"eta = 2^{k0 - 1} * odd needs blocks beyond K_L = {K[-1]}")
    ell0 = sched.block_of(k0)
    eps0 = sched.eps[ell0 - 1]

    k_star = _cutoff(eta, tol)
    if k_star > K[-1]:
        if sched.saturated:
            raise DepthSaturation(f"eta needs digits up to {k_star}, beyond K_L = {K[-1]}")
        k_end, tail = K[-1], 0.0
    else:
        k_end, tail = k_star, _tail_bound(eta, k_star)

    if eps0 == 0:
        return FourierValue(eta, 0.0, 0.0, 0.0, ell0)

    segs, ells = [], []
    for ell in range(ell0 + 1, sched.num_blocks + 1):
        a = K[ell - 1] + 1
        if a > k_end:
            break
        segs.append((a, min(K[ell], k_end)))
        ells.append(ell)
    blocks_used = ells[-1] if ells else ell0
    n = sum(b - a + 1 for a, b in segs)

    float_err = n * FLOAT_FACTOR_ERR + (len(segs) + 1) * FLOAT_BLOCK_ERR
    if tail + float_err <= tol:
        acc = complex(float(eps0), 0.0)
        if segs:
            for (E, _), ell in zip(_float_segments(eta, segs), ells):
                e = float(sched.eps[ell - 1])
                acc *= e + (1 - e) * E
        return FourierValue(eta, acc.real, acc.imag, tail + float_err, blocks_used)

    prec = mp_precision(n + len(segs) + 1, tol)
    with mpmath.workprec(prec):
        acc = mpmath.mpc(mpmath.mpf(eps0.numerator) / eps0.denominator)
        for (E, _), ell in zip(_mp_segments(eta, segs, prec), ells):
            e = sched.eps[ell - 1]
            ef = mpmath.mpf(e.numerator) / e.denominator
            acc *= ef + (1 - ef) * E
        rerr = 8 * (n + 2 * len(segs) + 2) * 2.0**-prec
        return FourierValue(eta, +acc.real, +acc.imag, tail + rerr, blocks_used)


def mu_hat_many(sched: ParamSchedule, etas: Sequence[int], tol: float = 1e-9,
                threads: int = 1) -> list[FourierValue]:
    """Evaluate a frequency grid, optionally on a thread pool; order is preserved."""
    if threads <= 1:
        return [mu_hat(sched, e, tol) for e in etas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda e: mu_hat(sched, e, tol), etas))


# -- bounds ---------------------------------------------------------------------------


def lyons_block(sched: ParamSchedule, n: int) -> int:
    """The l with |n| in [2^{K_{l-1}-1}, 2^{K_l - 1}), l >= 2."""
    bl = abs(int(n)).bit_length()
    # |n| in that range  <=>  K_{l-1} <= bitlen(|n|) <= K_l - 1
    j = max((j for j in range(len(sched.K)) if sched.K[j] <= bl), default=0)
    if j < 1:
        raise ValueError(f"|n| = {abs(n)} below 2^(K_1 - 1); the bound needs l >= 2")
    if j >= sched.num_blocks and sched.saturated:
        raise DepthSaturation("|n| beyond the materialized schedule")
    return j + 1


def lyons_bound_exact(sched: ParamSchedule, n: int) -> Fraction:
    ell = lyons_block(sched, n)
    one = Fraction(1)
    # past the last block of a terminal schedule the measure is delta_0 (eps = 1)
    e = sched.eps[ell - 1] if ell <= sched.num_blocks else one
    e1 = sched.eps[ell - 2]
    gap = sched.K[ell - 1] - sched.K[ell - 2]  # K_0 = 0 when l = 2
    return min(one, e * e1 + e + e1 + Fraction(1, 1 << gap))


def lyons_bound(sched: ParamSchedule, n: int) -> float:
    return float(lyons_bound_exact(sched, n))


def decay_envelope(n: int, kappa: float) -> float:
    """(log log |n|)^(-1 + kappa), natural logs."""
    n = abs(n)
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    if n < 16:
        raise ValueError("decay envelope needs |n| >= 16")
    return math.log(math.log(n)) ** (kappa - 1)


__all__ = [
    "BlockValue", "E_block", "FourierValue", "block_magnitudes", "clear_memo",
    "decay_envelope", "lyons_block", "lyons_bound", "lyons_bound_exact", "mu_hat",
    "mu_hat_many", "top_words",
]
