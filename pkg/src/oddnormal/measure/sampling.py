"""Seeded sampling of digit streams and the Monte Carlo Fourier oracle.

Randomness layout: samples are grouped in chunks of CHUNK. For block l and
chunk c, the zero flags come from a PCG64 seeded by
SeedSequence(seed, spawn_key=(l, c, 0)) and the block's fair bits from
SeedSequence(seed, spawn_key=(l, c, 1)). Bits are raw 64-bit words laid out
word-major, so drawing more digits never changes earlier ones and forcing one
block never shifts the randomness of another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from ..errors import DepthSaturation
from ..schedule import ParamSchedule

RNG_NAME = "numpy.PCG64/SeedSequence(seed, spawn_key=(block, chunk, stream))"
CHUNK = 1024
_MASK64 = (1 << 64) - 1


def _bitgen(seed: int, ell: int, chunk: int, stream: int) -> np.random.PCG64:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(ell, chunk, stream))
    return np.random.PCG64(ss)


def _zero_flags(seed: int, ell: int, chunk: int, eps: Fraction) -> np.ndarray:
    if eps == 0:
        return np.zeros(CHUNK, dtype=bool)
    if eps == 1:
        return np.ones(CHUNK, dtype=bool)
    rng = np.random.Generator(_bitgen(seed, ell, chunk, 0))
    p, q = eps.numerator, eps.denominator
    if q < 1 << 62:
        return rng.integers(0, q, CHUNK) < p  # exact Bernoulli(p/q)
    return rng.random(CHUNK) < float(eps)


def _block_words(seed: int, ell: int, chunk: int, nbits: int) -> np.ndarray:
    nw = -(-nbits // 64)
    raw = _bitgen(seed, ell, chunk, 1).random_raw(nw * CHUNK)
    return raw.reshape(nw, CHUNK)


def _word_bit(words: np.ndarray, j: int) -> np.ndarray:
    return (words[j >> 6] >> np.uint64(j & 63)) & np.uint64(1)


def _check_depth(sched: ParamSchedule, depth: int):
    if depth > sched.K[-1] and sched.saturated:
        raise DepthSaturation(f"depth {depth} exceeds materialized K_L = {sched.K[-1]}")


def _blocks_upto(sched: ParamSchedule, depth: int):
    """(l, first digit index, number of digits used) for blocks meeting [1, depth]."""
    for ell in range(1, sched.num_blocks + 1):
        lo = sched.K[ell - 1]
        if lo >= depth:
            break
        yield ell, lo, min(sched.K[ell], depth) - lo


def sample_batch(sched: ParamSchedule, seed: int, depth: int, n: int,
                 forced_zero_blocks: Iterable[int] = ()) -> np.ndarray:
    """Digits d_1..d_depth of samples 0..n-1, as a uint8 array of shape (n, depth)."""
    _check_depth(sched, depth)
    forced = set(forced_zero_blocks)
    nchunks = -(-n // CHUNK)
    out = np.zeros((nchunks * CHUNK, depth), dtype=np.uint8)
    for c in range(nchunks):
        rows = slice(c * CHUNK, (c + 1) * CHUNK)
        for ell, lo, nbits in _blocks_upto(sched, depth):
            if ell in forced:
                continue
            flags = _zero_flags(seed, ell, c, sched.eps[ell - 1])
            if flags.all():
                continue
            words = _block_words(seed, ell, c, nbits)
            live = ~flags
            for j in range(nbits):
                out[rows, lo + j] = _word_bit(words, j).astype(np.uint8) * live
    return out[:n]


@dataclass(frozen=True)
class SampleStream:
    seed: int
    digits: np.ndarray  # d_1 .. d_depth
    forced_zero_blocks: frozenset[int]
    rng: str = RNG_NAME

    @property
    def depth(self) -> int:
        return len(self.digits)

    def numerator(self) -> int:
        """X with x = X / 2^depth."""
        return int("".join(map(str, self.digits.tolist())) or "0", 2)


def sample(sched: ParamSchedule, seed: int, depth: int,
           forced_zero_blocks: Iterable[int] = (), index: int = 0) -> SampleStream:
    """One digit stream (sample number ``index`` of the seeded batch)."""
    forced = frozenset(forced_zero_blocks)
    batch = sample_batch(sched, seed, depth, index + 1, forced)
    return SampleStream(int(seed), batch[index].copy(), forced)


def cylinder_frequencies(sched: ParamSchedule, seed: int, n: int, nbits: int) -> np.ndarray:
    """Counts of each length-nbits prefix (indexed by its binary value) over n samples."""
    digits = sample_batch(sched, seed, nbits, n)
    weights = 1 << np.arange(nbits - 1, -1, -1)
    idx = digits.astype(np.int64) @ weights
    return np.bincount(idx, minlength=1 << nbits)


# -- Monte Carlo oracle for mu-hat ------------------------------------------------


@dataclass(frozen=True)
class MCEstimate:
    eta: int
    mean: complex
    radius_re: float  # 4 sigma
    radius_im: float
    trunc_err: float  # depth truncation plus phase rounding
    n_samples: int
    depth: int


def phase_weights(eta: int, depth: int) -> list[int]:
    """c_k = floor({eta / 2^k} * 2^64) for k = 1..depth (exact for k <= 64)."""
    return [((eta << 64) >> k) & _MASK64 for k in range(1, depth + 1)]


def mu_hat_mc(sched: ParamSchedule, eta: int, n_samples: int, seed: int,
              guard: int = 40) -> MCEstimate:
    """Empirical mean of e(x eta) over seeded samples, with a 4 sigma radius."""
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    if eta < 0:
        est = mu_hat_mc(sched, -eta, n_samples, seed, guard)
        return MCEstimate(eta, est.mean.conjugate(), est.radius_re, est.radius_im,
                          est.trunc_err, est.n_samples, est.depth)
    if eta == 0:
        return MCEstimate(0, complex(1.0, 0.0), 0.0, 0.0, 0.0, n_samples, 0)

    depth = eta.bit_length() + guard
    trunc = 2 * math.pi * eta * 2.0**-depth
    if sched.terminal and depth >= sched.K[-1]:
        depth, trunc = sched.K[-1], 0.0  # later digits vanish identically
    _check_depth(sched, depth)
    # floor in each c_k, then the float conversion of the summed phase
    trunc += 2 * math.pi * (depth * 2.0**-64 + 2.0**-52)
    weights = phase_weights(eta, depth)

    nchunks = -(-n_samples // CHUNK)
    phase = np.zeros(nchunks * CHUNK, dtype=np.uint64)
    for c in range(nchunks):
        acc = np.zeros(CHUNK, dtype=np.uint64)
        for ell, lo, nbits in _blocks_upto(sched, depth):
            flags = _zero_flags(seed, ell, c, sched.eps[ell - 1])
            if flags.all():
                continue
            words = _block_words(seed, ell, c, nbits)
            part = np.zeros(CHUNK, dtype=np.uint64)
            for j in range(nbits):
                part += _word_bit(words, j) * np.uint64(weights[lo + j])
            acc += np.where(flags, np.uint64(0), part)
        phase[c * CHUNK:(c + 1) * CHUNK] = acc
    phase = phase[:n_samples]

    theta = phase.astype(np.float64) * (2 * math.pi * 2.0**-64)
    re, im = np.cos(theta), np.sin(theta)
    sq = math.sqrt(n_samples)
    return MCEstimate(
        eta,
        complex(float(re.mean()), float(im.mean())),
        4 * float(re.std(ddof=1)) / sq,
        4 * float(im.std(ddof=1)) / sq,
        trunc,
        n_samples,
        depth,
    )
