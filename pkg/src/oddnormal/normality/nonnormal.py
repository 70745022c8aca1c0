"""Finite certificate that a point with a zero block fails even-base normality.

For even b = 2^M B and a point x whose digits vanish on the block B_l, the
fractional parts {x b^n} for n in (N', N] are all tiny, so the Weyl average
(1/N) Re sum e(x b^n) is pushed towards 1. With alpha = M / (2 log2 b) the
constant c = b^(alpha/M) / 2 equals 2^(-1/2) for every b, so the bound
b c^K = b 2^(-K/2) can be compared exactly in integers.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources

import mpmath

from ..digits import split_pow2
from ..errors import HypothesisViolation
from ..measure.sampling import RNG_NAME, SampleStream
from ..schedule import ParamSchedule
from .weyl import DyadicApprox, ROUNDING_ERR, frac_parts


@dataclass(frozen=True)
class NonNormalSchedule:
    b: int
    M: int
    B: int
    alpha: float
    ell: int
    K_ell: int
    K_prev: int
    N: int
    N_prime: int
    c: float
    log2_bound: float  # log2(b c^K_l) = log2 b - K_l / 2

    @property
    def bound(self) -> float:
        return 2.0**self.log2_bound


def _half_K_over_log2b(b: int, K: int) -> int:
    """floor(K / (2 log2 b)), i.e. the largest n with b^(2n) <= 2^K, exactly."""
    n = int(K / (2 * math.log2(b)))
    while b ** (2 * (n + 1)) <= 1 << K:
        n += 1
    while n > 0 and b ** (2 * n) > 1 << K:
        n -= 1
    return n


def nonnormal_schedule(b: int, sched: ParamSchedule, ell: int) -> NonNormalSchedule:
    if b < 2 or b % 2:
        raise ValueError(f"b = {b} must be even")
    if ell < 2:
        raise ValueError("need l >= 2")
    two_part, B = split_pow2(b)
    M = two_part.bit_length() - 1
    K, Kp = sched.K_at(ell), sched.K_at(ell - 1)
    log2b = math.log2(b)
    alpha = 0.5 * M / log2b
    # N = 1 + floor((alpha / M) K_l) = 1 + floor(K_l / (2 log2 b))
    N = 1 + _half_K_over_log2b(b, K)
    Np = 1 + Kp // M
    if not alpha * K + 2 * M < K:
        raise ValueError(f"l = {ell} too small: alpha K_l + 2M >= K_l")
    if not Np < N:
        raise ValueError(f"l = {ell} too small: N' = {Np} >= N = {N}")
    log2_bound = log2b - K / 2
    if not log2_bound < -2:
        raise ValueError(f"l = {ell} too small: b c^K_l >= 1/4")
    return NonNormalSchedule(b, M, B, alpha, ell, K, Kp, N, Np, 2**-0.5, log2_bound)


def _zero_block_holds(X: int, P: int, lo: int, hi: int) -> bool:
    # digit d_k of x = X / 2^P is bit P - k of X
    if hi > P:
        return False
    width = hi - lo + 1
    return (X >> (P - hi)) & ((1 << width) - 1) == 0


def certify_nonnormal(x, b: int, sched: ParamSchedule, ell: int, *, seed: int | None = None,
                      forced_zero_blocks=()) -> dict:
    """Check {x b^n} <= b c^K_l on (N', N] and the Re S / N lower bound; returns the certificate."""
    if isinstance(x, SampleStream):
        seed = x.seed if seed is None else seed
        forced_zero_blocks = sorted(x.forced_zero_blocks)
        exact = sched.terminal and x.depth >= sched.K[-1]
        x = DyadicApprox.from_digits(x.digits, exact=exact)
    ns = nonnormal_schedule(b, sched, ell)
    lo, hi = sched.block(ell)
    if not x.exact and x.P < sched.K_at(min(ell + 1, sched.num_blocks)):
        raise ValueError(f"precision P = {x.P} below K_(l+1)")
    if not _zero_block_holds(x.X, x.P, lo, hi):
        raise HypothesisViolation(f"x has a nonzero digit in block {ell} = [{lo}, {hi}]")

    P, K = x.P, ns.K_ell
    fr = frac_parts(x, b, 1, ns.N)
    # {x b^n} <= b 2^(-K/2)  <=>  y^2 2^K <= b^2 2^(2P), with {x b^n} = y / 2^P
    rhs = b * b << (2 * P)
    checked = fr[ns.N_prime:]
    violations = [n for n, y in enumerate(checked, start=ns.N_prime + 1) if (y * y << K) > rhs]
    max_frac = max(checked) if checked else 0

    with mpmath.workprec(128):
        re_sum = mpmath.fsum(mpmath.cospi(2 * mpmath.mpf(y) / mpmath.mpf(2) ** P) for y in fr)
        ratio = re_sum / ns.N
        frac_p = mpmath.mpf(ns.N_prime) / ns.N
        cos_term = mpmath.cos(2 * mpmath.pi * mpmath.mpf(2) ** ns.log2_bound)
        lower = (1 - frac_p) * cos_term - frac_p
        # truncation of x only matters for inexact x: each term moves by <= 2 pi b^N 2^-P
        arith_err = ROUNDING_ERR
        if not x.exact:
            arith_err += float(2 * mpmath.pi * mpmath.mpf(b) ** ns.N / mpmath.mpf(2) ** P)
        passed = not violations and float(ratio) - arith_err > float(lower)

    cert = {
        "kind": "even-base-nonnormality",
        "schedule_id": sched.id,
        "seed": None if seed is None else str(seed),
        "rng": RNG_NAME,
        "forced_zero_blocks": [int(v) for v in forced_zero_blocks],
        "precision_bits": P,
        "x_exact": bool(x.exact),
        "zero_block": {"ell": ell, "first_digit": lo, "last_digit": hi, "holds": True},
        "parameters": {k: v for k, v in asdict(ns).items()},
        "alpha_rule": "M / (2 log2 b)",
        "frac_bound": {
            "n_range": [ns.N_prime + 1, ns.N],
            "n_checked": len(checked),
            "log2_bound": ns.log2_bound,
            "max_frac_log2": (math.log2(max_frac) - P) if max_frac else None,
            "violations": violations,
            "holds": not violations,
        },
        "re_S_over_N": float(ratio),
        "lower_bound": float(lower),
        "arith_err": arith_err,
        "passed": bool(passed),
    }
    return cert


def certificate_schema() -> dict:
    text = resources.files("oddnormal").joinpath("schemas/certificate.schema.json").read_text()
    return json.loads(text)


def validate_certificate(cert: dict) -> None:
    import jsonschema

    jsonschema.validate(cert, certificate_schema())
