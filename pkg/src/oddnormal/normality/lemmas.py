"""Desk-scale verification suites for the order, digit and cosine lemmas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..digits import (count_low_change_brute, count_low_change_strings, digit_change_count,
                      lemma_count_bound, split_pow2, validate_alpha)
from ..order import is_minimal_order, lemma5a_constant, ord_pow2, orbit_period, residue_hit_table

LOW_COVERAGE_K = 8
DEFAULT_RS = (3, 5, 7, 9)
DEFAULT_RHOS = (2, -2, 3, -3, 6, 12)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    failures: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    low_coverage: bool = False

    def summary_row(self) -> list[str]:
        return [self.name, "pass" if self.passed else "FAIL", str(self.checks),
                str(len(self.failures)), "yes" if self.low_coverage else "no",
                "; ".join(f"{k}={v}" for k, v in sorted(self.constants.items()))]


SUMMARY_HEADER = ["suite", "status", "checks", "failures", "low_coverage", "constants"]


def suite_order_divisibility(rs=DEFAULT_RS, k_max: int = 30, n_max: int = 256) -> SuiteResult:
    """r^n == 1 mod 2^k exactly when ord_{2^k}(r) | n, for n <= n_max."""
    fails, checks = [], 0
    for r in rs:
        for k in range(1, k_max + 1):
            o = ord_pow2(r, k).ord
            m = 1 << k
            x = 1
            for n in range(1, n_max + 1):
                x = x * r % m
                checks += 1
                if (x == 1 % m) != (n % o == 0):
                    fails.append((r, k, n))
    return SuiteResult("order-divides", not fails, checks, fails,
                       low_coverage=k_max < LOW_COVERAGE_K)


def suite_order_ratio(rs=DEFAULT_RS, k_max: int = 30) -> SuiteResult:
    """ord_{2^k}(r) >= c0(r) 2^k: reports the empirical c0 and checks minimality."""
    fails, consts, checks = [], {}, 0
    for r in rs:
        ratios = []
        for k in range(1, k_max + 1):
            rec = ord_pow2(r, k)
            checks += 1
            if not is_minimal_order(r, k, rec.ord):
                fails.append((r, k, rec.ord))
            ratios.append(rec.ratio)
        c0 = min(ratios)
        consts[f"c0({r})"] = str(c0)
        if c0 <= 0:
            fails.append((r, "c0", c0))
    return SuiteResult("order-ratio", not fails, checks, fails, consts,
                       low_coverage=k_max < LOW_COVERAGE_K)


def suite_low_change(k_max: int = 64, alpha=Fraction(1, 10), brute_max: int = 16) -> SuiteResult:
    """Closed form vs enumeration, then count(k, floor(alpha k)) <= 2^ceil(3k/4) for k >= 8."""
    a = validate_alpha(alpha)
    fails, checks = [], 0
    for k in range(1, min(brute_max, k_max) + 1):
        for m in range(k):
            checks += 1
            if count_low_change_strings(k, m) != count_low_change_brute(k, m):
                fails.append(("closed-form", k, m))
    for k in range(8, k_max + 1):
        checks += 1
        m = math.floor(a * k)
        if count_low_change_strings(k, m) > lemma_count_bound(k):
            fails.append(("bound", k, m))
    return SuiteResult("low-change-strings", not fails, checks, fails,
                       {"alpha": str(a)}, low_coverage=k_max < LOW_COVERAGE_K)


def suite_residue_orbits(rs=DEFAULT_RS, k_max: int = 14, rhos=DEFAULT_RHOS) -> SuiteResult:
    """#{m < 2^k : rho r^m == s} <= c(r) rho_2, with the exact orbit structure checked.

    Every count is 0 or 2^k / period with period = ord_{2^(k - v2(rho))}(r); the
    empirical c(r) = max count / rho_2 is reported and compared with
    2^(v2(r^2 - 1) - 1).
    """
    fails, consts, checks = [], {}, 0
    for r in rs:
        c_emp = Fraction(0)
        for k in range(1, k_max + 1):
            for rho in rhos:
                counts = residue_hit_table(rho, r, k)
                rho2, _ = split_pow2(rho)
                per = orbit_period(rho, r, k)
                checks += 1
                vals = set(np.unique(counts).tolist())
                if not vals <= {0, (1 << k) // per} or counts.sum() != 1 << k:
                    fails.append(("orbit", r, k, rho))
                c_emp = max(c_emp, Fraction(int(counts.max()), rho2))
        consts[f"c({r})"] = str(c_emp)
        if c_emp > lemma5a_constant(r):
            fails.append(("constant", r, c_emp))
    return SuiteResult("residue-orbits", not fails, checks, fails, consts,
                       low_coverage=k_max < LOW_COVERAGE_K)


def suite_cosine(n_samples: int = 10_000, seed: int = 0, bits: int = 64) -> SuiteResult:
    """|cos(pi xi 2^(-k-1))| <= sqrt(2)/2 whenever digits k-1 and k of xi differ."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(72,))))
    limit = math.sqrt(2) / 2 + 2.0**-40
    fails, checks, worst = [], 0, 0.0
    raw = rng.integers(0, 1 << 62, size=(n_samples, 2), dtype=np.int64)
    ks = rng.integers(1, bits - 1, size=n_samples)
    for (a, b), k in zip(raw.tolist(), ks.tolist()):
        xi = (a << 62) | b
        if digit_change_count(xi, k, k) == 0:
            xi ^= 1 << k  # force a change at (k-1, k)
        checks += 1
        frac = Fraction(xi & ((1 << (k + 1)) - 1), 1 << (k + 1))
        val = abs(math.cos(math.pi * float(frac)))
        worst = max(worst, val)
        if val > limit:
            fails.append((xi, k, val))
    return SuiteResult("cosine", not fails, checks, fails, {"max_abs_cos": repr(worst)})


def run_all(k_max: int = 64, alpha=Fraction(1, 10), seed: int = 0) -> list[SuiteResult]:
    validate_alpha(alpha)
    return [
        suite_order_divisibility(k_max=min(k_max, 30)),
        suite_order_ratio(k_max=min(k_max, 30)),
        suite_low_change(k_max=k_max, alpha=alpha),
        suite_residue_orbits(k_max=min(k_max, 14)),
        suite_cosine(seed=seed),
    ]
