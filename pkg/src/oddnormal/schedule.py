"""Block schedules (K, eps) for the measure, index pairs (t, T), admissibility.

A schedule is a strictly increasing list of block endpoints
``K_0 = 0 < K_1 < K_2 < ...`` together with weights ``eps_l`` in [0, 1].
Block ``l`` covers the binary digit positions ``K_{l-1}+1 .. K_l``.

Two rule-based kinds are infinite in principle and are materialized up to a
cap on ``K_l``; ``explicit`` schedules are finite and *terminal*: beyond the
last block every digit is zero (equivalently ``eps_l = 1`` there).
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DepthSaturation, ScheduleError

MATERIALIZATION_CAP = 2**24
LOG_BASE = "natural"

KINDS = ("canonical", "geometric", "explicit")


def to_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, 'p/q' string or a decimal float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


def frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def omega(x=None, *, log_x: float | None = None) -> int:
    """floor(sqrt(log x)) with the natural log; pass ``log_x`` for huge x."""
    if log_x is None:
        if x is None or x < 1:
            raise ValueError("omega needs x >= 1")
        log_x = math.log(x)
    if log_x < 0:
        raise ValueError("omega needs x >= 1")
    # floor(sqrt(L)) == isqrt(floor(L)) for real L >= 0
    return math.isqrt(math.floor(log_x))


@dataclass(frozen=True)
class IndexPair:
    t: int
    T: int
    R: int


@dataclass(frozen=True)
class ParamSchedule:
    kind: str
    K: tuple[int, ...]
    eps: tuple[Fraction, ...]
    K_base: int | None = None
    cap: int = MATERIALIZATION_CAP
    id: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        K, eps = self.K, self.eps
        if len(K) < 2 or K[0] != 0:
            raise ScheduleError("K must start with K_0 = 0 and have at least one block")
        if any(b <= a for a, b in zip(K, K[1:])):
            raise ScheduleError(f"K must be strictly increasing: {list(K)[:8]}...")
        if len(eps) != len(K) - 1:
            raise ScheduleError("need exactly one eps per block")
        for e in eps:
            if not 0 <= e <= 1:
                raise ScheduleError(f"eps value {e} outside [0, 1]")
        if self.kind != "explicit":
            for a, b in zip(K[1:], K[2:]):
                if b < 10 * a:
                    raise ScheduleError("growth condition K_l >= 10 K_{l-1} violated")
        if not self.id:
            object.__setattr__(self, "id", _digest(self._payload()))

    # -- structure -------------------------------------------------------

    @property
    def num_blocks(self) -> int:
        return len(self.K) - 1

    @property
    def terminal(self) -> bool:
        """True if the measure is the point mass at 0 beyond the last block."""
        return self.kind == "explicit"

    @property
    def saturated(self) -> bool:
        """True if further blocks exist but lie beyond the materialization cap."""
        return not self.terminal

    @property
    def last_digit(self) -> int:
        return self.K[-1]

    def K_at(self, ell: int) -> int:
        self._check_ell(ell, allow_zero=True)
        return self.K[ell]

    def eps_at(self, ell: int) -> Fraction:
        self._check_ell(ell)
        return self.eps[ell - 1]

    def width(self, ell: int) -> int:
        self._check_ell(ell)
        return self.K[ell] - self.K[ell - 1]

    def block(self, ell: int) -> tuple[int, int]:
        """Inclusive digit range B_l = [K_{l-1}+1, K_l]."""
        self._check_ell(ell)
        return self.K[ell - 1] + 1, self.K[ell]

    def bar_block(self, ell: int) -> tuple[int, int]:
        """Shifted range [K_{l-1}-1, K_l-1] used for digit-change counting."""
        self._check_ell(ell)
        return self.K[ell - 1] - 1, self.K[ell] - 1

    def block_of(self, k: int) -> int:
        """Index of the block containing digit position k >= 1."""
        if k < 1:
            raise ScheduleError("digit positions start at 1")
        if k > self.K[-1]:
            if self.terminal:
                raise ScheduleError(f"digit {k} lies past the last block")
            raise DepthSaturation(f"digit {k} lies beyond the materialized cap")
        return bisect.bisect_left(self.K, k)

    def _check_ell(self, ell: int, allow_zero: bool = False):
        lo = 0 if allow_zero else 1
        if not lo <= ell <= self.num_blocks:
            if ell > self.num_blocks and self.saturated:
                raise DepthSaturation(
                    f"block {ell} is beyond the materialization cap ({self.cap})"
                )
            raise ScheduleError(f"block index {ell} out of range 1..{self.num_blocks}")

    # -- serialization ---------------------------------------------------

    def _payload(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "explicit":
            d["K"] = [str(k) for k in self.K]
            d["eps"] = [frac_str(e) for e in self.eps]
        else:
            d["K_base"] = str(self.K_base)
            if self.cap != MATERIALIZATION_CAP:
                d["cap"] = str(self.cap)
        return d

    def to_dict(self) -> dict:
        d = self._payload()
        d["id"] = self.id
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSchedule":
        kind = d.get("kind")
        if kind == "explicit":
            sched = make_schedule("explicit", K=d["K"], eps=d["eps"])
        elif kind in ("canonical", "geometric"):
            cap = int(d.get("cap", MATERIALIZATION_CAP))
            sched = make_schedule(kind, K_base=int(d["K_base"]), cap=cap)
        else:
            raise ScheduleError(f"unknown schedule kind {kind!r}")
        if "id" in d and d["id"] != sched.id:
            raise ScheduleError("schedule id does not match its contents")
        return sched

    @classmethod
    def from_json(cls, text: str) -> "ParamSchedule":
        return cls.from_dict(json.loads(text))


def _digest(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def make_schedule(kind: str, *, K_base: int | None = None, K: Sequence | None = None,
                  eps: Sequence | str | None = None,
                  cap: int = MATERIALIZATION_CAP) -> ParamSchedule:
    """Build a schedule.

    ``canonical``: K_l = K_base^(l*omega(l)), regularized at small l so the
    growth condition holds; ``geometric``: K_l = K_base^l. Both use eps_l = 1/l
    and are materialized while K_l <= cap. ``explicit`` takes the K list
    (starting with 0) and either an eps list or the string ``"harmonic"``.
    """
    if kind == "explicit":
        if K is None or eps is None:
            raise ScheduleError("explicit schedules need K and eps")
        Ks = tuple(int(k) for k in K)
        if isinstance(eps, str):
            if eps != "harmonic":
                raise ScheduleError(f"unknown eps rule {eps!r}")
            es = tuple(Fraction(1, ell) for ell in range(1, len(Ks)))
        else:
            es = tuple(to_fraction(e) for e in eps)
        return ParamSchedule("explicit", Ks, es)

    if kind not in ("canonical", "geometric"):
        raise ScheduleError(f"unknown schedule kind {kind!r}")
    if K_base is None or K_base < 10:
        raise ScheduleError("rule-based schedules need K_base >= 10")
    Ks = [0]
    ell = 1
    while True:
        if kind == "geometric":
            nxt = K_base**ell
        else:
            nxt = max(_power_capped(K_base, ell * omega(ell), cap), 10 * Ks[-1])
            if ell <= 3:
                nxt = max(nxt, K_base**ell)
        if nxt > cap:
            break
        Ks.append(nxt)
        ell += 1
    if len(Ks) < 2:
        raise ScheduleError("cap too small to materialize a single block")
    es = tuple(Fraction(1, j) for j in range(1, len(Ks)))
    return ParamSchedule(kind, tuple(Ks), es, K_base=K_base, cap=cap)


def _power_capped(base: int, exp: int, cap: int) -> int:
    # avoid building astronomically large integers just to compare with cap
    if exp * math.log2(base) > math.log2(cap) + 2:
        return cap + 1
    return base**exp


def indices_tT(sched: ParamSchedule, R: int) -> IndexPair:
    """The pair (t, T) with sqrt(R) in (K_{t-1}, K_t] and R in (K_{T-1}, K_T]."""
    if R < 1:
        raise ValueError("R must be >= 1")
    K = sched.K
    if R > K[-1]:
        if sched.saturated:
            raise DepthSaturation(f"R = {R} exceeds the materialized K_L = {K[-1]}")
        raise ScheduleError(f"schedule too short for R = {R} (K_L = {K[-1]})")
    T = bisect.bisect_left(K, R)
    # exact comparison: sqrt(R) <= K_t  <=>  R <= K_t^2
    t = next(ell for ell in range(1, len(K)) if R <= K[ell] * K[ell])
    return IndexPair(t=t, T=T, R=R)


# -- admissibility -----------------------------------------------------------


@dataclass
class AdmissibilityRow:
    R: int
    t: int | None
    T: int | None
    product: Fraction | None
    passed: bool
    gap_ok: bool
    note: str = ""


@dataclass
class AdmissibilityReport:
    gamma: Fraction
    rows: list[AdmissibilityRow]
    eps_partial_sums: list[Fraction]
    eps_sums_increasing: bool
    gap_threshold: int | None
    log_base: str = LOG_BASE

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _product_below_power(product: Fraction, K_T: int, gamma: Fraction) -> bool:
    # product < K_T^(-p/q)  <=>  num^q * K_T^p < den^q
    p, q = gamma.numerator, gamma.denominator
    if product == 0:
        return True
    # decide in logs unless the two sides are too close to call
    lhs = q * math.log(product.numerator) + p * math.log(K_T)
    rhs = q * math.log(product.denominator)
    if abs(lhs - rhs) > 1e-9 * (abs(lhs) + abs(rhs)) + 1e-9:
        return lhs < rhs
    return product.numerator**q * K_T**p < product.denominator**q


def check_admissible(sched: ParamSchedule, gamma, R_range: Iterable[int]) -> AdmissibilityReport:
    """Test prod_{t<l<T} eps_l < K_T^(-gamma) at each R, exactly."""
    gamma = to_fraction(gamma)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    rows = []
    for R in sorted(set(int(r) for r in R_range)):
        try:
            ip = indices_tT(sched, R)
        except ScheduleError as exc:
            rows.append(AdmissibilityRow(R, None, None, None, False, False, note=str(exc)))
            continue
        prod = Fraction(1)
        for ell in range(ip.t + 1, ip.T):
            prod *= sched.eps_at(ell)
        ok = _product_below_power(prod, sched.K[ip.T], gamma)
        rows.append(AdmissibilityRow(R, ip.t, ip.T, prod, ok, ip.t < ip.T - 2))

    sums, acc = [], Fraction(0)
    for e in sched.eps:
        acc += e
        sums.append(acc)
    increasing = all(b > a for a, b in zip(sums, sums[1:]))

    # least tested R from which t < T-2 holds for every larger tested R
    threshold = None
    for row in reversed(rows):
        if not row.gap_ok:
            break
        threshold = row.R
    return AdmissibilityReport(gamma, rows, sums, increasing, threshold)


# -- slow growth of omega ------------------------------------------------------


@dataclass
class SlowGrowthReport:
    M: float
    tau: float
    rows: list[tuple[float, int, int, bool]]  # (log x, omega(x), omega(Mx), holds)
    threshold_log_x: float | None
    omega_big_threshold_log_x: float | None = None
    log_base: str = LOG_BASE


def slow_growth_check(M: float, tau: float, log_x_grid: Iterable[float], *,
                      N: float | None = None, kappa: float | None = None) -> SlowGrowthReport:
    """Scan omega(x) <= omega(Mx) <= (1+tau) omega(x) over a grid of log x.

    With ``N`` and ``kappa`` also scans Omega(N(1-kappa)x) < N Omega(x), where
    Omega(x) = x omega(x); that inequality reduces to
    (1-kappa) omega(N(1-kappa)x) < omega(x), so no huge numbers appear.
    """
    if M <= 1 or tau <= 0:
        raise ValueError("need M > 1 and tau > 0")
    grid = sorted(float(g) for g in log_x_grid)
    log_M = math.log(M)
    rows = []
    for L in grid:
        w, wM = omega(log_x=L), omega(log_x=L + log_M)
        rows.append((L, w, wM, w <= wM <= (1 + tau) * w))
    threshold = _tail_threshold(grid, [r[3] for r in rows])

    big = None
    if N is not None and kappa is not None:
        scale = math.log(N * (1 - kappa))
        flags = [(1 - kappa) * omega(log_x=max(L + scale, 0.0)) < omega(log_x=L) for L in grid]
        big = _tail_threshold(grid, flags)
    return SlowGrowthReport(M, tau, rows, threshold, big)


def _tail_threshold(grid, flags):
    threshold = None
    for L, ok in zip(reversed(grid), reversed(flags)):
        if not ok:
            break
        threshold = L
    return threshold
