"""The double sum I(h; r, N) = sum_{u,v <= N} |mu-hat(h r^u (r^v - 1))| and its pieces.

The (u, v) grid is split by v in V_1 (2^R0 | r^v - 1) or V_2, and for v in V_2
by u in U_1(v) (some block l in (t, T) has few digit changes in xi) or U_2(v).
J_0 and J_1 are the two terms of the expanded product bound for I_22.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from ..digits import DEFAULT_ALPHA, bar_window, count_low_change_strings, digit_change_count, \
    split_pow2, validate_alpha
from ..errors import BudgetExceeded
from ..measure.fourier import E_block, mu_hat
from ..order import lemma5a_constant, ord_pow2, order_ratio_scan
from ..schedule import ParamSchedule, indices_tT

N_CAP = 1 << 12
SCAN_CAP = 1 << 12


def R_of(N: int) -> int:
    """R with 2^(R-1) < N <= 2^R; R = 1 for N = 1."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return max(1, (N - 1).bit_length())


def _check_r(r: int):
    if r < 3 or r % 2 == 0:
        raise ValueError(f"r must be odd and >= 3, got {r}")


# -- V_1 -----------------------------------------------------------------------------


@dataclass
class V1Report:
    r: int
    N: int
    R: int
    R0: int
    order: int
    members: list[int]
    scan_limit: int
    scan_agrees: bool
    c0_hat: Fraction
    bound: float  # C0 N 2^-sqrt(R) with C0 = 2 / c0_hat


def set_V1(r: int, N: int) -> V1Report:
    _check_r(r)
    R = R_of(N)
    R0 = math.isqrt(R)
    order = ord_pow2(r, R0).ord
    members = list(range(order, N + 1, order))
    limit = min(N, SCAN_CAP)
    mod = 1 << R0
    scan = [v for v in range(1, limit + 1) if (r**v - 1) % mod == 0]
    agrees = scan == [v for v in members if v <= limit]
    c0 = order_ratio_scan(r, 30).min_ratio
    bound = float(2 / c0) * N * 2.0 ** -math.sqrt(R)
    return V1Report(r, N, R, R0, order, members, limit, agrees, c0, bound)


# -- U_1 ------------------------------------------------------------------------------


def eta_of(h: int, r: int, u: int, v: int) -> int:
    return h * r**u * (r**v - 1)


def xi_of(eta: int, R: int) -> int:
    # |mu-hat| and |E_l| are even in eta, so the digits of |eta| are used
    return abs(eta) & ((1 << R) - 1)


def open_range(sched: ParamSchedule, R: int) -> range:
    ip = indices_tT(sched, R)
    return range(ip.t + 1, ip.T)


def _below(xi: int, sched: ParamSchedule, ell: int, alpha: Fraction) -> bool:
    lo, hi = bar_window(sched, ell)
    size = sched.K[ell] - sched.K[ell - 1] + 1
    return digit_change_count(xi, lo, hi) < alpha * size


def set_U1(v: int, ell: int, h: int, r: int, N: int, sched: ParamSchedule,
           alpha=DEFAULT_ALPHA) -> list[int]:
    """U_1(v, l): the u in [1, N] whose xi has fewer than alpha #barB_l changes in block l."""
    a = validate_alpha(alpha)
    R = R_of(N)
    if ell not in open_range(sched, R):
        raise ValueError(f"l = {ell} not in (t, T) for R = {R}")
    return [u for u in range(1, N + 1) if _below(xi_of(eta_of(h, r, u, v), R), sched, ell, a)]


def set_U1_union(v: int, h: int, r: int, N: int, sched: ParamSchedule,
                 alpha=DEFAULT_ALPHA) -> list[int]:
    a = validate_alpha(alpha)
    R = R_of(N)
    ells = open_range(sched, R)
    out = []
    for u in range(1, N + 1):
        xi = xi_of(eta_of(h, r, u, v), R)
        if any(_below(xi, sched, ell, a) for ell in ells):
            out.append(u)
    return out


@dataclass
class U1Containment:
    v: int
    ell: int
    size: int
    w_star: int  # #W*(l), exact
    w_star_bound: float  # 2^(R - (K_l - K_{l-1}) / 4)
    max_fiber: int  # max_xi #U_1xi(v, l)
    fiber_bound: int  # c(r) rho_2 with rho = h (r^v - 1)
    holds: bool


def u1_containment(v: int, ell: int, h: int, r: int, N: int, sched: ParamSchedule,
                   alpha=DEFAULT_ALPHA) -> U1Containment:
    """Recompute both factors of #U_1(v, l) <= #W*(l) max_xi #U_1xi(v, l)."""
    a = validate_alpha(alpha)
    R = R_of(N)
    members = set_U1(v, ell, h, r, N, sched, a)
    fibers: dict[int, int] = {}
    for u in members:
        xi = xi_of(eta_of(h, r, u, v), R)
        fibers[xi] = fibers.get(xi, 0) + 1
    size_bar = sched.K[ell] - sched.K[ell - 1] + 1
    thr = a * size_bar
    m = math.ceil(thr) - 1  # changes strictly below the threshold
    strings = count_low_change_strings(size_bar, m) if m >= 0 else 0
    w_star = strings << (R - size_bar)
    rho2, _ = split_pow2(h * (r**v - 1))
    max_fiber = max(fibers.values(), default=0)
    fiber_bound = lemma5a_constant(r) * rho2
    holds = len(members) <= w_star * max_fiber and max_fiber <= fiber_bound
    w_bound = 2.0 ** (R - (sched.K[ell] - sched.K[ell - 1]) / 4)
    return U1Containment(v, ell, len(members), w_star, w_bound, max_fiber, fiber_bound, holds)


# -- the grid --------------------------------------------------------------------------


@dataclass
class Grid:
    """|mu-hat(h r^u (r^v - 1))| for 1 <= u, v <= n, row u-1, column v-1."""

    h: int
    r: int
    n: int
    tol: float
    mag: np.ndarray
    err: np.ndarray
    evaluations: int = 0


def evaluate_grid(h: int, r: int, n: int, sched: ParamSchedule, tol: float,
                  evaluator: Callable | None = None, time_budget: float | None = None) -> Grid:
    """Fill the magnitude grid; ``evaluator(eta)`` defaults to the memoized mu_hat."""
    if h == 0:
        raise ValueError("h must be nonzero")
    _check_r(r)
    if n > N_CAP:
        raise BudgetExceeded(f"N = {n} exceeds the desk cap {N_CAP}")
    ev = evaluator or (lambda eta: mu_hat(sched, eta, tol))
    mag = np.zeros((n, n))
    err = np.zeros((n, n))
    start = time.monotonic()
    rpow = [r**u for u in range(n + 1)]
    count = 0
    for v in range(1, n + 1):
        base = h * (rpow[v] - 1)
        for u in range(1, n + 1):
            fv = ev(base * rpow[u])
            mag[u - 1, v - 1] = fv.abs
            err[u - 1, v - 1] = fv.err
            count += 1
        if time_budget is not None and time.monotonic() - start > time_budget:
            partial = Grid(h, r, n, tol, mag[:, :v], err[:, :v], count)
            raise BudgetExceeded(f"time budget exhausted after column v = {v}", partial)
    return Grid(h, r, n, tol, mag, err, count)


# -- decomposition ----------------------------------------------------------------------


def exact_sum(values) -> Fraction:
    """Exact rational sum of floats (so regrouped sums compare exactly)."""
    return sum((Fraction(float(x)) for x in values), Fraction(0))


@dataclass
class DelDecomposition:
    h: int
    r: int
    N: int
    R: int
    R0: int
    t: int
    T: int
    V1: list[int]
    V2: list[int]
    U1_sizes: dict[int, int]
    I: Fraction
    I1: Fraction
    I21: Fraction
    I22: Fraction
    J0: Fraction
    J1: float
    gamma: Fraction
    J0_bound: float  # N^2 R^-gamma
    V1_bound: float
    El_checked: int
    El_violations: int
    agg_err: float  # sum of evaluator error bounds over the pairs
    identity_holds: bool = field(default=False)

    def row(self) -> dict:
        return {
            "N": self.N, "I": float(self.I), "I1": float(self.I1), "I21": float(self.I21),
            "I22": float(self.I22), "J0": float(self.J0), "J1": self.J1,
            "J0_bound": self.J0_bound, "V1_count": len(self.V1), "V1_bound": self.V1_bound,
            "I_cap": float(self.N * self.N), "agg_err": self.agg_err,
        }


def del_decompose(h: int, r: int, N: int, sched: ParamSchedule, tol: float = 1e-9, *,
                  alpha=DEFAULT_ALPHA, gamma=Fraction(2), grid: Grid | None = None) -> DelDecomposition:
    a = validate_alpha(alpha)
    gamma = Fraction(gamma)
    if grid is None:
        grid = evaluate_grid(h, r, N, sched, tol)
    if grid.n < N:
        raise ValueError("grid smaller than N")
    R = R_of(N)
    ip = indices_tT(sched, R)
    ells = list(range(ip.t + 1, ip.T))
    v1 = set_V1(r, N)
    V1 = set(v1.members)
    V2 = [v for v in range(1, N + 1) if v not in V1]

    mag = grid.mag[:N, :N]
    U1_sizes: dict[int, int] = {}
    I1_terms, I21_terms, I22_terms = [], [], []
    gamma_pairs: list[tuple[int, int]] = []
    for v in range(1, N + 1):
        col = mag[:, v - 1]
        if v in V1:
            I1_terms.extend(col.tolist())
            continue
        U1 = set(set_U1_union(v, h, r, N, sched, a)) if ells else set()
        U1_sizes[v] = len(U1)
        for u in range(1, N + 1):
            if u in U1:
                I21_terms.append(col[u - 1])
            else:
                I22_terms.append(col[u - 1])
                gamma_pairs.append((u, v))

    I = exact_sum(mag.ravel().tolist())
    I1, I21, I22 = exact_sum(I1_terms), exact_sum(I21_terms), exact_sum(I22_terms)

    eps_prod = Fraction(1)
    for ell in ells:
        eps_prod *= sched.eps_at(ell)
    J0 = len(gamma_pairs) * eps_prod

    root_half = math.sqrt(2) / 2
    J1_terms = []
    checked = violations = 0
    for u, v in gamma_pairs:
        if not ells:
            J1_terms.append(0.0)
            continue
        xi = xi_of(eta_of(h, r, u, v), R)
        prod = 1.0
        for ell in ells:
            E = E_block(sched, ell, xi)
            bound = root_half ** (float(a) * (sched.K[ell] - sched.K[ell - 1]))
            checked += 1
            if E.abs > bound + E.err + tol:
                violations += 1
            prod *= 1 + E.abs
        J1_terms.append(prod - 1)

    return DelDecomposition(
        h=h, r=r, N=N, R=R, R0=v1.R0, t=ip.t, T=ip.T, V1=sorted(V1), V2=V2,
        U1_sizes=U1_sizes, I=I, I1=I1, I21=I21, I22=I22, J0=J0, J1=math.fsum(J1_terms),
        gamma=gamma, J0_bound=N * N * float(R) ** -float(gamma), V1_bound=v1.bound,
        El_checked=checked, El_violations=violations,
        agg_err=float(grid.err[:N, :N].sum()), identity_holds=(I == I1 + I21 + I22),
    )


# -- series -------------------------------------------------------------------------------


@dataclass
class DelSeries:
    h: int
    r: int
    N_max: int
    points: list[int]  # N = 2, 4, ..., N_max
    partial_sums: list[float]  # sum_{n <= N} n^-3 I(n)
    increments: list[float]  # sum over n in (N/2, N]
    I_values: np.ndarray  # I(n) for n = 1..N_max
    decompositions: list[DelDecomposition]

    @property
    def trend_decreasing(self) -> bool:
        """Increments strictly decrease over the final three dyadic blocks."""
        tail = self.increments[-3:]
        return len(tail) == 3 and tail[0] > tail[1] > tail[2]

    @property
    def crude_cap(self) -> list[float]:
        """sum_{n <= N} 1/n, the bound coming from |mu-hat| <= 1."""
        h = np.cumsum(1.0 / np.arange(1, self.N_max + 1))
        return [float(h[N - 1]) for N in self.points]


def I_of_all_N(mag: np.ndarray) -> np.ndarray:
    """I(n) = sum of the leading n x n block, for every n, via 2-D prefix sums."""
    S = mag.cumsum(axis=0).cumsum(axis=1)
    return np.diagonal(S).copy()


def del_series(h: int, r: int, N_max: int, sched: ParamSchedule, tol: float = 1e-9, *,
               alpha=DEFAULT_ALPHA, gamma=Fraction(2), grid: Grid | None = None,
               evaluator: Callable | None = None, decompose: bool = True) -> DelSeries:
    if N_max < 2 or N_max & (N_max - 1):
        raise ValueError("N_max must be a power of two >= 2")
    if N_max > N_CAP:
        raise BudgetExceeded(f"N_max = {N_max} exceeds the desk cap {N_CAP}")
    if grid is None:
        grid = evaluate_grid(h, r, N_max, sched, tol, evaluator)
    Ivals = I_of_all_N(grid.mag[:N_max, :N_max])
    n = np.arange(1, N_max + 1, dtype=np.float64)
    terms = Ivals / n**3
    csum = np.cumsum(terms)
    points = [1 << j for j in range(1, N_max.bit_length())]
    partial = [float(csum[N - 1]) for N in points]
    incs = [float(csum[N - 1] - csum[N // 2 - 1]) for N in points]
    decs = [del_decompose(h, r, N, sched, tol, alpha=alpha, gamma=gamma, grid=grid)
            for N in points] if decompose else []
    return DelSeries(h, r, N_max, points, partial, incs, Ivals, decs)
