"""Closed-form constants and numeric checks of the distance-bound machinery.

Three groups of tools live here:

* the convolution inequality for ``K(n) = C^{-1} (n+1)^{-p} e^{c n^{1/Δ'}}``
  and the constants ``C, c, a, R, c1, c2`` that turn it into the tail bound
  ``P(D(0,x) <= n) <= c1 (e^{c2 n^{1/Δ'}} / |x|)^{s'}``;
* Monte Carlo estimates used to test that bound and the long-edge lemma;
* the propagation check of the envelope
  ``a_k <= c6^{k2-k} exp(-c2 L_k^{2dζ-s'})`` through the recursion
  ``a_k <= (2 a_{k+1})^{c3 L_k^{2d(1-ζ)}} + c4 L_k^{2d} exp(-c5 L_k^{2dζ-s'})``.

Inequalities are compared in the log domain with a relative guard band of
``GUARD`` so rounding never produces a false failure.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np
from numba import njit
from scipy.optimize import brentq

from .errors import DomainError, PreconditionError
from .metrics import bfs_distances
from .model import ModelParams, ScaleSchedule, delta_exponent, delta_prime
from .sampler import GraphSample, sample_graph

GUARD = 1e-12
LOG_GUARD = math.log1p(GUARD)


# --------------------------------------------------------------------------
# The K function and its convolution inequality
# --------------------------------------------------------------------------

def phi(x, dp: float):
    """``x^{1/Δ'} + (1 - x)^{1/Δ'}`` on ``[0, 1]``."""
    x = np.asarray(x, dtype=float)
    return x ** (1.0 / dp) + (1.0 - x) ** (1.0 / dp)


def p_threshold(d: int, s_prime: float) -> float:
    """The lower limit ``(s' + 1) / (2d - s')`` for the polynomial exponent ``p``."""
    return (s_prime + 1.0) / (2 * d - s_prime)


@dataclass(frozen=True)
class KFunctionParams:
    """Parameters of ``K(n) = C^{-1} (n+1)^{-p} exp(c n^{1/Δ'})``."""

    d: int
    s_prime: float
    p: float
    c0: float
    c: float
    C: float
    delta_prime: float = field(init=False)
    phi_max: float = field(init=False)
    delta33: float = field(init=False)

    def __post_init__(self):
        if not (self.d < self.s_prime < 2 * self.d):
            raise DomainError(f"s' = {self.s_prime} must lie in (d, 2d) = ({self.d}, {2 * self.d})")
        if not self.p > p_threshold(self.d, self.s_prime):
            raise PreconditionError(
                f"p = {self.p} must exceed (s'+1)/(2d-s') = {p_threshold(self.d, self.s_prime):.6g}")
        if not (self.c0 > 0 and self.c >= self.c0):
            raise PreconditionError(f"need c >= c0 > 0, got c={self.c}, c0={self.c0}")
        if not self.C > 0:
            raise PreconditionError(f"C must be positive, got {self.C}")
        dp = delta_prime(self.d, self.s_prime)
        object.__setattr__(self, "delta_prime", dp)
        object.__setattr__(self, "phi_max", 2.0 ** (1.0 - 1.0 / dp))
        # φ is concave and symmetric about 1/2, so its max on [0, 1/4] is at 1/4.
        object.__setattr__(self, "delta33", self.s_prime - self.d * float(phi(0.25, dp)))
        if not self.delta33 > 0:
            raise DomainError(f"δ = s' - d max φ on [0, 1/4] is not positive ({self.delta33})")

    def with_C(self, C: float) -> "KFunctionParams":
        return KFunctionParams(self.d, self.s_prime, self.p, self.c0, self.c, C)

    def with_c(self, c: float) -> "KFunctionParams":
        return KFunctionParams(self.d, self.s_prime, self.p, self.c0, c, self.C)

    def log_K(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return (-math.log(self.C) - self.p * np.log1p(n)
                + self.c * n ** (1.0 / self.delta_prime))

    def h(self, n) -> np.ndarray:
        """The proof's majorant ``h(n)``; a diagnostic only, never used to decide."""
        n = np.asarray(n, dtype=float)
        d, sp, p = self.d, self.s_prime, self.p
        core = (8.0 ** (2 * p * d) * (n + 1) ** (1 - 2 * p * d)
                + 2 * (n + 1) * np.exp(-self.c * self.delta33 * n ** (1.0 / self.delta_prime)))
        return self.C ** (sp - 2 * d) * core * (n + 1) ** (sp + p * sp)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class VerificationReport:
    """Outcome of a numeric inequality check over ``n = 1..n_max``."""

    name: str
    passed: bool
    n_max: int
    worst_n: int
    worst_log_ratio: float
    first_failure: Optional[int]
    precision_flag: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@njit(cache=True)
def _log_lhs_kernel(lkd, n_max, out):
    # Max-shifted exp sum with Neumaier compensation per n.
    for n in range(1, n_max + 1):
        m = -np.inf
        for j in range(n + 1):
            t = lkd[j] + lkd[n - j]
            if t > m:
                m = t
        total = 0.0
        comp = 0.0
        for j in range(n + 1):
            v = math.exp(lkd[j] + lkd[n - j] - m)
            t = total + v
            if abs(total) >= abs(v):
                comp += (total - t) + v
            else:
                comp += (v - t) + total
            total = t
        out[n - 1] = m + math.log(total + comp)


def _log_lhs(lk: np.ndarray, d: int, n_max: int) -> np.ndarray:
    """``log sum_j K(j)^d K(n-j)^d`` for ``n = 1..n_max`` given ``lk[j] = log K(j)``."""
    out = np.empty(n_max, dtype=np.float64)
    _log_lhs_kernel(np.ascontiguousarray(d * lk, dtype=np.float64), n_max, out)
    return out


def verify_k_inequality(params: KFunctionParams, n_max: int) -> VerificationReport:
    """Check ``sum_{j=0}^n K(j)^d K(n-j)^d <= n^{-s'} K(n)^{s'}`` for ``1 <= n <= n_max``.

    Both sides are evaluated directly in the log domain; the sum is
    max-shifted and accumulated with compensated summation.
    ``worst_log_ratio`` is ``max_n (log LHS - log RHS)``.
    """
    if n_max < 1:
        raise PreconditionError("n_max must be >= 1")
    n = np.arange(1, n_max + 1, dtype=float)
    lk = params.log_K(np.arange(n_max + 1))
    lhs = _log_lhs(lk, params.d, n_max)
    rhs = -params.s_prime * np.log(n) + params.s_prime * lk[1:]
    gap = lhs - rhs
    tol = LOG_GUARD * np.maximum(1.0, np.abs(rhs))
    bad = np.flatnonzero(gap > tol)
    worst = int(np.argmax(gap))
    # Roundoff in the log sum is about eps * (largest log term + log n).
    err = np.finfo(np.float64).eps * (np.abs(lk).max() * params.d * 2 + np.log(n_max + 1))
    return VerificationReport(
        name="K convolution inequality", passed=bad.size == 0, n_max=int(n_max),
        worst_n=worst + 1, worst_log_ratio=float(gap[worst]),
        first_failure=int(bad[0]) + 1 if bad.size else None,
        precision_flag=bool(err > LOG_GUARD),
        detail={"params": params.to_dict()})


def _round_up_sig(x: float, digits: int = 3) -> float:
    if x <= 0 or not math.isfinite(x):
        return x
    e = math.floor(math.log10(x)) - digits + 1
    m = math.ceil(x / 10.0**e - 1e-9)
    return float(m * 10.0**e) if m * 10.0**e >= x else float((m + 1) * 10.0**e)


@lru_cache(maxsize=64)
def _find_C_cached(d: int, s_prime: float, p: float, c0: float, n_max: int) -> tuple:
    base = KFunctionParams(d, s_prime, p, c0, c0, 1.0)
    lk = base.log_K(np.arange(n_max + 1))
    n = np.arange(1, n_max + 1, dtype=float)
    # At C = 1, log LHS - log RHS; changing C adds (s' - 2d) log C.
    gap1 = _log_lhs(lk, d, n_max) - (-s_prime * np.log(n) + s_prime * lk[1:])
    worst = int(np.argmax(gap1))
    log_c_star = max(gap1[worst], -700.0) / (2 * d - s_prime)
    return math.exp(log_c_star), worst + 1


def find_C(d: int, s_prime: float, p: float, c0: float, n_max: int) -> float:
    """Smallest ``C`` (rounded up to 3 significant digits) passing the K inequality.

    The left side scales as ``C^{-2d}`` and the right as ``C^{-s'}`` with
    ``2d > s'``, so the inequality holds exactly for ``C >= C*``.  ``C*`` is
    computed from the factorized ratio, then the rounded value is re-verified
    with ``verify_k_inequality``.  The quantity is valid for every ``c >= c0``
    because the ratio is nonincreasing in ``c``.
    """
    if not p > p_threshold(d, s_prime):
        raise PreconditionError(
            f"p = {p} must exceed (s'+1)/(2d-s') = {p_threshold(d, s_prime):.6g}")
    c_star, n_star = _find_C_cached(int(d), float(s_prime), float(p), float(c0), int(n_max))
    if not math.isfinite(c_star):
        raise PreconditionError(f"no finite C: inequality unbounded at n = {n_star}")
    C = _round_up_sig(c_star)
    rep = verify_k_inequality(KFunctionParams(d, s_prime, p, c0, c0, C), n_max)
    while not rep.passed:  # rounding can only err by the guard band
        C = _round_up_sig(C * (1 + 1e-3))
        rep = verify_k_inequality(KFunctionParams(d, s_prime, p, c0, c0, C), n_max)
    return C


def find_C_provenance(d: int, s_prime: float, p: float, c0: float, n_max: int) -> dict:
    c_star, n_star = _find_C_cached(int(d), float(s_prime), float(p), float(c0), int(n_max))
    return {"d": d, "s_prime": s_prime, "p": p, "c0": c0, "n_max": n_max,
            "C_exact": c_star, "binding_n": n_star, "C": find_C(d, s_prime, p, c0, n_max)}


# --------------------------------------------------------------------------
# Lattice-sum constant and kernel radii
# --------------------------------------------------------------------------

def a_parts(d: int, s_prime: float) -> tuple:
    """``(a1, a2)`` with ``#{|x| <= K} <= a1 K^d`` and ``sum_{|x|>K} (K/|x|)^{s'} <= a2 K^d``.

    Both hold for every real ``K >= 1``; the derivation is in docs/constants.md.
    """
    if not (d < s_prime < 2 * d):
        raise DomainError(f"s' = {s_prime} must lie in (d, 2d)")
    a1 = 3.0**d
    a2 = 2 * d * 3.0 ** (d - 1) * (1.0 + 2.0 ** (s_prime - d) / (s_prime - d))
    return a1, a2


def a_constant(d: int, s_prime: float) -> float:
    """``a = a1 + a2`` so that the ball-size lemma gives ``E|B_j| <= a K^d``."""
    a1, a2 = a_parts(d, s_prime)
    return a1 + a2


def lattice_sum_check(d: int, s_prime: float, K: int, m_max: int = 1_000_000) -> dict:
    """Exhaustive ``sum_{|x|_inf > K} (K/|x|)^{s'}`` against ``a2 K^d``.

    Shells ``|x| = m`` hold ``(2m+1)^d - (2m-1)^d`` sites; shells past
    ``m_max`` are bounded by the integral ``2d 3^{d-1} K^{s'} m^{d-s'}/(s'-d)``.
    """
    _, a2 = a_parts(d, s_prime)
    m = np.arange(K + 1, m_max + 1, dtype=float)
    shell = (2 * m + 1) ** d - (2 * m - 1) ** d
    head = float(np.sum(shell * (K / m) ** s_prime))
    tail = 2 * d * 3.0 ** (d - 1) * K**s_prime * m_max ** (d - s_prime) / (s_prime - d)
    total = head + tail
    bound = a2 * K**d
    return {"d": d, "s_prime": s_prime, "K": K, "sum": total, "tail": tail,
            "bound": bound, "passed": bool(total <= bound)}


def _p_of_r(beta: float, s: float, r):
    return -np.expm1(-beta * np.asarray(r, dtype=float) ** (-s))


def radius_upper(beta: float, s: float, s_prime: float) -> int:
    """Smallest integer ``R >= 1`` with ``p(r) <= r^{-s'}`` for every real ``r >= R``.

    Equivalent to ``beta r^{-s} <= -log(1 - r^{-s'})``.  Exists only for
    ``s' < s`` (or ``beta = 0``); beyond ``beta^{1/(s-s')}`` it holds outright
    since ``-log(1-u) >= u``.
    """
    if beta == 0:
        return 1
    if not s_prime < s:
        raise DomainError(
            f"p(r) <= r^-s' fails for all large r when s' = {s_prime} >= s = {s}; no R exists")

    def f(r):
        return -np.log1p(-np.asarray(r, dtype=float) ** (-s_prime)) - beta * np.asarray(r, dtype=float) ** (-s)

    r_hi = max(1.0, beta ** (1.0 / (s - s_prime)))
    if r_hi <= 1.0:
        return 1
    grid = np.unique(np.concatenate([np.geomspace(1.0, r_hi, 200_001)[1:], [r_hi]]))
    vals = f(grid)
    neg = np.flatnonzero(vals < 0)
    if neg.size == 0:
        return 1
    i = neg[-1]
    r_last = grid[i]
    if i + 1 < grid.size:
        r_last = brentq(f, grid[i], grid[i + 1], xtol=1e-12)
    # Polish the last crossing in high precision, then settle the integer.
    with mpmath.workdps(40):
        def f_mp(r):
            r = mpmath.mpf(r)
            return -mpmath.log1p(-r ** (-s_prime)) - beta * r ** (-s)
        root = mpmath.findroot(f_mp, mpmath.mpf(r_last))
        R = max(1, int(mpmath.floor(root)) + 1)
        while R > 1 and f_mp(R - 1) >= 0:
            R -= 1
        while f_mp(R) < 0:
            R += 1
    return R


def radius_lower(beta: float, s: float, s_prime: float) -> int:
    """Smallest integer ``R >= 1`` with ``p(r) >= 1 - exp(-r^{-s'})`` for every ``r >= R``.

    Equivalent to ``beta r^{-s} >= r^{-s'}``, i.e. ``r >= beta^{-1/(s'-s)}``;
    exists only for ``s' > s`` and ``beta > 0``.
    """
    if not (s_prime > s and beta > 0):
        raise DomainError(f"the lower kernel bound needs s' > s and beta > 0 (s'={s_prime}, s={s})")
    r0 = beta ** (-1.0 / (s_prime - s))
    return max(1, int(math.ceil(r0 - 1e-12)))


# --------------------------------------------------------------------------
# Tail-bound constants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrapmanConstants:
    """Constants of the tail bound ``P(D(0,x) <= n) <= c1 (e^{c2 n^{1/Δ'}} / |x|)^{s'}``."""

    d: int
    s: float
    beta: float
    s_prime: float
    p: float
    c0: float
    C: float
    c: float
    R: int
    a1: float
    a2: float
    a: float
    q_exp: float
    c1: float
    c2: float
    delta_prime: float

    @property
    def k_params(self) -> KFunctionParams:
        return KFunctionParams(self.d, self.s_prime, self.p, self.c0, self.c, self.C)

    def log_K(self, n):
        return self.k_params.log_K(n)

    def to_dict(self) -> dict:
        return asdict(self)


def _min_c_for_growth(d, s_prime, p, C, log_target, c0) -> float:
    """Smallest ``c >= c0`` with ``log K(n) >= log_target + log n`` for all ``n >= 1``."""
    dp = delta_prime(d, s_prime)
    c = c0
    N = 1024
    while True:
        n = np.arange(1, N + 1, dtype=float)
        need = (log_target + math.log(C) + p * np.log1p(n) + np.log(n)) / n ** (1.0 / dp)
        c = max(c0, float(need.max()))
        # For n^{1/Δ'} >= (p+1)Δ'/c the exponent outgrows the polynomial factors.
        n_star = ((p + 1) * dp / c) ** dp if c > 0 else math.inf
        if n_star < N:
            return c * (1 + 1e-12)
        N *= 4


def trapman_constants(d: int, s: float, beta: float, s_prime: float, *,
                      p: Optional[float] = None, c0: float = 1.0,
                      n_max: int = 10_000) -> TrapmanConstants:
    """Assemble ``R, a, q, C, c, c1, c2`` for the tail bound.

    Requires ``d < s' < s`` so that ``p(v) <= |v|^{-s'}`` eventually; ``p``
    defaults to the integer just above ``(s'+1)/(2d-s')``.  ``c`` is the
    smallest value ``>= c0`` with ``K(n) >= a^q R n`` for all ``n >= 1``.
    """
    if not (d < s_prime < 2 * d):
        raise DomainError(f"s' = {s_prime} must lie in (d, 2d)")
    R = radius_upper(beta, s, s_prime)
    if p is None:
        p = math.floor(p_threshold(d, s_prime)) + 1.0
    C = find_C(d, s_prime, p, c0, n_max)
    a1, a2 = a_parts(d, s_prime)
    a = a1 + a2
    q = 2.0 / (2 * d - s_prime)
    c = _min_c_for_growth(d, s_prime, p, C, q * math.log(a) + math.log(R), c0)
    c1 = a ** (-q * s_prime) * C ** (-s_prime)
    tc = TrapmanConstants(d=d, s=s, beta=beta, s_prime=s_prime, p=p, c0=c0, C=C, c=c,
                          R=R, a1=a1, a2=a2, a=a, q_exp=q, c1=c1, c2=c,
                          delta_prime=delta_prime(d, s_prime))
    _check_trapman_invariants(tc)
    return tc


def _check_trapman_invariants(tc: TrapmanConstants) -> None:
    r = np.geomspace(tc.R, tc.R * 1e6, 2001)
    if np.any(_p_of_r(tc.beta, tc.s, r) > r ** (-tc.s_prime) * (1 + GUARD)):
        raise PreconditionError("kernel exceeds |v|^-s' beyond R on the sample grid")
    n = np.arange(1, 100_001, dtype=float)
    if np.any(tc.log_K(n) < tc.q_exp * math.log(tc.a) + math.log(tc.R) + np.log(n) - LOG_GUARD):
        raise PreconditionError("K(n) >= a^q R n fails")


def trapman_bound(x_norm: float, n: int, tc: TrapmanConstants,
                  s_prime: Optional[float] = None) -> float:
    """``min(1, c1 (exp(c2 n^{1/Δ'}) / |x|)^{s'})``."""
    if n < 1 or not x_norm > 0:
        raise PreconditionError("need n >= 1 and |x| > 0")
    sp = tc.s_prime if s_prime is None else s_prime
    dp = delta_prime(tc.d, sp)
    log_b = math.log(tc.c1) + sp * (tc.c2 * n ** (1.0 / dp) - math.log(x_norm))
    return 1.0 if log_b >= 0 else math.exp(log_b)


# --------------------------------------------------------------------------
# Monte Carlo helpers
# --------------------------------------------------------------------------

def _axis_point(graph: GraphSample, x_norm: int) -> int:
    c = np.zeros(graph.d, dtype=np.int64)
    c[0] = x_norm
    return int(graph.index(c))


@dataclass
class DistanceTailEstimate:
    """Monte Carlo estimate of ``P(D(0,x) <= n)`` for ``n = 1..n_max``."""

    x_norm: int
    box_L: int
    n_samples: int
    counts: np.ndarray

    @property
    def prob(self) -> np.ndarray:
        return self.counts / self.n_samples

    @property
    def stderr(self) -> np.ndarray:
        p = self.prob
        return np.sqrt(p * (1 - p) / self.n_samples)

    def to_dict(self) -> dict:
        return {"x_norm": self.x_norm, "box_L": self.box_L, "n_samples": self.n_samples,
                "prob": self.prob.tolist(), "stderr": self.stderr.tolist()}


def distance_tail_mc(d: int, s: float, beta: float, x_norm: int, n_max: int,
                     n_samples: int, *, seed: int = 0, box_L: Optional[int] = None,
                     nn_always: bool = True) -> DistanceTailEstimate:
    """Estimate ``P(D(0,x) <= n)`` on boxes of radius ``box_L`` (default ``2|x|``).

    Sample ``i`` uses model seed ``seed + i``; ``x`` sits on the first axis.
    """
    box_L = 2 * x_norm if box_L is None else box_L
    counts = np.zeros(n_max, dtype=np.int64)
    for i in range(n_samples):
        g = sample_graph(ModelParams(d, s, beta, box_L, seed=seed + i, nn_always=nn_always))
        dist = bfs_distances(g, g.origin, max_depth=n_max).dist
        dx = dist[_axis_point(g, x_norm)]
        if dx >= 0:
            counts[dx - 1 if dx > 0 else 0:] += 1
    return DistanceTailEstimate(x_norm, box_L, n_samples, counts)


@dataclass
class BoundCheckCell:
    x_norm: int
    n: int
    estimate: float
    stderr: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + 4 * self.stderr


@dataclass
class BoundCheckReport:
    constants: Optional[TrapmanConstants]
    cells: list
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.cells)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "error": self.error,
                "constants": None if self.constants is None else self.constants.to_dict(),
                "cells": [dict(asdict(c), passed=c.passed) for c in self.cells]}


def check_trapman_bound(d: int, s: float, beta: float, s_prime: float, *,
                        x_norms: Sequence[int] = (100, 1000), n_max: int = 6,
                        n_samples: int = 10_000, seed: int = 0,
                        p: Optional[float] = None, c0: float = 1.0) -> BoundCheckReport:
    """Compare Monte Carlo tails against ``trapman_bound`` (one-sided, 4 s.e.).

    If the constants cannot be built (e.g. ``s' >= s``) the report carries
    the reason and fails.
    """
    try:
        tc = trapman_constants(d, s, beta, s_prime, p=p, c0=c0)
    except (DomainError, PreconditionError) as exc:
        return BoundCheckReport(None, [], error=str(exc))
    cells = []
    for j, x in enumerate(x_norms):
        est = distance_tail_mc(d, s, beta, int(x), n_max, n_samples, seed=seed + j * n_samples)
        for n in range(1, n_max + 1):
            cells.append(BoundCheckCell(int(x), n, float(est.prob[n - 1]),
                                        float(est.stderr[n - 1]), trapman_bound(x, n, tc)))
    return BoundCheckReport(tc, cells)


def mean_ball_sizes(graphs: Iterable[GraphSample], j_max: int) -> tuple:
    """Mean and standard error of ``|B(0, j)|`` for ``j = 0..j_max`` over ``graphs``."""
    rows = []
    for g in graphs:
        dist = bfs_distances(g, g.origin, max_depth=j_max).dist
        reached = dist[dist >= 0]
        rows.append(np.cumsum(np.bincount(reached, minlength=j_max + 1)[: j_max + 1]))
    a = np.asarray(rows, dtype=float)
    if len(a) < 2:
        return a.mean(axis=0), np.full(j_max + 1, np.inf)
    return a.mean(axis=0), a.std(axis=0, ddof=1) / math.sqrt(len(a))


@dataclass
class Step1Report:
    x_norm: float
    k: int
    n_samples: int
    lhs: float
    lhs_stderr: float
    rhs: float
    ball_means: list
    passed: bool
    insufficient: bool

    def to_dict(self) -> dict:
        return asdict(self)


MIN_STEP1_SAMPLES = 100


def lemma_step1_check(graph_samples: Sequence[GraphSample], x, k: int, *,
                      s_prime: float, R: Optional[int] = None) -> Step1Report:
    """Check ``P(D(0,x) <= k) <= (|x|/k)^{-s'} sum_{j=0}^k E|B_j| E|B_{k-j}|``.

    ``graph_samples`` are independent boxes centred at the origin; ``x`` is an
    integer (a point on the first axis) or a coordinate vector.  Ball sizes
    are taken in the box, which can only shrink them.
    """
    graphs = list(graph_samples)
    if not graphs:
        raise PreconditionError("no graph samples")
    g0 = graphs[0]
    xc = np.zeros(g0.d, dtype=np.int64)
    if np.ndim(x) == 0:
        xc[0] = int(x)
    else:
        xc[:] = np.asarray(x, dtype=np.int64)
    x_norm = float(np.sqrt((xc.astype(float) ** 2).sum()))
    if R is None:
        R = radius_upper(g0.params.beta, g0.params.s, s_prime)
    if not (k >= 1 and x_norm / k >= R):
        raise PreconditionError(f"need |x|/k >= R: |x|={x_norm}, k={k}, R={R}")
    hits = 0
    rows = []
    xi = int(g0.index(xc))
    for g in graphs:
        dist = bfs_distances(g, g.origin, max_depth=k).dist
        hits += 0 <= dist[xi] <= k
        reached = dist[dist >= 0]
        rows.append(np.cumsum(np.bincount(reached, minlength=k + 1)[: k + 1]))
    n = len(graphs)
    balls = np.asarray(rows, dtype=float).mean(axis=0)
    lhs = hits / n
    se = math.sqrt(lhs * (1 - lhs) / n)
    rhs = (x_norm / k) ** (-s_prime) * float(sum(balls[j] * balls[k - j] for j in range(k + 1)))
    return Step1Report(x_norm, k, n, lhs, se, rhs, balls.tolist(),
                       passed=lhs <= rhs + 4 * se, insufficient=n < MIN_STEP1_SAMPLES)


def delta_lemma_check(d: int, n_points: int = 100, margin: float = 1e-3) -> dict:
    """``Δ(d, s) > 1/(2d-s)`` and monotonicity of ``(2d - s) Δ`` on a grid of ``s``."""
    grid = np.linspace(d + margin, 2 * d - margin, n_points)
    delta = np.array([delta_exponent(d, s) for s in grid])
    gap = delta - 1.0 / (2 * d - grid)
    prod = (2 * d - grid) * delta
    return {"d": d, "s": grid.tolist(), "gap_min": float(gap.min()),
            "gap_positive": bool(np.all(gap > 0)),
            "monotone": bool(np.all(np.diff(prod) > 0))}


# --------------------------------------------------------------------------
# Recursion envelope
# --------------------------------------------------------------------------

@dataclass
class EnvelopeLevel:
    k: int
    log_L: float
    log_envelope: float
    log_rhs: float

    @property
    def slack(self) -> float:
        return self.log_envelope - self.log_rhs

    @property
    def informative(self) -> bool:
        return self.log_envelope < 0


@dataclass
class RecursionEnvelope:
    """Candidate envelope ``a_k = c6^{k2-k} exp(-c2_env L_k^{2dζ-s'})`` and its check."""

    schedule: ScaleSchedule
    c2_env: float
    c6: float
    c3: float
    c4: float
    c5: float
    levels: list
    passed: bool
    failed_level: Optional[int]
    message: str = ""

    @property
    def min_slack(self) -> float:
        return min((lv.slack for lv in self.levels), default=math.inf)

    def to_dict(self) -> dict:
        return {"c2_env": self.c2_env, "c6": self.c6, "c3": self.c3, "c4": self.c4,
                "c5": self.c5, "passed": self.passed, "failed_level": self.failed_level,
                "message": self.message, "k1": self.schedule.k1, "k2": self.schedule.k2,
                "log_L": self.schedule.log_L,
                "levels": [dict(asdict(lv), slack=lv.slack, informative=lv.informative)
                           for lv in self.levels]}


def _logaddexp(a, b):
    if a == -mpmath.inf:
        return b
    if b == -mpmath.inf:
        return a
    m = max(a, b)
    return m + mpmath.log(mpmath.exp(a - m) + mpmath.exp(b - m))


def recursion_envelope(schedule: ScaleSchedule, c2_env: float, c6: float,
                       c3: float = 1.0, c4: float = 1.0, c5: float = 1.0) -> RecursionEnvelope:
    """Check that the envelope propagates one level at a time from ``a_{k2} = 0``.

    For each ``k = k2-1 .. k1`` the recursion's right side is evaluated with
    ``a_{k+1}`` replaced by the envelope at ``k+1`` (exactly 0 at ``k2``) and
    compared to the envelope at ``k``.  All arithmetic is in the log domain
    with mpmath, so astronomically large scales are handled exactly enough.
    The check is literal: no clipping of the envelope at 1.
    """
    d = schedule.d
    if d is None:
        raise PreconditionError("schedule must carry d")
    if schedule.mode != "strict":
        raise PreconditionError("recursion envelope is defined for strict schedules")
    if min(c2_env, c6, c3, c4, c5) <= 0:
        raise PreconditionError("all constants must be positive")
    with mpmath.workdps(30):
        return _propagate(schedule, c2_env, c6, c3, c4, c5)


def _propagate(schedule, c2_env, c6, c3, c4, c5) -> RecursionEnvelope:
    d = schedule.d
    sp, z = schedule.s_prime, schedule.zeta
    alpha = 2 * d * z - sp
    w_exp = 2 * d * (1 - z)
    k1, k2 = schedule.k1, schedule.k2
    lc6 = mpmath.log(c6)

    def log_env(k):
        if k == k2:
            return -mpmath.inf
        lnL = mpmath.mpf(schedule.log_scale(k))
        return (k2 - k) * lc6 - c2_env * mpmath.exp(alpha * lnL)

    levels = []
    failed = None
    for k in range(k2 - 1, k1 - 1, -1):
        lnL = mpmath.mpf(schedule.log_scale(k))
        nxt = log_env(k + 1)
        if nxt == -mpmath.inf:
            t1 = -mpmath.inf
        else:
            t1 = c3 * mpmath.exp(w_exp * lnL) * (mpmath.log(2) + nxt)
        t2 = mpmath.log(c4) + 2 * d * lnL - c5 * mpmath.exp(alpha * lnL)
        rhs = _logaddexp(t1, t2)
        env = log_env(k)
        lv = EnvelopeLevel(k, float(lnL), float(env), float(rhs))
        levels.append(lv)
        tol = LOG_GUARD * max(1.0, abs(float(rhs)))
        if failed is None and float(env - rhs) < -tol:
            failed = k
    levels.reverse()
    msg = "" if failed is None else (
        f"envelope fails at level {failed}; try a smaller c2_env or a different c6")
    return RecursionEnvelope(schedule, c2_env, c6, c3, c4, c5, levels,
                             failed is None, failed, msg)


def search_envelope(schedule: ScaleSchedule, c3: float = 1.0, c4: float = 1.0,
                    c5: float = 1.0, c2_grid: Optional[Sequence[float]] = None,
                    c6_grid: Optional[Sequence[float]] = None) -> RecursionEnvelope:
    """Grid search over ``(c2_env, c6)``; returns the passing envelope with the
    largest ``c2_env`` (ties: smallest ``c6``), else the one with the best
    worst-level slack."""
    c2_grid = np.geomspace(1e-4, 1.0, 17) if c2_grid is None else c2_grid
    c6_grid = np.geomspace(1e-3, 1.0, 13) if c6_grid is None else c6_grid
    best_pass, best_fail = None, None
    for c2 in sorted(c2_grid, reverse=True):
        for c6 in sorted(c6_grid):
            env = recursion_envelope(schedule, float(c2), float(c6), c3, c4, c5)
            if env.passed:
                if best_pass is None or c2 > best_pass.c2_env:
                    best_pass = env
            elif best_fail is None or env.min_slack > best_fail.min_slack:
                best_fail = env
        if best_pass is not None:
            return best_pass
    return best_fail


STRICT_EXAMPLE = dict(s_prime=1.52, gamma=0.77, zeta=0.98, eta=2.35, theta=51.0, epsilon=0.25)
# ln L large enough that the bottom scale L_{k2} clears 32 d R (R = 1 here).
STRICT_EXAMPLE_LOG_L = 1e12


def strict_example_schedule(log_L: float = STRICT_EXAMPLE_LOG_L) -> ScaleSchedule:
    from .model import build_schedule
    return build_schedule(log_L=log_L, mode="strict", d=1, s=1.5, **STRICT_EXAMPLE)
