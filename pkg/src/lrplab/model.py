"""Model parameters, the connectivity kernel and the multiscale schedule.

The percolation graph lives on the box ``[-L, L]^d`` of the integer lattice.
Every pair of distinct sites ``x, y`` is joined independently with probability
``p(x - y) = 1 - exp(-q(x - y))`` where ``q(v) = beta * |v|_2 ** -s`` off the
nearest-neighbour shell; nearest-neighbour edges are always present when
``nn_always`` is set.

All logarithms of ``L`` are natural logarithms.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np

from .errors import ConstraintViolation, DomainError, PreconditionError

U64_MAX = 2**64 - 1

# Scales whose natural log exceeds this are kept symbolic (log only).
MAX_MATERIALIZED_LOG = 5000.0
MAX_LEVELS = 100_000


# --------------------------------------------------------------------------
# Model parameters and kernel
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelParams:
    """Long-range percolation model restricted to ``[-L, L]^d``."""

    d: int
    s: float
    beta: float
    L: int
    seed: int = 0
    nn_always: bool = True

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be an integer >= 1, got {self.d}")
        if int(self.L) != self.L or self.L < 1:
            raise DomainError(f"box radius must be an integer >= 1, got {self.L}")
        if not (self.s > 0 and math.isfinite(self.s)):
            raise DomainError(f"decay exponent must be positive, got {self.s}")
        if not (self.beta >= 0):
            raise DomainError(f"amplitude must be >= 0, got {self.beta}")
        if not (0 <= int(self.seed) <= U64_MAX):
            raise DomainError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "nn_always", bool(self.nn_always))

    @property
    def side(self) -> int:
        return 2 * self.L + 1

    @property
    def n_vertices(self) -> int:
        return self.side**self.d

    @property
    def in_theory_regime(self) -> bool:
        """True when ``d < s < 2d``, the regime of the polylog diameter law."""
        return self.d < self.s < 2 * self.d

    def with_seed(self, seed: int) -> "ModelParams":
        return ModelParams(self.d, self.s, self.beta, self.L, seed, self.nn_always)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ConnectivityKernel:
    """Edge weights ``q(v)`` and edge probabilities ``p(v) = 1 - e^{-q(v)}``.

    Displacements are integer vectors of length ``d``; array inputs of shape
    ``(..., d)`` are evaluated elementwise.
    """

    d: int
    s: float
    beta: float
    nn_always: bool = True

    @classmethod
    def from_params(cls, params: ModelParams) -> "ConnectivityKernel":
        return cls(params.d, params.s, params.beta, params.nn_always)

    def _as_displacements(self, v) -> np.ndarray:
        arr = np.asarray(v, dtype=np.int64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.shape[-1] != self.d:
            raise PreconditionError(
                f"displacement must have {self.d} components, got shape {arr.shape}")
        return arr

    def q(self, v):
        arr = self._as_displacements(v)
        norm1 = np.abs(arr).sum(axis=-1)
        if np.any(norm1 == 0):
            raise PreconditionError("zero displacement: the graph has no self-loops")
        norm2 = np.sqrt((arr.astype(np.float64) ** 2).sum(axis=-1))
        out = self.beta * norm2 ** (-self.s)
        if self.nn_always:
            out = np.where(norm1 == 1, np.inf, out)
        return out[()] if out.ndim == 0 else out

    def p(self, v):
        return -np.expm1(-np.asarray(self.q(v), dtype=np.float64))

    def p_of_norm(self, r):
        """Edge probability for a non-nearest-neighbour displacement of norm ``r``."""
        r = np.asarray(r, dtype=np.float64)
        return -np.expm1(-self.beta * r ** (-self.s))


def kernel_probability(kernel: ConnectivityKernel, v) -> float:
    """Probability that sites at displacement ``v`` are joined."""
    out = kernel.p(v)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Exponents
# --------------------------------------------------------------------------

def delta_exponent(d: int, s: float) -> float:
    """``log 2 / log(2d / s)``, the polylogarithmic distance exponent."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if not (0 < s < 2 * d):
        raise DomainError(f"exponent needs 0 < s < 2d, got s={s}, d={d}")
    return math.log(2.0) / math.log(2.0 * d / s)


def delta_prime(d: int, s_prime: float) -> float:
    """``1 / log_2(2d / s')``; numerically the same map as :func:`delta_exponent`."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if not (0 < s_prime < 2 * d):
        raise DomainError(f"exponent needs 0 < s' < 2d, got s'={s_prime}, d={d}")
    return 1.0 / math.log2(2.0 * d / s_prime)


# --------------------------------------------------------------------------
# Constraint chain
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return bool(self.lhs < self.rhs)


@dataclass(frozen=True)
class ConstraintReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "slack": c.slack,
                 "passed": c.passed}
                for c in self.checks
            ],
        }


def _inv_pos(x: float) -> float:
    return 1.0 / x if x > 0 else math.inf


def check_constraints(d: int, s: float, s_prime: float, gamma: float, zeta: float,
                      eta: float, theta: float, epsilon: float,
                      delta: Optional[float] = None, k1: Optional[int] = None,
                      k2: Optional[int] = None) -> ConstraintReport:
    """Evaluate every inequality the multiscale argument needs.

    Each check is stored as ``lhs < rhs``; ``slack = rhs - lhs``.  The delta
    condition is only included when ``delta``, ``k1`` and ``k2`` are given.
    """
    two_d = 2.0 * d
    try:
        big_delta = delta_exponent(d, s)
    except DomainError:
        big_delta = math.nan
    log_gamma_ratio = (math.log(2.0) / math.log(1.0 / gamma)
                       if 0 < gamma < 1 else math.inf)
    checks = [
        ConstraintCheck("d < s", float(d), s),
        ConstraintCheck("s < 2d", s, two_d),
        ConstraintCheck("s < s'", s, s_prime),
        ConstraintCheck("s' < 2d", s_prime, two_d),
        ConstraintCheck("s'/(2d) < γ", s_prime / two_d, gamma),
        ConstraintCheck("γ < 1", gamma, 1.0),
        ConstraintCheck("log2/log(1/γ) < Δ+ε", log_gamma_ratio, big_delta + epsilon),
        ConstraintCheck("γ < ζ", gamma, zeta),
        ConstraintCheck("ζ < 1", zeta, 1.0),
        ConstraintCheck("1/(2dζ−s') < Δ", _inv_pos(two_d * zeta - s_prime), big_delta),
        ConstraintCheck("η < Δ", eta, big_delta),
        ConstraintCheck("1/(2dζ−s') < η", _inv_pos(two_d * zeta - s_prime), eta),
        ConstraintCheck("1/(2dγ−s') < θ", _inv_pos(two_d * gamma - s_prime), theta),
        ConstraintCheck("η < θ", eta, theta),
        ConstraintCheck("0 < ε", 0.0, epsilon),
    ]
    if delta is not None and k1 is not None and k2 is not None:
        checks.append(ConstraintCheck("k1 ≤ k2", float(k1), k2 + 0.5))
        checks.append(ConstraintCheck("1/2 < (1−δ)^(k2−k1)", 0.5,
                                      (1.0 - delta) ** max(k2 - k1, 0)))
    return ConstraintReport(tuple(checks))


def default_delta(k1: int, k2: int) -> float:
    """Largest ``delta`` with ``(1 - delta)^(k2 - k1) > 1/2``, rounded down to 3 decimals."""
    m = max(k2 - k1, 0)
    if m == 0:
        return 0.999
    bound = 1.0 - 2.0 ** (-1.0 / m)
    delta = math.floor(bound * 1000.0) / 1000.0
    while delta > 0 and (1.0 - delta) ** m <= 0.5:
        delta = round(delta - 0.001, 3)
    if delta <= 0:
        raise PreconditionError(
            f"no 3-decimal delta satisfies (1-delta)^{m} > 1/2")
    return delta


# --------------------------------------------------------------------------
# Scale schedule
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleSchedule:
    """The scales ``L_1 >= L_2 >= ... >= L_{k2}`` and the cutoffs ``k0, k1, k2``.

    ``scales[k-1]`` is ``L_k`` as an exact integer, or ``None`` when the scale
    is too large to materialize (astronomical ``L`` given through ``log_L``).
    ``log_scales[k-1]`` is always ``ln L_k``.
    """

    L: Optional[int]
    log_L: float
    s_prime: float
    gamma: float
    zeta: float
    eta: float
    theta: float
    epsilon: float
    delta: float
    mode: str
    k0: int
    k1: int
    k2: int
    scales: tuple
    log_scales: tuple
    d: Optional[int] = None
    s: Optional[float] = None
    warnings: tuple = field(default=())

    def scale(self, k: int) -> int:
        """``L_k``; level 0 is the whole box of side ``2L + 1``."""
        if k == 0:
            if self.L is None:
                raise PreconditionError("level 0 needs an integer L")
            return 2 * self.L + 1
        v = self.scales[k - 1]
        if v is None:
            raise PreconditionError(f"L_{k} is too large to materialize")
        return v

    def log_scale(self, k: int) -> float:
        if k == 0:
            return math.log(2.0) + self.log_L
        return self.log_scales[k - 1]

    @property
    def materialized(self) -> bool:
        return self.L is not None and all(v is not None for v in self.scales)

    @property
    def classified_levels(self) -> range:
        """Levels carrying good/bad labels: ``k1 .. k2``."""
        return range(self.k1, self.k2 + 1)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["L"] = None if self.L is None else str(self.L) if self.L > 2**53 else self.L
        out["scales"] = [None if v is None else (str(v) if v > 2**53 else v)
                         for v in self.scales]
        out["log_scales"] = list(self.log_scales)
        out["warnings"] = list(self.warnings)
        return out


def _mp_log_L(L: Optional[int], log_L) -> mpmath.mpf:
    if L is not None:
        digits = len(str(L))
        with mpmath.workdps(digits + 40):
            return +mpmath.log(mpmath.mpf(L))
    return mpmath.mpf(log_L)


def _floor_exp(y: mpmath.mpf):
    """Return ``(floor(e^y) or None, ln of it)`` with exact integer arithmetic."""
    yf = float(y)
    if yf > MAX_MATERIALIZED_LOG:
        return None, yf
    dps = int(yf / 2.302585) + 40
    with mpmath.workdps(dps):
        val = int(mpmath.floor(mpmath.exp(y)))
        return val, float(mpmath.log(val))


def _exceeds(value: Optional[int], log_value: float, log_threshold: mpmath.mpf) -> bool:
    """``value > e^{log_threshold}``, exactly when ``value`` is materialized."""
    if value is None:
        return log_value > float(log_threshold)
    lt = float(log_threshold)
    if lt > MAX_MATERIALIZED_LOG:
        return False
    with mpmath.workdps(int(max(lt, 1.0) / 2.302585) + 40):
        return mpmath.mpf(value) > mpmath.exp(log_threshold)


def _below(value: Optional[int], log_value: float, log_threshold: mpmath.mpf) -> bool:
    """``value < e^{log_threshold}``."""
    if value is None:
        return log_value < float(log_threshold)
    lt = float(log_threshold)
    if lt > MAX_MATERIALIZED_LOG:
        return True
    with mpmath.workdps(int(max(lt, 1.0) / 2.302585) + 40):
        return mpmath.mpf(value) < mpmath.exp(log_threshold)


def build_schedule(L: Optional[int] = None, *, s_prime: float, gamma: float, zeta: float,
                   eta: float, theta: float, epsilon: float,
                   delta: Optional[float] = None, mode: str = "strict",
                   d: Optional[int] = None, s: Optional[float] = None,
                   log_L=None) -> ScaleSchedule:
    """Compute the scales ``L_k`` and the cutoffs ``k0, k1, k2``.

    ``L_k = floor(L^{γ^k})`` for ``k <= k0`` and
    ``floor(L^{γ^{k0} ζ^{k-k0}})`` afterwards, with
    ``k0 = max{k >= 1 : floor(L^{γ^k}) > (ln L)^θ}``,
    ``k1 = max{k >= 1 : L_k > (ln L)^η}`` and
    ``k2 = min{k >= 1 : L_k < (ln L)^ε}``.  An empty max is taken as 0.

    Pass an integer ``L`` for box-scale work, or ``log_L`` (a natural log,
    float or string) to study astronomically large boxes; such scales are
    kept as logarithms.  In ``strict`` mode ``d`` and ``s`` are required and
    the full constraint chain must hold; ``demo`` mode only warns.
    """
    if mode not in ("strict", "demo"):
        raise PreconditionError(f"mode must be 'strict' or 'demo', got {mode!r}")
    for name, val in (("γ", gamma), ("ζ", zeta)):
        if not (0 < val < 1):
            raise PreconditionError(f"{name} must lie in (0, 1), got {val}")
    for name, val in (("s'", s_prime), ("η", eta), ("θ", theta), ("ε", epsilon)):
        if not math.isfinite(val):
            raise PreconditionError(f"{name} must be finite, got {val}")
    if (L is None) == (log_L is None):
        raise PreconditionError("give exactly one of L or log_L")
    if L is not None:
        if int(L) != L or L < 3:
            raise PreconditionError(f"L must be an integer >= 3, got {L}")
        L = int(L)
    if mode == "strict" and (d is None or s is None):
        raise PreconditionError("strict mode needs d and s for the constraint chain")

    lnL = _mp_log_L(L, log_L)
    if lnL <= 1:
        raise PreconditionError("(log L)^ε <= 1: k2 undefined, L too small")
    lnlnL = mpmath.log(lnL)
    g, z = mpmath.mpf(gamma), mpmath.mpf(zeta)

    # k0 from the pure γ-scales.
    k0 = 0
    k = 1
    thr_theta = mpmath.mpf(theta) * lnlnL
    while k <= MAX_LEVELS:
        val, lv = _floor_exp(lnL * g**k)
        if _exceeds(val, lv, thr_theta):
            k0 = k
            k += 1
        else:
            break

    thr_eta = mpmath.mpf(eta) * lnlnL
    thr_eps = mpmath.mpf(epsilon) * lnlnL
    scales, log_scales = [], []
    k1 = 0
    k2 = None
    for k in range(1, MAX_LEVELS + 1):
        expo = g**k if k <= k0 else g**k0 * z ** (k - k0)
        val, lv = _floor_exp(lnL * expo)
        scales.append(val)
        log_scales.append(lv)
        if _exceeds(val, lv, thr_eta):
            k1 = k
        if _below(val, lv, thr_eps):
            k2 = k
            break
    if k2 is None:
        raise PreconditionError("k2 not reached within the level cap")

    notes = []
    if k0 == 0:
        notes.append("k0 = 0: no γ-scale exceeds (log L)^θ; all scales use ζ")
    if k1 > k2:
        notes.append(f"k1={k1} > k2={k2}: hierarchy collapsed to the level k2")
        k1 = k2

    if delta is None:
        delta = default_delta(k1, k2)

    sched = ScaleSchedule(
        L=L, log_L=float(lnL), s_prime=float(s_prime), gamma=float(gamma),
        zeta=float(zeta), eta=float(eta), theta=float(theta), epsilon=float(epsilon),
        delta=float(delta), mode=mode, k0=k0, k1=k1, k2=k2,
        scales=tuple(scales), log_scales=tuple(log_scales), d=d,
        s=None if s is None else float(s), warnings=tuple(notes))

    if d is not None and s is not None:
        report = validate_constraints(sched, d, s)
        if not report.passed:
            if mode == "strict":
                raise ConstraintViolation(report.failures)
            for f in report.failures:
                warnings.warn(f"demo schedule: {f.name} fails (slack {f.slack:.4g})",
                              stacklevel=2)
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return sched


def validate_constraints(schedule: ScaleSchedule, d: int, s: float) -> ConstraintReport:
    """Check the constraint chain (including the δ condition) for ``schedule``."""
    return check_constraints(d, s, schedule.s_prime, schedule.gamma, schedule.zeta,
                             schedule.eta, schedule.theta, schedule.epsilon,
                             schedule.delta, schedule.k1, schedule.k2)


def recompute_cutoffs(schedule: ScaleSchedule) -> tuple:
    """Recompute ``(k0, k1, k2)`` from the stored scales by their defining formulas.

    Independent of :func:`build_schedule`: k0 comes from freshly evaluated
    γ-scales, k1 and k2 from scanning ``schedule.scales``.
    """
    if schedule.L is None:
        raise PreconditionError("recomputation needs an integer L")
    L = schedule.L
    with mpmath.workdps(len(str(L)) + 60):
        lnL = mpmath.log(L)
        t_theta = mpmath.power(lnL, schedule.theta)
        t_eta = mpmath.power(lnL, schedule.eta)
        t_eps = mpmath.power(lnL, schedule.epsilon)
        k0 = 0
        for k in range(1, MAX_LEVELS):
            v = mpmath.floor(mpmath.power(L, mpmath.mpf(schedule.gamma) ** k))
            if v > t_theta:
                k0 = k
            else:
                break
        k1 = max([k for k, v in enumerate(schedule.scales, 1) if v > t_eta], default=0)
        k2 = min(k for k, v in enumerate(schedule.scales, 1) if v < t_eps)
    return k0, min(k1, k2), k2


def demo_schedule(L: int, *, gamma: float = 0.9694, zeta: float = 0.83, eta: float = 4.2,
                  theta: float = 4.5, epsilon: float = 2.9, s_prime: float = 1.52,
                  delta: Optional[float] = None, d: Optional[int] = None,
                  s: Optional[float] = None) -> ScaleSchedule:
    """Workable desk-scale schedule.

    The defaults were tuned for ``d = 1, s = 1.5, beta = 1, L = 10**5``: they give
    ``k0 = k1 = 1``, ``k2 = 4`` and scales of roughly 70000, 10500, 2200 and 600,
    so that upper levels have enough children to absorb one bad child.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_schedule(L, s_prime=s_prime, gamma=gamma, zeta=zeta, eta=eta,
                              theta=theta, epsilon=epsilon, delta=delta, mode="demo",
                              d=d, s=s)


def lemma_delta_gap(d: int, s_values: Sequence[float]) -> np.ndarray:
    """``Δ(d, s) - 1/(2d - s)`` on a grid of ``s``."""
    return np.array([delta_exponent(d, s) - 1.0 / (2 * d - s) for s in s_values])
