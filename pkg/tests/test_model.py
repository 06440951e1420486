from __future__ import annotations

import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrplab import (ConnectivityKernel, ConstraintViolation, DomainError, ModelParams,
                    PreconditionError, build_schedule, delta_exponent, delta_prime,
                    demo_schedule, kernel_probability)
from lrplab.model import check_constraints, default_delta, recompute_cutoffs, validate_constraints

STRICT = dict(s_prime=1.52, gamma=0.77, zeta=0.98, eta=2.35, theta=51.0, epsilon=0.25)


def mp_delta(d, s):
    with mpmath.workdps(50):
        return float(mpmath.log(2) / mpmath.log(mpmath.mpf(2 * d) / mpmath.mpf(s)))


# -- exponents --------------------------------------------------------------

@pytest.mark.parametrize("d,s,expected", [(1, 1.0, 1.0), (1, 1.5, 2.4094), (2, 3.0, 2.4094)])
def test_delta_exponent_values(d, s, expected):
    assert delta_exponent(d, s) == pytest.approx(expected, abs=5e-5)
    assert delta_exponent(d, s) == pytest.approx(mp_delta(d, s), rel=1e-14)


@pytest.mark.parametrize("s", [0.0, -1.0, 2.0, 2.5])
def test_delta_exponent_domain(s):
    with pytest.raises(DomainError):
        delta_exponent(1, s)


def test_delta_prime_values_and_divergence():
    assert delta_prime(1, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert delta_prime(1, 1.5) == pytest.approx(2.4094, abs=5e-5)
    vals = [delta_prime(1, 2 - 10.0**-k) for k in range(1, 8)]
    assert all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] > 1e6
    with pytest.raises(DomainError):
        delta_prime(1, 2.0)


@given(st.integers(1, 4), st.floats(0.01, 0.99), st.integers(2, 5))
def test_delta_depends_only_on_ratio(d, frac, c):
    s = 2 * d * frac
    assert delta_exponent(d, s) == pytest.approx(delta_exponent(c * d, c * s), rel=1e-12)


@given(st.integers(1, 4), st.floats(0.01, 0.98), st.floats(1e-4, 0.01))
def test_delta_increasing_and_above_one_iff_s_above_d(d, frac, eps):
    s = 2 * d * frac
    assert delta_exponent(d, s + eps * d) > delta_exponent(d, s)
    if s != d:
        assert (delta_exponent(d, s) > 1) == (s > d)


@pytest.mark.parametrize("d", [1, 2])
def test_delta_prime_identity_on_grid(d):
    for sp in np.linspace(d + 0.01, 2 * d - 0.01, 20):
        assert delta_prime(d, sp) * math.log(2 * d / sp) == pytest.approx(math.log(2), abs=1e-12)
        assert delta_prime(d, sp) == pytest.approx(delta_exponent(d, sp), rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_delta_above_inverse_gap(d):
    grid = np.linspace(d, 2 * d, 102)[1:-1]
    assert all(delta_exponent(d, s) > 1 / (2 * d - s) for s in grid)


# -- kernel -----------------------------------------------------------------

def test_kernel_examples():
    k = ConnectivityKernel(1, 1.5, 1.0)
    assert kernel_probability(k, [1]) == 1.0
    assert kernel_probability(k, [-1]) == 1.0
    assert kernel_probability(k, [2]) == pytest.approx(1 - math.exp(-2**-1.5), rel=1e-14)
    assert kernel_probability(k, [2]) == pytest.approx(0.29781, abs=5e-6)
    assert kernel_probability(ConnectivityKernel(1, 1.5, 0.0), [2]) == 0.0
    assert kernel_probability(ConnectivityKernel(2, 3.0, 0.0), [1, 1]) == 0.0
    with pytest.raises(PreconditionError):
        kernel_probability(k, [0])


def test_kernel_without_nn_and_in_2d():
    k = ConnectivityKernel(2, 3.0, 2.0, nn_always=False)
    assert kernel_probability(k, [1, 0]) == pytest.approx(1 - math.exp(-2.0))
    assert kernel_probability(k, [1, 1]) == pytest.approx(1 - math.exp(-2.0 * 2**-1.5))
    with pytest.raises(PreconditionError):
        kernel_probability(k, [1, 2, 3])


def test_kernel_even_on_fuzz_set():
    rng = np.random.default_rng(5)
    for d in (1, 2, 3):
        k = ConnectivityKernel(d, 1.2 * d, 1.7)
        v = rng.integers(-50, 51, size=(10_000, d))
        v = v[np.abs(v).sum(axis=1) > 0]
        p = kernel_probability(k, v)
        assert np.array_equal(p, kernel_probability(k, -v))
        assert np.all((p >= 0) & (p <= 1))


@given(st.integers(2, 10**6), st.floats(1.01, 1.99))
def test_kernel_decay_exponent(r, s):
    k = ConnectivityKernel(1, s, 1.0)
    assert k.q([r]) == pytest.approx(r ** -s, rel=1e-12)


def test_model_params_validation():
    with pytest.raises(DomainError):
        ModelParams(0, 1.5, 1.0, 3)
    with pytest.raises(DomainError):
        ModelParams(1, 1.5, -1.0, 3)
    with pytest.raises(DomainError):
        ModelParams(1, 1.5, 1.0, 0)
    with pytest.raises(DomainError):
        ModelParams(1, 1.5, 1.0, 3, seed=2**64)
    assert ModelParams(1, 1.5, 1.0, 3).in_theory_regime
    assert not ModelParams(1, 2.5, 1.0, 3).in_theory_regime


# -- schedule ---------------------------------------------------------------

def _demo(L, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_schedule(L, mode="demo", **{**STRICT, **kw})


def test_schedule_scales_example():
    sch = _demo(10**6, gamma=0.8, theta=2.0, zeta=0.9)
    assert sch.scale(1) == 63095 and sch.scale(2) == 6918
    assert sch.k0 == 4
    # The defining max: floor(L^{γ^4}) = 286 > (ln L)^2 >= floor(L^{γ^5}) = 92.
    assert sch.scale(4) == 286
    assert math.floor(10 ** (6 * 0.8**5)) == 92 <= math.log(1e6) ** 2 < 286


@pytest.mark.parametrize("bad", [dict(gamma=1.0), dict(gamma=0.0), dict(zeta=1.0),
                                 dict(theta=math.inf)])
def test_schedule_rejects_bad_parameters(bad):
    with pytest.raises(PreconditionError):
        _demo(10**6, **bad)


def test_schedule_needs_L_and_large_epsilon_log():
    with pytest.raises(PreconditionError):
        _demo(2)
    with pytest.raises(PreconditionError):
        build_schedule(s_prime=1.52, gamma=0.8, zeta=0.9, eta=2, theta=3, epsilon=1,
                       mode="demo", log_L=0.5)


def test_strict_mode_raises_with_named_violation():
    with pytest.raises(ConstraintViolation) as exc:
        build_schedule(10**6, mode="strict", d=1, s=1.5, **{**STRICT, "gamma": 0.70})
    assert any(f.name == "s'/(2d) < γ" for f in exc.value.failures)


def test_validate_constraints_examples():
    rep = check_constraints(1, 1.5, 1.52, 0.77, 0.98, 2.35, 51.0, 0.25, 0.001, 10, 20)
    assert rep.passed
    assert rep["log2/log(1/γ) < Δ+ε"].lhs == pytest.approx(2.652, abs=1e-3)
    assert rep["1/(2dζ−s') < Δ"].lhs == pytest.approx(2.273, abs=1e-3)
    assert rep["1/(2dγ−s') < θ"].lhs == pytest.approx(50.0, abs=1e-9)
    rep = check_constraints(1, 1.5, 1.52, 0.70, 0.98, 2.35, 51.0, 0.25)
    assert "s'/(2d) < γ" in [f.name for f in rep.failures]
    rep = check_constraints(1, 1.5, 1.52, 0.77, 1.0, 2.35, 51.0, 0.25)
    assert "ζ < 1" in [f.name for f in rep.failures]


def test_strict_schedule_at_astronomical_L():
    sch = build_schedule(log_L=1e12, mode="strict", d=1, s=1.5, **STRICT)
    assert validate_constraints(sch, 1, 1.5).passed
    assert sch.k0 <= sch.k1 <= sch.k2
    assert (1 - sch.delta) ** (sch.k2 - sch.k1) > 0.5
    # L_{k2} < (ln L)^ε
    assert sch.log_scale(sch.k2) < 0.25 * math.log(1e12)


@given(st.integers(10**3, 10**12), st.floats(0.6, 0.95), st.floats(0.6, 0.95),
       st.floats(1.0, 6.0), st.floats(0.2, 3.0))
@settings(max_examples=40, deadline=None)
def test_cutoffs_match_recomputation(L, gamma, zeta, theta, epsilon):
    sch = _demo(L, gamma=gamma, zeta=zeta, theta=theta, eta=theta * 0.9, epsilon=epsilon)
    assert recompute_cutoffs(sch) == (sch.k0, sch.k1, sch.k2)
    scales = [sch.scale(k) for k in range(1, sch.k2 + 1)]
    assert all(a >= b for a, b in zip(scales, scales[1:]))
    for k, v in enumerate(scales, 1):
        e = gamma**k if k <= sch.k0 else gamma**sch.k0 * zeta ** (k - sch.k0)
        with mpmath.workdps(60):
            assert v == int(mpmath.floor(mpmath.power(L, mpmath.mpf(e))))


def test_default_delta():
    assert default_delta(1, 4) == 0.206
    assert (1 - 0.206) ** 3 > 0.5 > (1 - 0.207) ** 3
    assert default_delta(3, 3) == 0.999


def test_demo_schedule_shape():
    sch = demo_schedule(10**5)
    assert (sch.k0, sch.k1, sch.k2) == (1, 1, 4)
    assert sch.scales == (70307, 10544, 2183, 590)
    assert sch.to_dict()["scales"] == [70307, 10544, 2183, 590]
