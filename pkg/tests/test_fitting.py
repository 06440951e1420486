from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrplab import ModelParams, PreconditionError, ball_growth, sample_graph
from lrplab.fitting import fit_ball_curve, fit_diameters, fit_exponent, transform_points
from lrplab.metrics import BallCurve


def test_exact_line():
    u = np.linspace(1, 3, 10)
    fit = fit_exponent(np.column_stack([u, 2.4094 * u]), "D")
    assert fit.slope == pytest.approx(2.4094, abs=1e-12)
    assert fit.stderr == pytest.approx(0, abs=1e-12) and fit.r2 == pytest.approx(1.0)


def test_noisy_line_slope():
    rng = np.random.default_rng(0)
    u = np.linspace(0, 10, 100)
    fit = fit_exponent(np.column_stack([u, u + rng.normal(0, 0.01, 100)]), "ball")
    assert 0.99 <= fit.slope <= 1.01 and fit.stderr > 0


def test_rejections():
    with pytest.raises(PreconditionError):
        fit_exponent([(1, 1), (2, 2)], "D")
    with pytest.raises(PreconditionError):
        fit_exponent([(1, 1), (1, 2), (1, 3)], "D")
    with pytest.raises(PreconditionError):
        fit_exponent([(1, 1), (2, 2), (3, 3)], "other")
    with pytest.raises(PreconditionError):
        fit_exponent([(1, 1), (2, 2), (3, 3), (4, 4)], "D", censored=[0, 1, 1, 0])


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=3, max_size=30))
@settings(deadline=None)
def test_refit_reproduces(points):
    try:
        fit = fit_exponent(points, "D")
    except PreconditionError:
        return
    again = fit.refit()
    assert again.slope == pytest.approx(fit.slope, rel=1e-9, abs=1e-9)
    assert fit.stderr >= 0


def test_transforms():
    pts = transform_points([2, 10, 100, 1000], [3, 5, 7, 9], "D")
    assert len(pts) == 3 and pts[0, 0] == pytest.approx(math.log(math.log(10)))
    pts = transform_points([1, 3, 4, 10], [3, 7, 9, 50], "ball")
    assert pts[:, 0].tolist() == pytest.approx([math.log(4), math.log(10)])
    L = np.array([2.0**12, 2.0**14, 2.0**16])
    D = np.log(L) ** 2.4
    assert fit_diameters(L, D).slope == pytest.approx(2.4)


def test_ball_fit_excludes_small_and_censored_radii():
    vals = np.array([1, 5, 11, 25, 60, 150, 400, 1000, 1001], dtype=np.int64)
    curve = BallCurve(0, vals, boundary_radius=7)
    fit = fit_ball_curve(curve)
    assert fit.n_points == 3
    assert fit.u[0] == pytest.approx(math.log(4))


def test_ball_fit_on_sample():
    g = sample_graph(ModelParams(1, 1.5, 1.0, 10**5, seed=2))
    fit = fit_ball_curve(ball_growth(g, g.origin, 40))
    assert 0.1 < fit.slope < 1.0
