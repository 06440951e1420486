"""Least-squares exponent fits on log-transformed measurements."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress

from .errors import PreconditionError

TRANSFORMS = ("D", "ball")
BALL_R_MIN = 3  # radii <= this are dropped from ball fits


@dataclass(frozen=True)
class ExponentFit:
    """OLS fit ``v = slope * u + intercept`` on transformed points.

    For transform ``D`` (``u = log log L``, ``v = log D_L``) the slope
    estimates Δ; for ``ball`` (``u = log r``, ``v = log log |B(0,r)|``) it
    estimates 1/Δ.
    """

    slope: float
    intercept: float
    stderr: float
    r2: float
    n_points: int
    transform: str
    u: tuple
    v: tuple

    def refit(self) -> "ExponentFit":
        return fit_exponent(list(zip(self.u, self.v)), self.transform)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["u"], out["v"] = list(self.u), list(self.v)
        return out


def fit_exponent(points: Sequence, transform: str,
                 censored: Optional[Sequence[bool]] = None) -> ExponentFit:
    """Fit already-transformed ``(u, v)`` points; censored points are skipped."""
    if transform not in TRANSFORMS:
        raise PreconditionError(f"transform must be one of {TRANSFORMS}, got {transform!r}")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if censored is not None:
        pts = pts[~np.asarray(censored, dtype=bool)]
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    if len(pts) < 3:
        raise PreconditionError(f"need at least 3 usable points, got {len(pts)}")
    u, v = pts[:, 0], pts[:, 1]
    if np.ptp(u) <= 1e-12 * max(1.0, float(np.abs(u).max())):
        raise PreconditionError("degenerate abscissae: all u are equal")
    res = linregress(u, v)
    if not math.isfinite(res.slope):
        raise PreconditionError("degenerate abscissae: slope is not finite")
    stderr = float(res.stderr) if math.isfinite(res.stderr) else 0.0
    r2 = float(res.rvalue**2) if math.isfinite(res.rvalue) else 1.0
    return ExponentFit(float(res.slope), float(res.intercept), max(stderr, 0.0), r2,
                       len(pts), transform, tuple(u.tolist()), tuple(v.tolist()))


def transform_points(x, y, transform: str) -> np.ndarray:
    """Map raw measurements to fit coordinates.

    ``D``: ``(L, D_L) -> (log log L, log D_L)``.
    ``ball``: ``(r, |B|) -> (log r, log log |B|)``, keeping ``r > BALL_R_MIN``
    and ``|B| > 1``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if transform == "D":
        keep = (x > math.e) & (y > 0)
        return np.column_stack([np.log(np.log(x[keep])), np.log(y[keep])])
    if transform == "ball":
        keep = (x > BALL_R_MIN) & (y > 1)
        return np.column_stack([np.log(x[keep]), np.log(np.log(y[keep]))])
    raise PreconditionError(f"transform must be one of {TRANSFORMS}, got {transform!r}")


def fit_diameters(L_values, diameters) -> ExponentFit:
    return fit_exponent(transform_points(L_values, diameters, "D"), "D")


def fit_ball_curve(curve) -> ExponentFit:
    """Fit a ``BallCurve`` over radii ``BALL_R_MIN < r < boundary_radius``."""
    r, sizes = curve.uncensored(BALL_R_MIN + 1)
    return fit_exponent(transform_points(r, sizes, "ball"), "ball")
