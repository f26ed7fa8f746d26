"""Exact Euclidean cubic spline interpolation in the uniform B-spline basis.

Serves as the closed-form reference solver against which the manifold solver is
checked on flat backends, and hosts the Galerkin orthogonality test for the
second-derivative error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ContractViolation, DomainError


def bspline_basis(t):
    """Uniform cubic B-spline centered at 0, supported on [-2, 2].

    ``B(t) = (3|t|^3 - 6 t^2 + 4)/6`` for ``|t| <= 1``,
    ``(2 - |t|)^3 / 6`` for ``1 < |t| <= 2``, zero otherwise.
    """
    a = np.abs(np.asarray(t, dtype=float))
    inner = (3.0 * a ** 3 - 6.0 * a ** 2 + 4.0) / 6.0
    outer = (2.0 - a) ** 3 / 6.0
    out = np.where(a <= 1.0, inner, np.where(a <= 2.0, outer, 0.0))
    return out if out.ndim else float(out)


def bspline_basis_d2(t):
    """Second derivative of :func:`bspline_basis` (piecewise linear)."""
    x = np.asarray(t, dtype=float)
    a = np.abs(x)
    inner = 3.0 * a - 2.0
    outer = 2.0 - a
    out = np.where(a <= 1.0, inner, np.where(a <= 2.0, outer, 0.0))
    return out if out.ndim else float(out)


@dataclass
class BSplineCoefficients:
    """Control points ``x_{-1} .. x_{N+1}`` of a clamped uniform cubic spline
    on [0, 1] with knot spacing ``h = 1/N``."""

    control: np.ndarray
    h: float

    def __post_init__(self):
        self.control = np.atleast_2d(np.asarray(self.control, dtype=float))
        n_knots = round(1.0 / self.h) + 1
        if self.control.shape[0] != n_knots + 2:
            raise ContractViolation(
                f"expected {n_knots + 2} control points for h={self.h}")

    @property
    def n_intervals(self) -> int:
        return round(1.0 / self.h)


def euclidean_cubic_spline(knots, v0, v1, h) -> BSplineCoefficients:
    """Solve the tridiagonal interpolation system for the cubic spline through
    ``knots`` (values at t = 0, h, ..., 1) with end derivatives ``v0, v1``.

    Row 0 and row N+2 encode the derivative conditions; the interior rows are
    the interpolation constraints ``(x_{i-1} + 4 x_i + x_{i+1})/6 = y_i``.
    """
    Y = np.atleast_2d(np.asarray(knots, dtype=float))
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    v1 = np.atleast_1d(np.asarray(v1, dtype=float))
    N = Y.shape[0] - 1
    if N < 1:
        raise ContractViolation("need at least two knot values")
    n = N + 3
    # banded storage for solve_banded((1, 1), ...)
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0 / 6.0
    ab[1, :] = 4.0 / 6.0
    ab[2, :-1] = 1.0 / 6.0
    ab[1, 0] = ab[1, -1] = 1.0 / 12.0
    ab[0, 1] = ab[2, -2] = 1.0 / 6.0
    b = np.zeros((n, Y.shape[1]))
    b[0] = Y[0] / 4.0 - v0 * h / 12.0
    b[1:-1] = Y
    b[-1] = Y[-1] / 4.0 + v1 * h / 12.0
    control = solve_banded((1, 1), ab, b)
    return BSplineCoefficients(control, float(h))


def _eval_sum(coeffs: BSplineCoefficients, t, basis):
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > 1.0 + 1e-12):
        raise DomainError("spline parameter outside [0, 1]")
    s = t / coeffs.h  # position in knot units
    idx = np.arange(-1, coeffs.n_intervals + 2)
    # (n_t, n_control) weight matrix; at most four columns are nonzero per row
    W = basis(s[..., None] - idx)
    return W @ coeffs.control


def evaluate(coeffs: BSplineCoefficients, t):
    """Evaluate the spline at parameter values ``t`` in [0, 1]."""
    out = _eval_sum(coeffs, t, bspline_basis)
    return out[0] if np.ndim(t) == 0 else out


def evaluate_d2(coeffs: BSplineCoefficients, t):
    """Second derivative of the spline at ``t``."""
    out = _eval_sum(coeffs, t, bspline_basis_d2) / coeffs.h ** 2
    return out[0] if np.ndim(t) == 0 else out


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(6)


def galerkin_check(spline: BSplineCoefficients, gamma_d2, w) -> float:
    """Quadrature value of ``\\int_0^1 (w(t), s''(t) - gamma''(t)) dt``.

    ``gamma_d2(t)`` returns the exact second derivative of the target curve;
    ``w(t)`` is a continuous piecewise-linear test field on the knot grid.
    Uses a 6-point Gauss rule per knot subinterval, so both the piecewise-cubic
    spline part and the kinks of ``w`` are handled exactly up to the smooth
    remainder.
    """
    total = 0.0
    h = spline.h
    for i in range(spline.n_intervals):
        a, b = i * h, (i + 1) * h
        tq = 0.5 * (b - a) * _GAUSS_NODES + 0.5 * (a + b)
        diff = evaluate_d2(spline, tq) - np.atleast_2d(
            np.asarray([gamma_d2(t) for t in tq], dtype=float))
        wv = np.atleast_2d(np.asarray([w(t) for t in tq], dtype=float))
        vals = np.sum(wv * diff, axis=-1)
        total += 0.5 * (b - a) * float(np.dot(_GAUSS_WEIGHTS, vals))
    return total
