"""Discrete curves on a manifold and covariant finite-difference calculus.

A :class:`DiscreteCurve` stores a fine, per-interval-uniform time grid together
with one manifold point per node and the indices of the interpolation knots.
Vector fields along a curve are differentiated with parallel-transported
centered differences; all stencils stay inside a single knot interval because
spline interpolants are only piecewise smooth across knots.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .manifolds import Manifold, from_id

_BASE_TOL = 1e-12


@dataclass
class DiscreteCurve:
    """A sampled curve: strictly increasing times on [0, 1], one point per node,
    and the node indices of the interpolation knots."""

    manifold_id: str
    times: np.ndarray
    points: np.ndarray
    knot_indices: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        self.knot_indices = np.asarray(self.knot_indices, dtype=int)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ContractViolation("times must be strictly increasing")
        if abs(self.times[0]) > _BASE_TOL or abs(self.times[-1] - 1.0) > _BASE_TOL:
            raise ContractViolation("curve parameter must span [0, 1]")
        if self.points.shape != (self.times.size, self.manifold.ambient_dim):
            raise ContractViolation("points array shape does not match grid/manifold")
        if self.knot_indices[0] != 0 or self.knot_indices[-1] != self.times.size - 1:
            raise ContractViolation("knots must include both curve endpoints")

    @property
    def manifold(self) -> Manifold:
        return from_id(self.manifold_id)

    @property
    def n_nodes(self) -> int:
        return self.times.size

    def segments(self):
        """Yield ``(start, stop)`` node-index pairs for each knot interval,
        inclusive of both interval endpoints."""
        for a, b in zip(self.knot_indices[:-1], self.knot_indices[1:]):
            yield int(a), int(b)

    def segment_spacing(self, a, b):
        return (self.times[b] - self.times[a]) / (b - a)


@dataclass
class VectorFieldAlongCurve:
    """One tangent vector per node of a discrete curve."""

    curve: DiscreteCurve
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.shape != self.curve.points.shape:
            raise ContractViolation("field shape does not match the curve")
        worst = np.max(self.curve.manifold.tangency_violation(
            self.curve.points, self.vectors), initial=0.0)
        if worst > 1e-9:
            raise ContractViolation(
                f"field is not tangent to the curve (violation {worst:.2e})")

    def norms(self):
        """Pointwise metric norms, shape ``(n_nodes,)``."""
        return self.curve.manifold.norm(self.curve.points, self.vectors)

    def max_norm(self):
        return float(self.norms().max())


def _check_resolution(curve: DiscreteCurve, minimum: int):
    for a, b in curve.segments():
        if b - a < minimum:
            raise ConfigurationError(
                f"need at least {minimum} sub-intervals per knot interval, got {b - a}")


def velocity(curve: DiscreteCurve) -> VectorFieldAlongCurve:
    """Second-order velocity field: symmetric logarithm differences at interior
    nodes, one-sided second-order stencils at the ends of each knot interval."""
    _check_resolution(curve, 2)
    m = curve.manifold
    X = curve.points
    V = np.zeros_like(X)
    for a, b in curve.segments():
        d = curve.segment_spacing(a, b)
        mid = slice(a + 1, b)
        V[mid] = (m.log(X[mid], X[a + 2:b + 1]) - m.log(X[mid], X[a:b - 1])) / (2 * d)
        V[a] = (4.0 * m.log(X[a], X[a + 1]) - m.log(X[a], X[a + 2])) / (2 * d)
        V[b] = -(4.0 * m.log(X[b], X[b - 1]) - m.log(X[b], X[b - 2])) / (2 * d)
    # interior knots belong to two segments; keep the average of both one-sided
    # values so the field is single-valued (the spline is C^1 there anyway)
    for k in curve.knot_indices[1:-1]:
        dl = curve.times[k] - curve.times[k - 1]
        dr = curve.times[k + 1] - curve.times[k]
        left = -(4.0 * m.log(X[k], X[k - 1]) - m.log(X[k], X[k - 2])) / (2 * dl)
        right = (4.0 * m.log(X[k], X[k + 1]) - m.log(X[k], X[k + 2])) / (2 * dr)
        V[k] = (left + right) / 2.0
    return VectorFieldAlongCurve(curve, V)


def covariant_derivative(curve: DiscreteCurve,
                         f: VectorFieldAlongCurve) -> VectorFieldAlongCurve:
    """Covariant derivative of ``f`` along the curve, via centered
    parallel-transported differences (one-sided at knot-interval ends)."""
    if f.curve is not curve and f.vectors.shape != curve.points.shape:
        raise ContractViolation("field is not defined on the given curve")
    _check_resolution(curve, 2)
    m = curve.manifold
    X = curve.points
    F = f.vectors
    out = np.zeros_like(F)
    for a, b in curve.segments():
        d = curve.segment_spacing(a, b)
        mid = slice(a + 1, b)
        fwd = m.transport(X[a + 2:b + 1], X[mid], F[a + 2:b + 1])
        bwd = m.transport(X[a:b - 1], X[mid], F[a:b - 1])
        out[mid] = (fwd - bwd) / (2 * d)
        f1 = m.transport(X[a + 1], X[a], F[a + 1])
        f2 = m.transport(X[a + 2], X[a], F[a + 2])
        out[a] = (-3.0 * F[a] + 4.0 * f1 - f2) / (2 * d)
        f1 = m.transport(X[b - 1], X[b], F[b - 1])
        f2 = m.transport(X[b - 2], X[b], F[b - 2])
        out[b] = (3.0 * F[b] - 4.0 * f1 + f2) / (2 * d)
    # re-project: nested stencils otherwise accumulate tangency roundoff
    return VectorFieldAlongCurve(curve, m.project(X, out))


def accel(curve: DiscreteCurve) -> VectorFieldAlongCurve:
    """Second covariant derivative of the curve, via direct second differences
    of logarithms (exactly zero on piecewise geodesics, unlike composing two
    first-derivative stencils through a knot-averaged velocity field)."""
    _check_resolution(curve, 3)
    m = curve.manifold
    X = curve.points
    out = np.zeros_like(X)
    for a, b in curve.segments():
        d = curve.segment_spacing(a, b)
        mid = slice(a + 1, b)
        out[mid] = (m.log(X[mid], X[a + 2:b + 1])
                    + m.log(X[mid], X[a:b - 1])) / d ** 2
        La = m.log(np.repeat(X[a][None], 3, axis=0), X[a + 1:a + 4])
        out[a] = (-5.0 * La[0] + 4.0 * La[1] - La[2]) / d ** 2
        Lb = m.log(np.repeat(X[b][None], 3, axis=0), X[b - 1:b - 4:-1])
        out[b] = (-5.0 * Lb[0] + 4.0 * Lb[1] - Lb[2]) / d ** 2
    # re-project: the 1/d^2 scaling amplifies tangency roundoff of the logs
    return VectorFieldAlongCurve(curve, m.project(X, out))


def _trapezoid_per_segment(curve: DiscreteCurve, values: np.ndarray) -> float:
    total = 0.0
    for a, b in curve.segments():
        total += float(np.trapezoid(values[a:b + 1], curve.times[a:b + 1]))
    return total


def cubic_energy(curve: DiscreteCurve) -> float:
    """Trapezoid quadrature of the squared covariant acceleration."""
    A = accel(curve)
    m = curve.manifold
    sq = m.metric(curve.points, A.vectors, A.vectors)
    return _trapezoid_per_segment(curve, sq)


def path_energy(curve: DiscreteCurve) -> float:
    """Trapezoid quadrature of the squared velocity."""
    V = velocity(curve)
    m = curve.manifold
    sq = m.metric(curve.points, V.vectors, V.vectors)
    return _trapezoid_per_segment(curve, sq)


def el_residual(curve: DiscreteCurve, margin: int = 5) -> VectorFieldAlongCurve:
    """Stationarity residual of the cubic energy: the fourth covariant
    derivative plus the curvature term ``Rm(D_t^2 c, c') c'``, evaluated in the
    interior of each knot interval.

    Nodes within ``margin`` sub-steps of a knot are set to zero: the composed
    one-sided stencils there are polluted by the third-derivative jumps the
    interpolant is allowed to have across knots.
    """
    _check_resolution(curve, 7)
    m = curve.manifold
    V = velocity(curve)
    D2 = covariant_derivative(curve, V)
    D3 = covariant_derivative(curve, D2)
    D4 = covariant_derivative(curve, D3)
    R = D4.vectors + m.curvature(curve.points, D2.vectors, V.vectors, V.vectors)
    for k in curve.knot_indices:
        lo = max(0, k - margin)
        hi = min(curve.n_nodes - 1, k + margin)
        R[lo:hi + 1] = 0.0
    return VectorFieldAlongCurve(curve, R)


def lp_error(a: DiscreteCurve, b: DiscreteCurve, p) -> float:
    """L^p norm (or grid maximum for ``p = inf``) of the pointwise geodesic
    distance between two curves on the same grid."""
    if a.manifold_id != b.manifold_id:
        raise ContractViolation("curves live on different manifolds")
    if a.times.shape != b.times.shape or np.max(np.abs(a.times - b.times)) > _BASE_TOL:
        raise ContractViolation("curves must share the same time grid")
    d = a.manifold.dist(a.points, b.points)
    if np.isinf(p):
        return float(d.max())
    integral = _trapezoid_per_segment(a, d ** float(p))
    return float(integral ** (1.0 / float(p)))


# -- serialization ----------------------------------------------------------

def curve_to_csv(curve: DiscreteCurve, path, field: VectorFieldAlongCurve = None):
    """Write a curve (and optionally a field along it) as CSV with columns
    ``t, x0..xd[, v0..vd]``."""
    d = curve.manifold.ambient_dim
    header = ["t"] + [f"x{i}" for i in range(d)]
    if field is not None:
        header += [f"v{i}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(curve.n_nodes):
            row = [repr(float(curve.times[k]))]
            row += [repr(float(x)) for x in curve.points[k]]
            if field is not None:
                row += [repr(float(v)) for v in field.vectors[k]]
            w.writerow(row)


def curve_from_csv(path, manifold_id, knot_indices):
    """Read a curve previously written by :func:`curve_to_csv`."""
    m = from_id(manifold_id)
    times, pts = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            times.append(float(row[0]))
            pts.append([float(x) for x in row[1:1 + m.ambient_dim]])
    return DiscreteCurve(manifold_id, np.array(times), np.array(pts),
                         np.asarray(knot_indices))
