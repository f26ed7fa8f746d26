"""Piecewise Jacobi-type interpolation of vector fields along a curve.

Given tangent vectors at the knots of a discrete curve, the interpolant solves
``D_t^2 w + Rm(w, c') c' = 0`` on each knot interval with the knot values as
boundary data.  In a parallel-transported orthonormal frame the covariant
second derivative becomes a plain second derivative, so each interval reduces
to a banded linear system for the frame components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .curves import DiscreteCurve, VectorFieldAlongCurve, velocity
from .errors import ContractViolation, DomainError
from .manifolds import Euclidean


@dataclass
class KnotValues:
    """One tangent vector per knot of a host curve."""

    curve: DiscreteCurve
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        m = self.curve.manifold
        knots = self.curve.points[self.curve.knot_indices]
        if self.vectors.shape != knots.shape:
            raise ContractViolation("need one vector per knot point")
        worst = float(np.max(m.tangency_violation(knots, self.vectors), initial=0.0))
        if worst > 1e-9:
            raise ContractViolation(
                f"knot values not tangent to the curve (violation {worst:.2e})")


def _segment_frames(m, X):
    """Sequential parallel-transported orthonormal frames along one segment."""
    n = X.shape[0]
    if isinstance(m, Euclidean):
        return np.broadcast_to(np.eye(m.dim), (n, m.dim, m.dim)).copy()
    F = np.zeros((n, m.dim, m.ambient_dim))
    F[0] = m.tangent_frame(X[0])
    for k in range(1, n):
        V = m.transport(X[k - 1][None], X[k][None], F[k - 1])
        for i in range(m.dim):
            w = m.project(X[k], V[i])
            for j in range(i):
                w = w - m.metric(X[k], w, F[k, j]) * F[k, j]
            F[k, i] = w / m.norm(X[k], w)
    return F


def jacobi_interpolate(c: DiscreteCurve, kv: KnotValues) -> VectorFieldAlongCurve:
    """Solve the interpolation boundary value problem on every knot interval
    and return the field on the full fine grid."""
    m = c.manifold
    dim = m.dim
    V = velocity(c).vectors
    out = np.zeros_like(c.points)
    scale = float(np.max(np.abs(kv.vectors), initial=0.0))
    for seg, (a, b) in enumerate(c.segments()):
        X = c.points[a:b + 1]
        F = _segment_frames(m, X)
        n = b - a + 1
        d = c.segment_spacing(a, b)
        # curvature coupling matrix in the frame at each node:
        # R[k, i, j] = <Rm(f_j, v) v, f_i>
        Rm = m.curvature(X[:, None], F, V[a:b + 1][:, None], V[a:b + 1][:, None])
        Rmat = np.einsum("kid,kjd->kij", F * _metric_weight(m), Rm)
        # boundary components
        c0 = F[0] @ _metric_weight_vec(m, kv.vectors[seg])
        c1 = F[-1] @ _metric_weight_vec(m, kv.vectors[seg + 1])
        if n == 2:
            comps = np.stack([c0, c1])
        else:
            comps = np.empty((n, dim))
            comps[0], comps[-1] = c0, c1
            comps[1:-1] = _solve_bvp(Rmat[1:-1], c0, c1, d, dim, scale)
        out[a:b + 1] = np.einsum("kj,kjd->kd", comps, F)
    out[c.knot_indices] = kv.vectors  # exact at knots by construction
    return VectorFieldAlongCurve(c, out)


def _metric_weight(m):
    """Diagonal of the ambient bilinear form as a broadcastable factor."""
    return getattr(m, "_J", 1.0)


def _metric_weight_vec(m, v):
    return v * _metric_weight(m)


def _solve_bvp(Rmat, c0, c1, d, dim, scale):
    """Centered-difference discretization of ``c'' + R(t) c = 0`` with Dirichlet
    data, solved as one banded system in node-major ordering."""
    K = Rmat.shape[0]  # number of interior nodes
    nvar = K * dim
    ab = np.zeros((2 * dim + 1, nvar))
    rhs = np.zeros((K, dim))
    inv_d2 = 1.0 / d ** 2

    def put(r, col, val):
        ab[dim + r - col, col] += val

    for k in range(K):
        for i in range(dim):
            row = k * dim + i
            put(row, row, -2.0 * inv_d2)
            for j in range(dim):
                put(row, k * dim + j, Rmat[k, i, j])
            if k > 0:
                put(row, (k - 1) * dim + i, inv_d2)
            else:
                rhs[k, i] -= inv_d2 * c0[i]
            if k < K - 1:
                put(row, (k + 1) * dim + i, inv_d2)
            else:
                rhs[k, i] -= inv_d2 * c1[i]
    try:
        sol = solve_banded((dim, dim), ab, rhs.ravel())
    except np.linalg.LinAlgError as exc:  # pragma: no cover - exact singularity
        raise DomainError("interpolation boundary value problem is singular: "
                          "knot spacing too large for curvature and speed") from exc
    if not np.all(np.isfinite(sol)) or \
            (scale > 0 and np.max(np.abs(sol)) > 1e8 * scale):
        raise DomainError("interpolation boundary value problem is near-singular: "
                          "knot spacing too large for curvature and speed")
    return sol.reshape(K, dim)


def jacobi_residual(c: DiscreteCurve, f: VectorFieldAlongCurve) -> float:
    """Infinity-norm of ``D_t^2 f + Rm(f, c') c'`` over the interior nodes of
    each knot interval, using the same transported second-difference stencil
    as the interpolation solver."""
    m = c.manifold
    V = velocity(c).vectors
    F = f.vectors
    X = c.points
    worst = 0.0
    for a, b in c.segments():
        if b - a < 2:
            continue
        d = c.segment_spacing(a, b)
        mid = slice(a + 1, b)
        fwd = m.transport(X[a + 2:b + 1], X[mid], F[a + 2:b + 1])
        bwd = m.transport(X[a:b - 1], X[mid], F[a:b - 1])
        d2 = (fwd - 2.0 * F[mid] + bwd) / d ** 2
        res = d2 + m.curvature(X[mid], F[mid], V[mid], V[mid])
        worst = max(worst, float(m.norm(X[mid], res).max()))
    return worst
