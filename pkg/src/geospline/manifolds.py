"""Closed-form manifold backends: Euclidean space, the unit sphere, and the
hyperbolic plane in the hyperboloid model.

Each backend exposes exponential/logarithm maps, geodesic distance, parallel
transport along geodesics, the curvature tensor, and tangent-space projection.
All array-level operations broadcast over a leading batch axis, so curves of
points can be processed without Python loops.

Sign convention for the curvature tensor: on the unit sphere
``Rm(x, y)z = <y, z> x - <x, z> y`` (sectional curvature +1); the hyperboloid
carries the negative of the analogous expression in the Minkowski form
(sectional curvature -1); Euclidean space is flat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, DomainError

_CONSTRAINT_TOL = 1e-12
# Angles below this switch series expansions on (avoids 0/0 in theta/sin(theta)).
_SMALL_ANGLE = 1e-8
# Sphere logarithms are rejected this close to the antipode.
_CUT_LOCUS_MARGIN = 1e-6


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class Manifold:
    """Array-level geometric operations for one backend.

    Points and tangent vectors are plain ndarrays of shape ``(..., ambient_dim)``.
    Subclasses implement the closed forms; this base class provides shared
    conveniences (random sampling, norms, identifiers).
    """

    manifold_id: str
    ambient_dim: int
    dim: int

    # -- metric ------------------------------------------------------------

    def metric(self, p, v, w):
        """Riemannian inner product of tangent vectors ``v``, ``w`` at ``p``."""
        raise NotImplementedError

    def norm(self, p, v):
        return np.sqrt(np.maximum(self.metric(p, v, v), 0.0))

    # -- geodesic calculus -------------------------------------------------

    def exp(self, p, v):
        raise NotImplementedError

    def log(self, p, q):
        raise NotImplementedError

    def dist(self, p, q):
        raise NotImplementedError

    def transport(self, p, q, v):
        """Parallel transport of ``v`` from ``p`` to ``q`` along the geodesic."""
        raise NotImplementedError

    def curvature(self, p, x, y, z):
        """Curvature tensor ``Rm(x, y)z`` at ``p``."""
        raise NotImplementedError

    def project(self, p, a):
        """Metric-orthogonal projection of an ambient vector onto the tangent
        space at ``p``."""
        raise NotImplementedError

    def constraint_violation(self, p):
        """Distance of ``p`` from the embedded constraint set (0 for Euclidean)."""
        return np.zeros(np.shape(p)[:-1])

    def tangency_violation(self, p, v):
        return np.zeros(np.shape(p)[:-1])

    # -- sampling (for property tests and randomized suites) ---------------

    def random_point(self, rng, size=()):
        raise NotImplementedError

    def random_tangent(self, rng, p):
        a = rng.standard_normal(np.shape(p))
        return self.project(p, a)

    # -- frames ------------------------------------------------------------

    def tangent_frame(self, p):
        """A metric-orthonormal basis of the tangent space at a single point
        ``p``; returned with shape ``(dim, ambient_dim)``."""
        raise NotImplementedError

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"<{type(self).__name__} {self.manifold_id}>"


class Euclidean(Manifold):
    """Flat space R^n with the standard inner product."""

    def __init__(self, dim):
        if dim < 1:
            raise ContractViolation(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.ambient_dim = dim
        self.manifold_id = f"euclidean:{dim}"

    def metric(self, p, v, w):
        return _dot(v, w)

    def exp(self, p, v):
        return p + v

    def log(self, p, q):
        return q - p

    def dist(self, p, q):
        return np.linalg.norm(q - p, axis=-1)

    def transport(self, p, q, v):
        return np.broadcast_to(v, np.broadcast_shapes(np.shape(q), np.shape(v))).copy()

    def curvature(self, p, x, y, z):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z)))

    def project(self, p, a):
        return np.asarray(a, dtype=float).copy()

    def random_point(self, rng, size=()):
        shape = (*size, self.dim) if isinstance(size, tuple) else (size, self.dim)
        return rng.standard_normal(shape)

    def tangent_frame(self, p):
        return np.eye(self.dim)


class Sphere(Manifold):
    """Unit sphere S^n embedded in R^{n+1} with the induced metric."""

    def __init__(self, dim):
        if dim < 1:
            raise ContractViolation(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.ambient_dim = dim + 1
        self.manifold_id = f"sphere:{dim}"

    def metric(self, p, v, w):
        return _dot(v, w)

    def constraint_violation(self, p):
        return np.abs(np.linalg.norm(p, axis=-1) - 1.0)

    def tangency_violation(self, p, v):
        return np.abs(_dot(p, v))

    def exp(self, p, v):
        th = np.linalg.norm(v, axis=-1, keepdims=True)
        if np.any(th >= np.pi):
            raise DomainError("exponential of a vector of norm >= pi is ambiguous "
                              "on the sphere (antipodal point)")
        safe = np.where(th > 0, th, 1.0)
        out = np.cos(th) * p + np.sin(th) * (v / safe)
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def _angle(self, p, q):
        u = np.clip(_dot(p, q), -1.0, 1.0)
        return np.arccos(u), u

    def log(self, p, q):
        th, u = self._angle(p, q)
        if np.any(th > np.pi - _CUT_LOCUS_MARGIN):
            raise DomainError("logarithm undefined: points at or beyond the cut locus")
        th_k = th[..., None]
        g = np.where(th_k < _SMALL_ANGLE, 1.0 + th_k * th_k / 6.0,
                     th_k / np.where(th_k < _SMALL_ANGLE, 1.0, np.sin(th_k)))
        return g * (q - u[..., None] * p)

    def dist(self, p, q):
        # chord-based angle is exact at 0 and accurate for small separations,
        # where arccos of an inner product loses half the digits
        chord = np.linalg.norm(np.asarray(q, dtype=float) - p, axis=-1)
        near = chord <= np.sqrt(2.0)
        th, _ = self._angle(p, q)
        return np.where(near, 2.0 * np.arcsin(np.minimum(chord, 2.0) / 2.0), th)

    def transport(self, p, q, v):
        L = self.log(p, q)
        th = np.linalg.norm(L, axis=-1, keepdims=True)
        e = L / np.where(th > 0, th, 1.0)
        c = _dot(v, e)[..., None]
        return v + c * ((np.cos(th) - 1.0) * e - np.sin(th) * p)

    def curvature(self, p, x, y, z):
        return _dot(y, z)[..., None] * x - _dot(x, z)[..., None] * y

    def project(self, p, a):
        return a - _dot(a, p)[..., None] * p

    def random_point(self, rng, size=()):
        shape = (*size, self.ambient_dim) if isinstance(size, tuple) else (size, self.ambient_dim)
        a = rng.standard_normal(shape)
        return a / np.linalg.norm(a, axis=-1, keepdims=True)

    def tangent_frame(self, p):
        p = np.asarray(p, dtype=float)
        basis = []
        k = int(np.argmin(np.abs(p)))
        seed = np.eye(self.ambient_dim)[[k] + [i for i in range(self.ambient_dim) if i != k]]
        for a in seed:
            w = self.project(p, a)
            for b in basis:
                w = w - np.dot(w, b) * b
            n = np.linalg.norm(w)
            if n > 1e-8:
                basis.append(w / n)
            if len(basis) == self.dim:
                break
        return np.array(basis)


class Hyperboloid(Manifold):
    """Hyperbolic plane H^2 as the upper hyperboloid sheet in Minkowski
    3-space with bilinear form of signature ``(-, +, +)``."""

    def __init__(self):
        self.dim = 2
        self.ambient_dim = 3
        self.manifold_id = "hyperbolic:2"
        self._J = np.array([-1.0, 1.0, 1.0])

    def minkowski(self, a, b):
        return _dot(a * self._J, b)

    def metric(self, p, v, w):
        return self.minkowski(v, w)

    def constraint_violation(self, p):
        return np.abs(self.minkowski(p, p) + 1.0)

    def tangency_violation(self, p, v):
        return np.abs(self.minkowski(p, v))

    def _renormalize(self, p):
        # rescale onto <x, x>_M = -1 with x0 > 0
        s = np.sqrt(np.maximum(-self.minkowski(p, p), 1e-300))[..., None]
        return p / s

    def exp(self, p, v):
        th = np.sqrt(np.maximum(self.minkowski(v, v), 0.0))[..., None]
        safe = np.where(th > 0, th, 1.0)
        out = np.cosh(th) * p + np.sinh(th) * (v / safe)
        return self._renormalize(out)

    def _cosh_angle(self, p, q):
        return np.maximum(-self.minkowski(p, q), 1.0)

    def log(self, p, q):
        u = self._cosh_angle(p, q)
        th = np.arccosh(u)[..., None]
        g = np.where(th < _SMALL_ANGLE, 1.0 - th * th / 6.0,
                     th / np.where(th < _SMALL_ANGLE, 1.0, np.sinh(th)))
        return g * (q - u[..., None] * p)

    def dist(self, p, q):
        # exact chord identity: cosh(theta) = 1 + |q - p|_M^2 / 2, so
        # theta = 2 asinh(|q - p|_M / 2); accurate down to theta = 0
        d = np.asarray(q, dtype=float) - p
        s = np.sqrt(np.maximum(self.minkowski(d, d), 0.0))
        return 2.0 * np.arcsinh(s / 2.0)

    def transport(self, p, q, v):
        L = self.log(p, q)
        th = np.sqrt(np.maximum(self.minkowski(L, L), 0.0))[..., None]
        e = L / np.where(th > 0, th, 1.0)
        c = self.minkowski(v, e)[..., None]
        return v + c * ((np.cosh(th) - 1.0) * e + np.sinh(th) * p)

    def curvature(self, p, x, y, z):
        return -(self.minkowski(y, z)[..., None] * x
                 - self.minkowski(x, z)[..., None] * y)

    def project(self, p, a):
        return a + self.minkowski(a, p)[..., None] * p

    def random_point(self, rng, size=()):
        shape = (*size, 2) if isinstance(size, tuple) else (size, 2)
        y = 0.8 * rng.standard_normal(shape)
        x0 = np.sqrt(1.0 + np.sum(y * y, axis=-1, keepdims=True))
        return np.concatenate([x0, y], axis=-1)

    def tangent_frame(self, p):
        p = np.asarray(p, dtype=float)
        basis = []
        for a in np.eye(3)[1:]:
            w = self.project(p, a)
            for b in basis:
                w = w - self.minkowski(w, b) * b
            n = np.sqrt(max(self.minkowski(w, w), 0.0))
            if n > 1e-8:
                basis.append(w / n)
        return np.array(basis)


_BACKENDS = {}


def from_id(manifold_id: str) -> Manifold:
    """Look up a backend by its string id: ``"euclidean:<dim>"``,
    ``"sphere:<dim>"``, or ``"hyperbolic:2"``."""
    if manifold_id in _BACKENDS:
        return _BACKENDS[manifold_id]
    try:
        kind, _, dim_str = manifold_id.partition(":")
        dim = int(dim_str)
    except ValueError:
        raise ContractViolation(f"malformed manifold id: {manifold_id!r}") from None
    if kind == "euclidean":
        m = Euclidean(dim)
    elif kind == "sphere":
        m = Sphere(dim)
    elif kind == "hyperbolic":
        if dim != 2:
            raise ContractViolation("only hyperbolic:2 is supported")
        m = Hyperboloid()
    else:
        raise ContractViolation(f"unknown manifold id: {manifold_id!r}")
    _BACKENDS[manifold_id] = m
    return m


@dataclass(frozen=True)
class ManifoldPoint:
    """A point on a manifold, stored in ambient coordinates."""

    manifold_id: str
    coords: np.ndarray = field(repr=True)

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        m = from_id(self.manifold_id)
        if self.coords.shape != (m.ambient_dim,):
            raise ContractViolation(
                f"expected {m.ambient_dim} ambient coordinates, got {self.coords.shape}")
        if m.constraint_violation(self.coords) > _CONSTRAINT_TOL:
            raise ContractViolation(
                f"coordinates violate the {self.manifold_id} constraint")

    @property
    def manifold(self) -> Manifold:
        return from_id(self.manifold_id)


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector: base point plus an ambient vector in the tangent space."""

    base: ManifoldPoint
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=float))
        m = self.base.manifold
        if self.vec.shape != (m.ambient_dim,):
            raise ContractViolation("tangent vector has wrong ambient dimension")
        if m.tangency_violation(self.base.coords, self.vec) > _CONSTRAINT_TOL:
            raise ContractViolation("vector does not lie in the tangent space")

    @property
    def manifold(self) -> Manifold:
        return self.base.manifold


def _require_same_base(v: TangentVector, w: TangentVector):
    if v.base.manifold_id != w.base.manifold_id or \
            not np.array_equal(v.base.coords, w.base.coords):
        raise ContractViolation("tangent vectors must share the same base point")


def inner(v: TangentVector, w: TangentVector) -> float:
    """Riemannian inner product of two tangent vectors at the same point."""
    _require_same_base(v, w)
    return float(v.manifold.metric(v.base.coords, v.vec, w.vec))


def exp(p: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    """Geodesic endpoint reached from ``p`` with initial velocity ``v``."""
    if not np.array_equal(p.coords, v.base.coords):
        raise ContractViolation("velocity must be based at the given point")
    return ManifoldPoint(p.manifold_id, p.manifold.exp(p.coords, v.vec))


def log(p: ManifoldPoint, q: ManifoldPoint) -> TangentVector:
    """Initial velocity of the geodesic from ``p`` to ``q``."""
    if p.manifold_id != q.manifold_id:
        raise ContractViolation("points live on different manifolds")
    return TangentVector(p, p.manifold.log(p.coords, q.coords))


def dist(p: ManifoldPoint, q: ManifoldPoint) -> float:
    if p.manifold_id != q.manifold_id:
        raise ContractViolation("points live on different manifolds")
    return float(p.manifold.dist(p.coords, q.coords))


def transport_geodesic(p: ManifoldPoint, q: ManifoldPoint, v: TangentVector) -> TangentVector:
    """Parallel transport of ``v`` along the geodesic from ``p`` to ``q``."""
    if not np.array_equal(p.coords, v.base.coords):
        raise ContractViolation("vector must be based at the source point")
    if p.manifold_id != q.manifold_id:
        raise ContractViolation("points live on different manifolds")
    return TangentVector(q, p.manifold.transport(p.coords, q.coords, v.vec))


def curvature(p: ManifoldPoint, x: TangentVector, y: TangentVector,
              z: TangentVector) -> TangentVector:
    """Curvature tensor ``Rm(x, y)z`` at ``p``."""
    for t in (x, y, z):
        if not np.array_equal(t.base.coords, p.coords):
            raise ContractViolation("all vectors must be based at the given point")
    return TangentVector(p, p.manifold.curvature(p.coords, x.vec, y.vec, z.vec))


def project_tangent(p: ManifoldPoint, a) -> TangentVector:
    """Metric-orthogonal projection of an ambient vector onto the tangent space."""
    return TangentVector(p, p.manifold.project(p.coords, np.asarray(a, dtype=float)))
