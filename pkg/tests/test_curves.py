"""Tests for the discrete curve calculus: stencil accuracy, energies,
stationarity residuals, norms, and serialization."""

import numpy as np
import pytest

from geospline import curves as cv
from geospline.errors import ConfigurationError, ContractViolation
from geospline.manifolds import from_id


def great_circle(speed, n, knots=1):
    t = np.linspace(0.0, 1.0, n + 1)
    X = np.stack([np.cos(speed * t), np.sin(speed * t), np.zeros_like(t)], axis=-1)
    S = n // knots
    return cv.DiscreteCurve("sphere:2", t, X, S * np.arange(knots + 1))


def sphere_wobble_curve(n):
    t = np.linspace(0.0, 1.0, n + 1)
    a = 0.9 + 0.3 * np.sin(np.pi * t + 0.4)
    b = 0.5 + 1.2 * t + 0.3 * np.cos(np.pi * t)
    X = np.stack([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)], axis=-1)
    return cv.DiscreteCurve("sphere:2", t, X, np.array([0, n]))


def wobble_velocity(t):
    a = 0.9 + 0.3 * np.sin(np.pi * t + 0.4)
    b = 0.5 + 1.2 * t + 0.3 * np.cos(np.pi * t)
    ap = 0.3 * np.pi * np.cos(np.pi * t + 0.4)
    bp = 1.2 - 0.3 * np.pi * np.sin(np.pi * t)
    ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
    return np.stack([ap * ca * cb - bp * sa * sb,
                     ap * ca * sb + bp * sa * cb, -ap * sa], axis=-1)


class TestConstruction:
    def test_rejects_bad_grid(self):
        with pytest.raises(ContractViolation):
            cv.DiscreteCurve("euclidean:2", [0.0, 0.5, 0.4, 1.0],
                             np.zeros((4, 2)), [0, 3])
        with pytest.raises(ContractViolation):
            cv.DiscreteCurve("euclidean:2", [0.1, 0.5, 1.0],
                             np.zeros((3, 2)), [0, 2])

    def test_rejects_wrong_shape(self):
        with pytest.raises(ContractViolation):
            cv.DiscreteCurve("sphere:2", np.linspace(0, 1, 5),
                             np.zeros((5, 2)), [0, 4])

    def test_field_must_be_tangent(self):
        c = great_circle(1.0, 8)
        with pytest.raises(ContractViolation):
            cv.VectorFieldAlongCurve(c, c.points.copy())

    def test_resolution_guard(self):
        c = great_circle(1.0, 8, knots=8)
        with pytest.raises(ConfigurationError):
            cv.velocity(c)


class TestStencils:
    def test_velocity_on_great_circle(self):
        c = great_circle(2.0, 64)
        V = cv.velocity(c)
        assert np.max(np.abs(V.norms() - 2.0)) <= 1e-10

    def test_velocity_order(self):
        # halving the spacing should shrink the error about 4x
        errs = []
        for n in (64, 128, 256):
            c = sphere_wobble_curve(n)
            V = cv.velocity(c)
            exact = wobble_velocity(c.times)
            errs.append(np.max(np.linalg.norm(V.vectors - exact, axis=-1)))
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        assert all(3.5 <= r <= 4.5 for r in ratios), ratios

    def test_accel_order_euclidean(self):
        errs = []
        for n in (64, 128, 256):
            t = np.linspace(0, 1, n + 1)
            X = np.stack([t, np.sin(2 * np.pi * t)], axis=-1)
            c = cv.DiscreteCurve("euclidean:2", t, X, np.array([0, n]))
            A = cv.accel(c)
            exact = np.stack([0 * t, -(2 * np.pi) ** 2 * np.sin(2 * np.pi * t)], axis=-1)
            errs.append(np.max(np.abs(A.vectors - exact)))
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        assert all(3.5 <= r <= 5.0 for r in ratios), ratios

    def test_accel_zero_on_piecewise_geodesic(self):
        c = great_circle(2.0, 64, knots=4)
        assert cv.accel(c).max_norm() <= 1e-9

    def test_metric_compatibility(self):
        # d/dt <v, w> = <Dv, w> + <v, Dw> discretely to O(delta^2)
        errs = []
        for n in (64, 128):
            c = sphere_wobble_curve(n)
            m = c.manifold
            rng = np.random.default_rng(1)
            base = m.random_tangent(rng, c.points[0])
            # two smooth fields built by transported modulation
            V = cv.velocity(c)
            w1 = cv.VectorFieldAlongCurve(c, np.sin(3 * c.times)[:, None] * V.vectors)
            w2 = cv.VectorFieldAlongCurve(c, np.cos(2 * c.times)[:, None] * V.vectors)
            ip = m.metric(c.points, w1.vectors, w2.vectors)
            lhs = np.gradient(ip, c.times)[2:-2]
            d1 = cv.covariant_derivative(c, w1)
            d2 = cv.covariant_derivative(c, w2)
            rhs = (m.metric(c.points, d1.vectors, w2.vectors)
                   + m.metric(c.points, w1.vectors, d2.vectors))[2:-2]
            errs.append(np.max(np.abs(lhs - rhs)))
        assert errs[1] <= errs[0] / 2.5

    def test_transport_commutation(self):
        # transporting back to t=0 then differencing equals transporting D_t f
        c = sphere_wobble_curve(128)
        m = c.manifold
        V = cv.velocity(c)
        f = cv.VectorFieldAlongCurve(c, np.sin(2 * c.times)[:, None] * V.vectors)
        Df = cv.covariant_derivative(c, f)
        # pull both fields to the start node step by step
        pulled_f = f.vectors.copy()
        pulled_Df = Df.vectors.copy()
        for k in range(c.n_nodes - 1, 0, -1):
            pulled_f[k:] = m.transport(c.points[k], c.points[k - 1], pulled_f[k:])
            pulled_Df[k:] = m.transport(c.points[k], c.points[k - 1], pulled_Df[k:])
        d = c.times[1] - c.times[0]
        fd = np.gradient(pulled_f, d, axis=0)[2:-2]
        assert np.max(np.abs(fd - pulled_Df[2:-2])) <= 5e-3


class TestEnergies:
    def test_cubic_energy_of_parabola(self):
        t = np.linspace(0, 1, 65)
        X = np.stack([t ** 2, 0 * t], axis=-1)
        c = cv.DiscreteCurve("euclidean:2", t, X, np.array([0, 64]))
        assert cv.cubic_energy(c) == pytest.approx(4.0, abs=1e-3)

    def test_cubic_energy_of_geodesics(self):
        assert cv.cubic_energy(great_circle(1.0, 64)) <= 1e-20

    def test_path_energy_great_circle(self):
        c = great_circle(1.0, 64)
        assert cv.path_energy(c) == pytest.approx(1.0, abs=1e-4)

    def test_path_energy_segment(self):
        t = np.linspace(0, 1, 33)
        X = np.stack([3 * t, 4 * t], axis=-1)
        c = cv.DiscreteCurve("euclidean:2", t, X, np.array([0, 32]))
        assert cv.path_energy(c) == pytest.approx(25.0, abs=1e-10)

    def test_path_energy_constant_curve(self):
        t = np.linspace(0, 1, 33)
        X = np.broadcast_to([0.0, 0.0, 1.0], (33, 3)).copy()
        c = cv.DiscreteCurve("sphere:2", t, X, np.array([0, 32]))
        assert cv.path_energy(c) == 0.0


class TestStationarityResidual:
    def test_geodesic_residual_small(self):
        # delta = 1/64: comfortably above the roundoff amplification floor
        c = great_circle(2.0, 64)
        assert cv.el_residual(c).max_norm() <= 1e-8

    def test_euclidean_cubic_polynomial(self):
        n = 64
        t = np.linspace(0, 1, n + 1)
        X = np.stack([t ** 3 - 0.4 * t ** 2, 2 * t ** 3 + t], axis=-1)
        c = cv.DiscreteCurve("euclidean:2", t, X, np.array([0, n]))
        assert cv.el_residual(c).max_norm() <= 1e-7

    def test_needs_resolution(self):
        c = great_circle(1.0, 12, knots=2)
        with pytest.raises(ConfigurationError):
            cv.el_residual(c)


class TestLpError:
    def test_identical_curves(self):
        c = great_circle(1.0, 32)
        assert cv.lp_error(c, c, 2) == 0.0
        assert cv.lp_error(c, c, np.inf) == 0.0

    def test_constant_gap(self):
        t = np.linspace(0, 1, 33)
        a = cv.DiscreteCurve("euclidean:2", t, np.stack([t, 0 * t], axis=-1),
                             np.array([0, 32]))
        b = cv.DiscreteCurve("euclidean:2", t, np.stack([t, 0 * t + 0.25], axis=-1),
                             np.array([0, 32]))
        for p in (1, 2, np.inf):
            assert cv.lp_error(a, b, p) == pytest.approx(0.25, abs=1e-12)

    def test_rotated_sphere_curve(self):
        c = great_circle(1.0, 64)
        th = 0.1
        R = np.array([[1, 0, 0],
                      [0, np.cos(th), -np.sin(th)],
                      [0, np.sin(th), np.cos(th)]])
        b = cv.DiscreteCurve("sphere:2", c.times, c.points @ R.T, c.knot_indices)
        expected = np.arccos(np.clip(np.sum(c.points * b.points, axis=1), -1, 1)).max()
        assert cv.lp_error(c, b, np.inf) == pytest.approx(expected, abs=1e-14)

    def test_grid_mismatch(self):
        a = great_circle(1.0, 32)
        b = great_circle(1.0, 64)
        with pytest.raises(ContractViolation):
            cv.lp_error(a, b, 2)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        c = sphere_wobble_curve(16)
        path = tmp_path / "curve.csv"
        cv.curve_to_csv(c, path)
        back = cv.curve_from_csv(path, "sphere:2", c.knot_indices)
        assert np.array_equal(back.points, c.points)
        assert np.array_equal(back.times, c.times)

    def test_field_columns(self, tmp_path):
        c = sphere_wobble_curve(16)
        V = cv.velocity(c)
        path = tmp_path / "field.csv"
        cv.curve_to_csv(c, path, field=V)
        header = path.read_text().splitlines()[0].split(",")
        assert header == ["t", "x0", "x1", "x2", "v0", "v1", "v2"]
