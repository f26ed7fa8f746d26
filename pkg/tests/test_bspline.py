"""Tests for the Euclidean B-spline reference solver."""

import numpy as np
import pytest

from geospline import bspline as bs
from geospline.errors import DomainError


class TestBasis:
    def test_values(self):
        assert bs.bspline_basis(0.0) == pytest.approx(2.0 / 3.0, abs=1e-15)
        assert bs.bspline_basis(1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert bs.bspline_basis(-1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert bs.bspline_basis(2.5) == 0.0
        assert bs.bspline_basis(-3.0) == 0.0

    def test_partition_of_unity(self):
        t = np.linspace(-0.5, 0.5, 101)
        total = sum(bs.bspline_basis(t - i) for i in range(-3, 4))
        assert np.max(np.abs(total - 1.0)) <= 1e-14

    def test_continuity_of_second_derivative(self):
        eps = 1e-7
        for joint in (1.0, 2.0):
            left = bs.bspline_basis_d2(joint - eps)
            right = bs.bspline_basis_d2(joint + eps)
            assert abs(left - right) <= 1e-5


class TestSolver:
    def test_cubic_reproduction(self):
        N = 4
        t = np.linspace(0, 1, N + 1)
        sp = bs.euclidean_cubic_spline(t[:, None] ** 3, [0.0], [3.0], 1.0 / N)
        tf = np.linspace(0, 1, 57)
        assert np.max(np.abs(bs.evaluate(sp, tf)[:, 0] - tf ** 3)) <= 1e-12

    def test_constant_data(self):
        N = 5
        y = np.full((N + 1, 2), 3.25)
        sp = bs.euclidean_cubic_spline(y, [0.0, 0.0], [0.0, 0.0], 1.0 / N)
        tf = np.linspace(0, 1, 33)
        assert np.max(np.abs(bs.evaluate(sp, tf) - 3.25)) <= 1e-13

    def test_interpolates_knots(self):
        N = 8
        t = np.linspace(0, 1, N + 1)
        y = np.stack([np.sin(2 * np.pi * t), np.cos(3 * np.pi * t)], axis=-1)
        v0 = np.array([2 * np.pi, 0.0])
        v1 = np.array([2 * np.pi, 0.0])
        sp = bs.euclidean_cubic_spline(y, v0, v1, 1.0 / N)
        assert np.max(np.abs(bs.evaluate(sp, t) - y)) <= 1e-12

    def test_boundary_derivative(self):
        N = 4
        t = np.linspace(0, 1, N + 1)
        sp = bs.euclidean_cubic_spline(t[:, None] ** 3 - t[:, None],
                                       [-1.0], [2.0], 1.0 / N)
        eps = 1e-6
        fd = float(np.squeeze(bs.evaluate(sp, eps) - bs.evaluate(sp, 0.0))) / eps
        assert abs(fd + 1.0) <= 1e-5

    def test_all_ones_control(self):
        sp = bs.BSplineCoefficients(np.ones((7, 1)), 0.25)
        tf = np.linspace(0, 1, 41)
        assert np.max(np.abs(bs.evaluate(sp, tf) - 1.0)) <= 1e-14

    def test_domain_guard(self):
        sp = bs.BSplineCoefficients(np.ones((7, 1)), 0.25)
        with pytest.raises(DomainError):
            bs.evaluate(sp, 1.5)


class TestConvergence:
    def test_quartic_rate(self):
        errs = []
        for N in (4, 8, 16, 32, 64):
            h = 1.0 / N
            t = np.linspace(0, 1, N + 1)
            y = np.sin(2 * np.pi * t)[:, None]
            sp = bs.euclidean_cubic_spline(y, [2 * np.pi], [2 * np.pi], h)
            tf = np.linspace(0, 1, 40 * N + 1)
            errs.append(np.max(np.abs(bs.evaluate(sp, tf)[:, 0]
                                      - np.sin(2 * np.pi * tf))))
        hs = 1.0 / np.array([4, 8, 16, 32, 64])
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 3.8 <= slope <= 4.2
        # asymptotic halvings approach 16; the first step is pre-asymptotic
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        assert all(13.0 <= r <= 19.0 for r in ratios[1:]), ratios


class TestInverseDecay:
    def test_row_decay(self):
        # the interpolation rows of the (rescaled) inverse decay at least as
        # fast as 3^{-|k-j|}
        for N in (4, 16, 64):
            n = N + 3
            A = np.zeros((n, n))
            idx = np.arange(n)
            A[idx, idx] = 4.0 / 6.0
            A[idx[1:], idx[:-1]] = 1.0 / 6.0
            A[idx[:-1], idx[1:]] = 1.0 / 6.0
            A[0, 0] = A[-1, -1] = 1.0 / 12.0
            A[0, 1] = A[-1, -2] = 1.0 / 6.0
            inv = np.linalg.inv(A)
            jk = np.abs(idx[:, None] - idx[None, :]).astype(float)
            sub = np.abs(inv)[1:-1, 1:-1]
            bound = 6.0 * 3.0 ** (-jk[1:-1, 1:-1]) + 1e-12
            assert np.all(sub <= bound)


class TestGalerkin:
    @staticmethod
    def _spline_for(gamma, vel, N):
        t = np.linspace(0, 1, N + 1)
        y = np.atleast_2d(np.array([gamma(s) for s in t]))
        return bs.euclidean_cubic_spline(y, vel(0.0), vel(1.0), 1.0 / N)

    def test_zero_test_field(self):
        sp = self._spline_for(lambda s: [np.sin(2 * np.pi * s)],
                              lambda s: [2 * np.pi * np.cos(2 * np.pi * s)], 8)
        gd2 = lambda s: [-(2 * np.pi) ** 2 * np.sin(2 * np.pi * s)]
        assert bs.galerkin_check(sp, gd2, lambda s: [0.0]) == 0.0

    def test_cubic_target_is_exact(self):
        # target already a cubic -> spline reproduces it -> integrand vanishes
        sp = self._spline_for(lambda s: [s ** 3 - s], lambda s: [3 * s ** 2 - 1], 6)
        gd2 = lambda s: [6 * s]
        h = 1.0 / 6

        def hat(s):
            return [max(0.0, 1.0 - abs(s / h - 2))]

        assert abs(bs.galerkin_check(sp, gd2, hat)) <= 1e-12

    def test_random_hats(self):
        N = 8
        h = 1.0 / N
        sp = self._spline_for(lambda s: [np.sin(2 * np.pi * s)],
                              lambda s: [2 * np.pi * np.cos(2 * np.pi * s)], N)
        gd2 = lambda s: [-(2 * np.pi) ** 2 * np.sin(2 * np.pi * s)]
        rng = np.random.default_rng(7)
        for _ in range(50):
            j = int(rng.integers(0, N + 1))
            c = float(rng.standard_normal())

            def hat(s, j=j, c=c):
                return [c * max(0.0, 1.0 - abs(s / h - j))]

            assert abs(bs.galerkin_check(sp, gd2, hat)) <= 1e-8
