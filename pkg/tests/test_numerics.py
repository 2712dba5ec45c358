import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modstein.errors import BracketError, CutoffError, HypothesisError
from modstein.numerics import (GaussianEnvelope, fourier_invert, gauss_hermite, hermite_He,
                               integrate_interval, integrate_line, invert_monotone)


def simpson(f, lo, hi, n=200_000):
    x = np.linspace(lo, hi, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4, 2
    return float(np.dot(w, f(x)) * (hi - lo) / (3 * n))


class TestIntegrateLine:
    def test_gaussian(self):
        res = integrate_line(lambda x: np.exp(-x * x / 2), rel_tol=1e-12,
                             envelope=GaussianEnvelope(0.0, 1.0, 1.0))
        assert abs(res.value - math.sqrt(2 * math.pi)) < 1e-11
        assert res.abs_error_estimate >= 0 and res.evaluations > 0

    def test_zero(self):
        assert integrate_line(lambda x: np.zeros_like(x)).value == 0.0

    def test_quartic_against_simpson(self):
        f = lambda x: np.exp(-x * x / 2 - x ** 4 / 4)
        res = integrate_line(f, rel_tol=1e-12, envelope=GaussianEnvelope(0.0, 1.0, 1.0))
        assert abs(res.value - simpson(f, -12, 12)) < 1e-10

    def test_mapped_line_without_envelope(self):
        res = integrate_line(lambda x: 1 / (1 + x * x), rel_tol=1e-10)
        assert abs(res.value - math.pi) < 1e-9

    @given(st.floats(0.3, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_even_integrand_is_twice_the_half_line(self, s):
        f = lambda x: np.exp(-x * x / (2 * s * s)) * (1 + x * x)
        full = integrate_line(f, envelope=GaussianEnvelope(0.0, 1.5 * s, 1.0 + 10 * s * s)).value
        half = integrate_interval(f, 0.0, 20 * s).value
        assert abs(full - 2 * half) <= 1e-12 * full


class TestGaussHermite:
    def test_one_node(self):
        x, w = gauss_hermite(1)
        assert x.tolist() == [0.0] and w.tolist() == [1.0]

    def test_two_nodes(self):
        x, w = gauss_hermite(2)
        np.testing.assert_allclose(x, [-1, 1], atol=1e-15)
        np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-15)

    def test_fourth_moment(self):
        x, w = gauss_hermite(20)
        assert abs(np.dot(w, x ** 4) - 3) < 1e-12

    @pytest.mark.parametrize("n", [5, 12, 40])
    def test_even_moments_are_double_factorials(self, n):
        x, w = gauss_hermite(n)
        assert abs(w.sum() - 1) < 1e-14
        for m in range(1, n):
            exact = math.prod(range(1, 2 * m, 2))
            assert abs(np.dot(w, x ** (2 * m)) - exact) <= 1e-12 * exact

    @pytest.mark.parametrize("n", [0, 513])
    def test_out_of_range(self, n):
        with pytest.raises(HypothesisError):
            gauss_hermite(n)


class TestHermite:
    def test_low_degrees(self):
        assert hermite_He(2, 0.0) == -1.0
        assert hermite_He(3, 2.0) == 2.0

    def test_orthogonality_norm(self):
        x, w = gauss_hermite(40)
        assert abs(np.dot(w, hermite_He(4, x) ** 2) - 24) < 1e-10
        assert abs(np.dot(w, hermite_He(4, x) * hermite_He(3, x))) < 1e-12

    @pytest.mark.parametrize("x", [-2.0, 0.0, 1.0, 3.0])
    def test_hand_expansions(self, x):
        assert hermite_He(4, x) == pytest.approx(x ** 4 - 6 * x ** 2 + 3, abs=1e-12)
        assert hermite_He(5, x) == pytest.approx(x ** 5 - 10 * x ** 3 + 15 * x, abs=1e-12)
        assert hermite_He(6, x) == pytest.approx(x ** 6 - 15 * x ** 4 + 45 * x ** 2 - 15, abs=1e-12)


class TestInvertMonotone:
    def test_exp(self):
        assert abs(invert_monotone(math.exp, 1.0, (-5, 5), tol=1e-12)) < 1e-12

    def test_outside_bracket(self):
        with pytest.raises(BracketError):
            invert_monotone(math.exp, 1e6, (-5, 5))

    @given(st.floats(-4.9, 4.9))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, x0):
        f = lambda t: t ** 3 + t
        x = invert_monotone(f, f(x0), (-5, 5), tol=1e-10)
        assert abs(f(x) - f(x0)) <= 1e-10


class TestFourierInvert:
    def test_standard_normal(self):
        xs = np.linspace(-5, 5, 101)
        g = fourier_invert(lambda xi: np.exp(-xi * xi / 2), xs, 12.0, 0.05)
        exact = np.exp(-xs * xs / 2) / math.sqrt(2 * math.pi)
        assert np.max(np.abs(g.ys - exact)) < 1e-8

    def test_scaled_normal(self):
        xs = np.linspace(-8, 8, 81)
        g = fourier_invert(lambda xi: np.exp(-4 * xi * xi / 2), xs, 6.0, 0.05)
        exact = np.exp(-xs * xs / 8) / math.sqrt(8 * math.pi)
        assert np.max(np.abs(g.ys - exact)) < 1e-8

    def test_quartic_mass(self):
        xs = np.linspace(-15, 15, 3001)
        cf = lambda xi: np.exp(-xi * xi / 2 - xi ** 4 / 12)
        g = fourier_invert(cf, xs, 10.0, 0.05)
        assert abs(np.trapezoid(g.ys, xs) - 1) < 1e-6

    def test_cutoff_too_small(self):
        with pytest.raises(CutoffError):
            fourier_invert(lambda xi: np.exp(-xi * xi / 2), np.zeros(3), 2.0, 0.1)
