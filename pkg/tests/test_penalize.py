import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from modstein.errors import HypothesisError
from modstein.numerics import gauss_hermite
from modstein.penalize import (characteristic_function, constant_one, edgeworth_density,
                               fourier_duality_gap, gaussian_expectation, hermite_coeffs,
                               laplace_duality_gap, make_penalized_law, mod_limit_check,
                               penalized_density, phi_quartic, phi_tilde,
                               quartic_signed_polynomial, shifted_weight_by_quadrature,
                               signed_density)

from conftest import quartic

THIRD = 1 / 3


class TestWeights:
    def test_quartic_values(self):
        phi = phi_quartic(THIRD)
        assert float(phi(0.0)) == 1.0
        assert complex(phi.complex_eval(1j)) == pytest.approx(math.exp(-1 / 12), abs=1e-15)
        assert phi.spot_check_rotation() <= 1e-12
        phi.check()

    def test_rademacher_strength(self):
        assert (3 - 1.0) / 6 == pytest.approx(THIRD)

    @pytest.mark.parametrize("c", [0.0, -1.0, 3.01])
    def test_rejects(self, c):
        with pytest.raises(HypothesisError):
            phi_quartic(c)

    def test_inconsistent_log_derivative_is_caught(self):
        phi = phi_quartic(1.0)
        bad = type(phi)("bad", phi.eval, phi.log_eval, lambda u: np.zeros_like(u))
        with pytest.raises(HypothesisError):
            bad.check()


class TestDensity:
    def test_constant_weight_is_gaussian(self):
        x = np.linspace(-6, 6, 13)
        exact = np.exp(-x * x / 8) / math.sqrt(8 * math.pi)
        np.testing.assert_allclose(penalized_density(constant_one(), 2.0, x), exact, rtol=1e-12)

    @pytest.mark.parametrize("g, c", [(1.0, THIRD), (2.0, 1.0), (5.0, 0.1)])
    def test_matches_quartic_law(self, g, c):
        x = np.linspace(-8 * g, 8 * g, 161)
        np.testing.assert_allclose(penalized_density(phi_quartic(c), g, x), quartic(g, c).pdf(x),
                                   rtol=1e-12, atol=1e-300)

    @given(st.floats(0, 30))
    @settings(max_examples=30, deadline=None)
    def test_even(self, x):
        law = make_penalized_law(phi_quartic(THIRD), 2.0)
        assert float(law.pdf(-x)) == pytest.approx(float(law.pdf(x)), rel=1e-14)


class TestLaplaceDuality:
    def test_constant_weight(self):
        assert laplace_duality_gap(constant_one(), 2.0, 1.3) < 1e-12

    def test_quartic(self):
        assert laplace_duality_gap(phi_quartic(THIRD), 2.0, 1.0) <= 1e-8

    def test_zero_shift(self):
        assert laplace_duality_gap(phi_quartic(THIRD), 2.0, 0.0) <= 1e-12

    @pytest.mark.parametrize("u", [-1.5, 0.4, 2.0])
    def test_shift_side_matches_gaussian_shift(self, u):
        phi, g = phi_quartic(THIRD), 2.0
        assert abs(shifted_weight_by_quadrature(phi, g, u) - gaussian_expectation(phi, g, u)) < 1e-10


class TestFourierDuality:
    def test_zero(self):
        assert fourier_duality_gap(phi_quartic(THIRD), 2.0, 0.0) <= 1e-12

    def test_quartic(self):
        assert fourier_duality_gap(phi_quartic(THIRD), 2.0, 1.0) <= 1e-7

    @pytest.mark.parametrize("theta", [-2.0, 0.5, 1.7])
    def test_constant_weight(self, theta):
        assert fourier_duality_gap(constant_one(), 1.5, theta) <= 1e-12

    def test_strong_quartic_at_unit_scale(self):
        # the naive Gauss-Hermite evaluation of the shifted side cancels badly here
        assert fourier_duality_gap(phi_quartic(1.0), 1.0, 2.0) <= 1e-7


class TestModLimit:
    def test_constant_weight(self):
        reps = mod_limit_check(constant_one(), [1.0, 3.0], np.linspace(-1, 1, 5))
        assert all(r.sup_error < 1e-12 for r in reps)

    def test_laplace_decreasing(self):
        reps = mod_limit_check(phi_quartic(THIRD), [1, 2, 3, 4, 5], np.linspace(-1, 1, 21))
        errs = [r.sup_error for r in reps]
        assert errs[-1] <= 0.02
        assert all(b <= 1.1 * a for a, b in zip(errs, errs[1:]))

    def test_fourier(self):
        rep = mod_limit_check(phi_quartic(THIRD), [5.0], np.linspace(-1, 1, 21), "fourier")[0]
        assert rep.sup_error <= 0.02


class TestHermite:
    def test_constant_weight(self):
        a = hermite_coeffs(constant_one(), 2.0, 10)
        assert a[0] == pytest.approx(1.0, abs=1e-14)
        assert np.max(np.abs(a[1:])) < 1e-12

    def test_odd_coefficients_vanish(self):
        a = hermite_coeffs(phi_quartic(THIRD), 2.0, 12)
        assert np.max(np.abs(a[1::2])) <= 1e-12

    def test_against_monte_carlo(self):
        g, K = 2.0, 8
        a = hermite_coeffs(phi_quartic(THIRD), g, K)
        rng = np.random.default_rng(5)
        x = rng.standard_normal(1_000_000)
        w = phi_quartic(THIRD)(x / g)
        prev, cur = np.zeros_like(x), np.ones_like(x)
        for k in range(K + 1):
            vals = cur * w / math.factorial(k)
            se = vals.std(ddof=1) / math.sqrt(x.size)
            assert abs(vals.mean() - a[k]) <= 4 * se + 1e-15
            prev, cur = cur, x * cur - k * prev

    def test_degree_cap(self):
        with pytest.raises(HypothesisError):
            hermite_coeffs(phi_quartic(THIRD), 2.0, 61)

    def test_parseval(self):
        phi, g = phi_quartic(THIRD), 2.0
        a = hermite_coeffs(phi, g, 40)
        x, w = gauss_hermite(200)
        total = float(np.dot(w, phi(x / g) ** 2))
        partial = np.cumsum(a ** 2 * np.array([math.factorial(k) for k in range(41)], float))
        assert np.all(partial <= total + 1e-8)
        assert total - partial[-1] < 1e-8


class TestEdgeworth:
    def test_zero_order_is_gaussian_kernel(self):
        y = np.linspace(-3, 3, 7)
        a = hermite_coeffs(constant_one(), 1.0, 0)
        np.testing.assert_allclose(edgeworth_density(a, 1.0, y, 0), np.exp(-y * y / 2), rtol=1e-14)

    def test_order_forty(self):
        g = 2.0
        law = make_penalized_law(phi_quartic(THIRD), g)
        a = hermite_coeffs(phi_quartic(THIRD), g, 40)
        y = np.linspace(-4, 4, 161)
        approx = edgeworth_density(a, g, y, 40) / law.c_gamma
        assert np.max(np.abs(approx - law.pdf(g * y))) <= 1e-6

    def test_low_order_truncation_goes_negative(self):
        a = hermite_coeffs(phi_quartic(THIRD), 1.0, 2)
        y = np.linspace(-8, 8, 1601)
        assert np.min(edgeworth_density(a, 1.0, y, 2)) < 0


class TestPhiTilde:
    def test_constant_weight(self):
        a = hermite_coeffs(constant_one(), 2.0, 10)
        np.testing.assert_allclose(phi_tilde(a, 2.0, np.linspace(-1, 1, 5), 10), 1.0, atol=1e-12)

    def test_at_zero(self):
        a = hermite_coeffs(phi_quartic(THIRD), 2.0, 40)
        assert phi_tilde(a, 2.0, 0.0, 40) == 1.0

    def test_characteristic_function(self):
        g = 2.0
        law = make_penalized_law(phi_quartic(THIRD), g)
        a = hermite_coeffs(phi_quartic(THIRD), g, 40)
        u = np.linspace(-1, 1, 41)
        approx = phi_tilde(a, g, u, 40) * np.exp(-g * g * u * u / 2)
        assert np.max(np.abs(characteristic_function(law, u) - approx)) <= 1e-6


class TestSignedMeasure:
    def test_zero_polynomial_is_gaussian(self):
        x = np.linspace(-10, 10, 81)
        dens = signed_density(Polynomial([0.0]), 2.0, x)
        exact = np.exp(-x * x / 8) / math.sqrt(8 * math.pi)
        assert np.max(np.abs(dens.ys - exact)) < 1e-10

    def test_quartic_mass(self):
        x = np.linspace(-15, 15, 3001)
        dens = signed_density(quartic_signed_polynomial(1.0, THIRD), 1.0, x)
        assert abs(np.trapezoid(dens.ys, x) - 1) <= 1e-6

    def test_distance_to_quartic_law_is_finite(self):
        x = np.linspace(-15, 15, 3001)
        dens = signed_density(quartic_signed_polynomial(1.0, THIRD), 1.0, x)
        l1 = np.trapezoid(np.abs(dens.ys - quartic(1.0, THIRD).pdf(x)), x)
        assert 0 < l1 < 2

    def test_rejects_growing_exponent(self):
        with pytest.raises(HypothesisError):
            signed_density(Polynomial([0, 0, 0, 0, 1.0]), 1.0, np.zeros(3))
