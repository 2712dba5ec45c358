import math

import mpmath as mp
import numpy as np
import pytest
from numpy.polynomial import Polynomial

from modstein.errors import HypothesisError
from modstein.penalize import constant_one, phi_quartic, quartic_signed_polynomial
from modstein.phi4 import Phi4Params, make_dist
from modstein.probes import (GaussianPolynomial, Probe, cauchy_bump, characterization_probes,
                             gaussian_bump, odd_bump, operator_norm_probes, sine_bump)
from modstein.stein import (VARIANTS, SteinCoefficients, apply_operator, centred,
                            characterization_residual, d3_bound_proof, d3_bound_statement,
                            indicator_solution, indicator_solution_derivative,
                            integral_representation_check, operator_norm_report, pseudo_inverse,
                            representation_tables, signed_stein_residual, solve)

from conftest import GAMMAS, quartic

THIRD = 1 / 3


def gaussian_law(g):
    return make_dist(Phi4Params.gaussian(g))


def coeffs_of(dist):
    return SteinCoefficients.from_params(dist.params)


class TestOperator:
    def test_gaussian_reduction(self):
        c = SteinCoefficients.from_penalty(constant_one(), 2.0)
        x = np.linspace(-5, 5, 11)
        h, dh = np.sin, np.cos
        np.testing.assert_allclose(apply_operator(c, h, dh, x), dh(x) - x * h(x) / 4, atol=1e-15)

    def test_quartic_rho(self):
        c = SteinCoefficients.from_penalty(phi_quartic(THIRD), 2.0)
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(c.rho(x), x / 4 + THIRD * x ** 3 / 256, rtol=1e-15)

    def test_finite_difference_coefficients(self):
        # a weight without closed-form derivatives goes through differences
        q = phi_quartic(0.5)
        generic = type(q)("generic", q.eval, q.log_eval, q.dlog_eval, sup_norm=1.0)
        c = SteinCoefficients.from_penalty(generic, 1.5)
        exact = SteinCoefficients.from_params(Phi4Params(1.5, 0.5))
        x = np.linspace(-4, 4, 17)
        np.testing.assert_allclose(c.rho(x), exact.rho(x), rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(c.rho_prime(x), exact.rho_prime(x), rtol=1e-8)

    def test_mismatched_law_rejected(self):
        with pytest.raises(HypothesisError):
            pseudo_inverse(coeffs_of(quartic(1.0, 1.0)), quartic(1.0, THIRD), np.cos, 0.0)


class TestPseudoInverse:
    def test_constant(self, h_1_third):
        g = pseudo_inverse(coeffs_of(h_1_third), h_1_third, lambda x: np.full_like(x, 3.0),
                           np.linspace(-4, 4, 9))
        assert np.max(np.abs(g)) < 1e-14

    def test_gaussian_identity(self):
        d = gaussian_law(1.0)
        x = np.linspace(-6, 6, 25)
        g = pseudo_inverse(coeffs_of(d), d, lambda t: t, x, degree=1)
        np.testing.assert_allclose(g, -1.0, atol=1e-12)

    def test_finite_difference_residual(self, h_1_third):
        d = h_1_third
        probe = gaussian_bump()
        x = np.linspace(-5, 5, 101)
        step = 1e-4 * (1 + np.abs(x))
        g = lambda t: pseudo_inverse(coeffs_of(d), d, probe, t)
        dg = (g(x - 2 * step) - 8 * g(x - step) + 8 * g(x + step) - g(x + 2 * step)) / (12 * step)
        resid = dg - d.params.rho(x) * g(x) - centred(d, probe).value(x)
        assert np.max(np.abs(resid)) <= 1e-7

    @pytest.mark.parametrize("probe", [gaussian_bump(), cauchy_bump(), sine_bump()])
    def test_solution_satisfies_equation(self, h_2_third, probe):
        sol = solve(h_2_third, probe, grid=np.linspace(-12, 12, 401))
        lhs = sol.d1 - h_2_third.params.rho(sol.grid) * sol.g
        assert np.max(np.abs(lhs - sol.rhs)) <= 1e-10

    def test_even_probe_gives_odd_solution(self, h_2_third):
        x = np.linspace(-10, 10, 201)
        sol = solve(h_2_third, gaussian_bump(), grid=x)
        np.testing.assert_allclose(sol.g, -sol.g[::-1], atol=1e-12)
        np.testing.assert_allclose(sol.d1, sol.d1[::-1], atol=1e-12)


class TestIndicator:
    def test_far_left(self, h_1_third):
        d = h_1_third
        x = np.linspace(-30, 30, 601)
        g = indicator_solution(coeffs_of(d), d, -20.0, x)
        right = x > -20.0
        assert np.max(g[right]) <= 1e-6
        # left of the jump the indicator is 1 and the solution decays like 1/kappa'
        assert np.all(g[~right] <= 2 / d.params.rho(np.abs(x[~right])))

    def test_derivative_bound(self, h_1_third):
        x = np.linspace(-12, 12, 24001)
        x = x[x != 0.0]
        dh = indicator_solution_derivative(coeffs_of(h_1_third), h_1_third, 0.0, x)
        assert np.max(np.abs(dh)) <= 4

    @pytest.mark.parametrize("x0", [-1.2, 0.0, 0.8])
    def test_covariance_form(self, h_1_third, x0):
        mp.mp.dps = 30
        d = h_1_third
        p = d.params
        k = lambda t: mp.exp(-p.a * t ** 2 / 2 - p.b * t ** 4 / 4)
        z = mp.quad(k, [-mp.inf, 0, mp.inf])
        lower = lambda t: mp.quad(k, [-mp.inf, t]) / z
        upper = lambda t: mp.quad(k, [t, mp.inf]) / z
        for y in (-4.0, -1.5, 0.3, 2.0, 4.5):
            cov = lower(min(y, x0)) * upper(max(y, x0))
            ref = float(cov / (k(y) / z))
            got = float(indicator_solution(coeffs_of(d), d, x0, np.array(y)))
            assert got == pytest.approx(ref, rel=1e-8)


class TestCharacterisation:
    @pytest.mark.parametrize("g", GAMMAS)
    @pytest.mark.parametrize("c", [0.1, THIRD, 1.0, 3.0])
    def test_quartic_law(self, g, c):
        d = quartic(g, c)
        assert max(characterization_residual(coeffs_of(d), d, characterization_probes())) <= 1e-9

    def test_gaussian_identity(self):
        d = gaussian_law(2.0)
        assert max(characterization_residual(coeffs_of(d), d, characterization_probes())) <= 1e-9

    def test_distinguishes_laws(self):
        g = 1.0
        c = SteinCoefficients.from_params(Phi4Params(g, THIRD))
        probe = GaussianPolynomial(Polynomial([0.0, 1.0]), g).to_probe("x exp(-x^2/2)")
        res = characterization_residual(c, gaussian_law(g), characterization_probes() + [probe])
        assert max(res) > 1e-3

    def test_mean_of_rho_vanishes(self, h_2_third):
        assert abs(h_2_third.expect(h_2_third.params.rho, 3, 1.0)) < 1e-14


class TestRepresentations:
    @pytest.fixture(scope="class")
    @staticmethod
    def tables(h_2_third):
        return representation_tables(h_2_third)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_constant(self, h_2_third, tables, variant):
        one = Probe("1", lambda t: np.ones_like(t), lambda t: np.zeros_like(t),
                    lambda t: np.zeros_like(t))
        assert integral_representation_check(h_2_third, one, variant, tables=tables) < 1e-12

    @pytest.mark.parametrize("variant", VARIANTS)
    @pytest.mark.parametrize("probe", [gaussian_bump(), cauchy_bump(), odd_bump(), sine_bump()],
                             ids=lambda p: p.name)
    def test_variants(self, h_2_third, tables, variant, probe):
        tol = 1e-6 if variant == "linv_hhat" else 1e-7
        assert integral_representation_check(h_2_third, probe, variant, tables=tables) <= tol

    def test_unbounded_probe_rejected(self, h_2_third):
        from modstein.probes import cubic
        with pytest.raises(HypothesisError):
            integral_representation_check(h_2_third, cubic(), "h_gamma")


class TestOperatorNorms:
    def test_gaussian_constants(self):
        reps = {r.name: r for r in operator_norm_report(gaussian_law(1.0), [gaussian_bump()],
                                                        "bounded")}
        assert all(r.passed for r in reps.values())
        # sup|g| against sqrt(pi/2) sup|h_c| and sup|g'| against 2 sup|h_c|
        assert reps["bounded_g"].extra["measured"]["exp(-x^2/2)"] < math.sqrt(math.pi / 2)
        assert reps["bounded_dg"].scaled_worst_margin <= 1

    def test_quartic(self, h_2_third):
        probes = operator_norm_probes()
        reps = operator_norm_report(h_2_third, probes)
        assert len(reps) == 6
        for r in reps:
            assert r.passed, (r.name, r.extra)
            assert max(r.extra["ratios"].values()) <= 1

    def test_zero_probe(self, h_2_third):
        zero = Probe("0", lambda t: np.zeros_like(t), lambda t: np.zeros_like(t),
                     lambda t: np.zeros_like(t))
        for r in operator_norm_report(h_2_third, [zero]):
            assert r.extra["measured"]["0"] == 0.0

    def test_hypothesis(self):
        with pytest.raises(HypothesisError):
            operator_norm_report(quartic(1.0, 1.0))

    def test_d3_constants(self):
        assert d3_bound_proof(2.0, 1.0) == 3 + 2 + 12 / 16
        assert d3_bound_statement(2.0, 1.0) == 3 + 2 + 35 / 16


class TestSignedOperator:
    def test_gaussian(self):
        g = GaussianPolynomial(Polynomial([0.0, 1.0]), 2.0)
        assert signed_stein_residual(Polynomial([0.0]), 2.0, g) <= 1e-8

    @pytest.mark.parametrize("g", [None, GaussianPolynomial(Polynomial([1.0]))])
    def test_quartic(self, g):
        assert signed_stein_residual(quartic_signed_polynomial(1.0, THIRD), 1.0, g) <= 1e-5

    def test_zero(self):
        g = GaussianPolynomial(Polynomial([0.0]))
        assert signed_stein_residual(quartic_signed_polynomial(1.0, THIRD), 1.0, g) == 0.0
