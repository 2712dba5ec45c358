import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from modstein.errors import HypothesisError
from modstein.phi4 import Phi4Params, make_dist, moment, rejection_sample, sample

from conftest import CS, GAMMAS, quartic

# mpmath oracles at gamma = 1, C = 1/3 (30 digits)
Z_1_THIRD = 2.18624176525172192439990809966
TAIL1_1_THIRD = 0.113881924681266444059564889032
M2_1_THIRD = 0.644929374476916477811470843946
M4_1_THIRD = 1.06521187656925056656558746816
EABS_1_THIRD = 0.65600056560653331869856937956


class TestParams:
    @pytest.mark.parametrize("g, c", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, 3.5)])
    def test_rejects(self, g, c):
        with pytest.raises(HypothesisError):
            Phi4Params(g, c)

    def test_derived_coefficients(self):
        p = Phi4Params(2.0, 0.5)
        assert p.a == 0.25 and p.b == 0.5 / 256


class TestNormalisation:
    def test_gaussian_limit(self):
        d = make_dist(Phi4Params(2.0, 1e-12))
        assert abs(d.z_gamma - 2 * math.sqrt(2 * math.pi)) < 1e-8

    def test_bracket(self, h_1_third):
        s = math.sqrt(2 * math.pi)
        assert 0.75 * s <= h_1_third.z_gamma <= s

    def test_against_oracle(self, h_1_third):
        assert abs(h_1_third.z_gamma - Z_1_THIRD) < 1e-10

    @pytest.mark.parametrize("g", GAMMAS)
    @pytest.mark.parametrize("c", CS)
    def test_lattice(self, g, c):
        d = quartic(g, c)
        s = g * math.sqrt(2 * math.pi)
        assert s * (1 - 3 * c / (4 * g ** 4)) <= d.z_gamma <= s
        lo, hi = g * g * (1 - 3.75 * c / g ** 4), g * g * (1 + 0.75 * c / g ** 4)
        assert lo <= d.sigma2 <= hi
        assert abs(d.expect(lambda x: np.ones_like(x)) - 1) < 1e-10
        assert abs(float(d.cdf(0.0)) - 0.5) < 1e-12


class TestPointwise:
    def test_pdf_at_zero(self, h_1_third):
        assert float(h_1_third.pdf(0.0)) == pytest.approx(1 / h_1_third.z_gamma, rel=1e-15)

    def test_tail_at_one(self, h_1_third):
        assert abs(float(h_1_third.tail(1.0)) - TAIL1_1_THIRD) < 1e-10

    def test_tail_against_live_oracle(self, h_2_third):
        mp.mp.dps = 25
        p = h_2_third.params
        k = lambda x: mp.exp(-p.a * x ** 2 / 2 - p.b * x ** 4 / 4)
        z = mp.quad(k, [-mp.inf, 0, mp.inf])
        for x in (-3.0, 0.7, 5.0):
            assert abs(float(h_2_third.tail(x)) - float(mp.quad(k, [x, mp.inf]) / z)) < 1e-12

    @given(st.floats(-40, 40), st.sampled_from(GAMMAS), st.sampled_from(CS))
    @settings(max_examples=60, deadline=None)
    def test_symmetry(self, x, g, c):
        d = quartic(g, c)
        assert float(d.pdf(-x)) == float(d.pdf(x))
        assert abs(float(d.cdf(-x)) - float(d.tail(x))) <= 1e-12
        assert abs(float(d.cdf(x)) + float(d.tail(x)) - 1) <= 1e-12


class TestTailFunctionals:
    @pytest.mark.parametrize("x", [-3.0, 0.0, 2.0])
    def test_phi_difference(self, h_1_third, x):
        tf = h_1_third.tail_functionals(np.array([x]))
        assert abs(tf.phi_low[0] - tf.phi_up[0] - x) < 1e-10

    @pytest.mark.parametrize("x", [-3.0, -0.5, 0.0, 1.0, 4.0])
    def test_chi_sum(self, h_1_third, x):
        tf = h_1_third.tail_functionals(np.array([x]))
        assert abs(tf.chi_low[0] + tf.chi_up[0] - (x * x + h_1_third.sigma2) / 2) < 1e-10

    def test_psi(self, h_1_third):
        tf = h_1_third.tail_functionals(np.array([-10.0, 0.0]))
        assert abs(tf.psi[0]) < 1e-8
        assert abs(tf.psi[1] - EABS_1_THIRD / 2) < 1e-12


class TestMoments:
    def test_zero_and_second(self, h_1_third):
        assert moment(h_1_third, 0) == 1.0
        assert abs(moment(h_1_third, 2) - h_1_third.sigma2) < 1e-10
        assert abs(h_1_third.sigma2 - M2_1_THIRD) < 1e-12

    def test_fourth(self, h_1_third):
        assert abs(moment(h_1_third, 4) - M4_1_THIRD) < 1e-12

    @pytest.mark.parametrize("k", [3, -2, 14])
    def test_rejects(self, h_1_third, k):
        with pytest.raises(HypothesisError):
            moment(h_1_third, k)


class TestSampler:
    def test_mean_and_acceptance(self, h_1_third):
        xs, rate = rejection_sample(h_1_third, 1_000_000, seed=7)
        assert abs(xs.mean()) <= 4 * math.sqrt(h_1_third.sigma2) / 1000
        assert abs(rate - h_1_third.z_gamma / math.sqrt(2 * math.pi)) < 0.01

    def test_deterministic(self, h_1_third):
        np.testing.assert_array_equal(sample(h_1_third, 1000, 3), sample(h_1_third, 1000, 3))

    def test_kolmogorov_smirnov(self, h_2_third):
        xs = sample(h_2_third, 100_000, seed=11)
        res = stats.kstest(xs, h_2_third.cdf)
        assert res.pvalue > 0.001
