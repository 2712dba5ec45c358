"""Pointwise checks of the tail and ratio inequality families on dense grids.

Three families are false as stated. Their counterexamples are pinned
here so that a change in behaviour is noticed.
"""

import numpy as np
import pytest

from modstein.inequalities import (FAMILY_NAMES, MARGIN_TOL, in_hypothesis, inequality_grid,
                                   verify_family, verify_inequalities, verify_variance_bracket)

from conftest import CS, GAMMAS, quartic

HOLDING = ["tail_upper", "cdf_upper", "psi_upper", "tail_lower", "variance_weighted",
           "derivative_signs", "chi_up"]


def test_family_names():
    assert len(FAMILY_NAMES) == 11
    assert set(HOLDING) | {"phi_sum", "psi_sign", "shifted_gbar", "variance_bracket"} == set(FAMILY_NAMES)


def test_grid_shape():
    g = inequality_grid(2.0)
    assert np.all(np.diff(g) > 0)
    assert g[0] == -20 and g[-1] == 20


@pytest.mark.parametrize("g", GAMMAS)
@pytest.mark.parametrize("c", CS)
def test_holding_families(g, c):
    d = quartic(g, c)
    grid = inequality_grid(g)
    for name in HOLDING:
        if in_hypothesis(name, g, c):
            r = verify_family(name, d, grid)
            assert r.passed, (name, r.worst_margin, r.argmin_x)
    assert verify_variance_bracket(d).passed


@pytest.mark.parametrize("g", GAMMAS)
@pytest.mark.parametrize("c", CS)
def test_shifted_gbar_except_strongest_quartic(g, c):
    r = verify_family("shifted_gbar", quartic(g, c))
    assert r.passed == ((g, c) != (1.0, 3.0))


def test_shifted_gbar_counterexample():
    r = verify_family("shifted_gbar", quartic(1.0, 3.0))
    assert r.worst_margin < -0.01
    assert -0.85 < r.argmin_x < -0.75


@pytest.mark.parametrize("g", GAMMAS)
def test_phi_sum_fails_in_the_tails(g):
    # phi_low + phi_up >= |x| while the right side decays like the density
    r = verify_family("phi_sum", quartic(g, 1 / 3))
    assert r.worst_margin == pytest.approx(-10 * g, rel=1e-6)


def test_psi_sign_fails_beyond_roundoff():
    r = verify_family("psi_sign", quartic(1.0, 1.0))
    assert r.worst_margin < -100 * MARGIN_TOL


def test_out_of_hypothesis_is_skipped():
    reports = verify_inequalities([1.0], [3.0], ["variance_weighted"])
    assert reports[0].in_hypothesis is False and reports[0].passed is None
