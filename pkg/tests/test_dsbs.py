import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordlab.dsbs import (
    DomainError,
    GapInputs,
    bsc,
    case5_rate,
    case5_witness,
    concave_gap,
    dsbs_joint,
    dsbs_wyner_ci,
    figure4_csv,
    figure4_grid,
    rcs_gap_lower_bound,
    third_condition_terms,
    wyner_theta_tilde,
    xy_crossover,
)
from coordlab.prob import Pmf, binary_entropy, compose, marginalize, markov_chain_joint, mutual_information
from coordlab.regions import RatePoint, check_in_region

import oracles
from oracles import GAP_02_01, I_ZW_CASE5, THETA_TILDE_02, WYNER_CI_02


def test_constructors():
    assert np.array_equal(dsbs_joint(0).probs, [[0.5, 0], [0, 0.5]])
    assert np.allclose(dsbs_joint(0.5).probs, 0.25)
    assert np.allclose(dsbs_joint(0.2).probs, [[0.4, 0.1], [0.1, 0.4]])
    assert np.array_equal(bsc(0).rows, np.eye(2))
    assert np.allclose(bsc(0.5).rows, 0.5)
    assert np.allclose(compose(Pmf([0.5, 0.5]), bsc(0.3)).probs, dsbs_joint(0.3).probs)
    for bad in (-0.1, 1.2):
        with pytest.raises(DomainError):
            dsbs_joint(bad)
        with pytest.raises(DomainError):
            bsc(bad)


def test_theta_tilde():
    assert wyner_theta_tilde(0) == 0
    assert wyner_theta_tilde(0.5) == 0.5
    assert wyner_theta_tilde(0.2) == pytest.approx(THETA_TILDE_02, abs=1e-15)
    with pytest.raises(DomainError):
        wyner_theta_tilde(0.6)
    for th in np.linspace(0.01, 0.49, 49):
        tt = wyner_theta_tilde(th)
        assert tt < th
        # cascade of two BSC(tt) is BSC(th)
        assert 2 * tt * (1 - tt) == pytest.approx(th, abs=1e-12)


def test_wyner_ci_closed_form():
    assert dsbs_wyner_ci(0.2) == pytest.approx(WYNER_CI_02, abs=1e-12)
    assert dsbs_wyner_ci(1e-9) == pytest.approx(1.0, abs=1e-6)
    for th in (0.05, 0.2, 0.4):
        assert dsbs_wyner_ci(th) == pytest.approx(float(oracles.wyner_ci(th)), abs=1e-12)
        tt = wyner_theta_tilde(th)
        joint = markov_chain_joint(np.diag([0.5, 0.5]), bsc(tt), bsc(tt))
        assert mutual_information(joint, [1, 3], [2]) == pytest.approx(dsbs_wyner_ci(th), abs=1e-9)
    for bad in (0.0, 0.5):
        with pytest.raises(DomainError):
            dsbs_wyner_ci(bad)


def test_gap_values():
    assert rcs_gap_lower_bound(GapInputs(0.2, 0.1)) == pytest.approx(GAP_02_01, abs=1e-12)
    assert rcs_gap_lower_bound(GapInputs(0.2, 0.1)) == pytest.approx(0.08892, abs=1e-4)
    assert rcs_gap_lower_bound(GapInputs(0.2, 1e-9)) == pytest.approx(0.0, abs=1e-6)
    for th in np.arange(0.05, 0.46, 0.05):
        for tau in np.arange(0.05, 0.46, 0.05):
            g = rcs_gap_lower_bound(GapInputs(th, tau))
            assert g > 0
            assert g == pytest.approx(float(oracles.gap(th, tau)), abs=1e-12)


@pytest.mark.parametrize("theta,tau", [(0, 0.1), (0.5, 0.1), (0.2, 0), (0.2, 0.5), (-1, 0.2)])
def test_open_domain(theta, tau):
    with pytest.raises(DomainError):
        GapInputs(theta, tau)


def test_case5_witness():
    g = GapInputs(0.2, 0.1)
    w = case5_witness(g)
    assert w.i_zw == pytest.approx(I_ZW_CASE5, abs=1e-12)
    assert w.i_zyw == pytest.approx(dsbs_wyner_ci(0.2), abs=1e-12)
    assert np.allclose(marginalize(w.joint, [1, 3]).probs, dsbs_joint(0.2).probs, atol=1e-12)
    assert np.allclose(marginalize(w.joint, [0, 3]).probs, dsbs_joint(g.xy_crossover).probs, atol=1e-12)
    assert w.marginal_residual < 1e-12
    assert w.markov_violation() < 1e-12
    assert dsbs_wyner_ci(0.2) - w.i_xyw == pytest.approx(rcs_gap_lower_bound(g), abs=1e-9)
    rate = case5_rate(g)
    assert dsbs_wyner_ci(0.2) - rate > 0
    assert check_in_region(w, RatePoint(rate, 0.0), "rcs")
    assert not check_in_region(w, RatePoint(rate, 0.0), "dcs")


def test_figure4():
    rows = figure4_grid((0.2, 0.2), (0.1, 0.1), 1)
    assert len(rows) == 1 and rows[0][2] == pytest.approx(0.08892, abs=1e-4)
    csv = figure4_csv(rows)
    assert csv.splitlines() == ["theta,tau,gap_bits", "0.200000,0.100000,0.088979"]
    grid = figure4_grid(steps=9)
    assert len(grid) == 81 and all(r[2] > 0 for r in grid)
    low = figure4_grid((0.01, 0.49), (0.001, 0.001), 25)
    assert all(r[2] < 0.01 for r in low)
    with pytest.raises(DomainError):
        figure4_grid((0.0, 0.4), (0.1, 0.2), 3)
    with pytest.raises(DomainError):
        figure4_grid((0.1, 0.4), (0.1, 0.5), 3)


def test_gap_unimodal_in_theta():
    vals = [rcs_gap_lower_bound(GapInputs(th, 0.1)) for th in np.arange(0.01, 0.495, 0.01)]
    peak = int(np.argmax(vals))
    assert all(a < b for a, b in zip(vals[:peak], vals[1 : peak + 1]))
    assert all(a > b for a, b in zip(vals[peak:], vals[peak + 1 :]))


def _valid_tuple(draw):
    a = draw(st.floats(0.001, 0.45))
    b = draw(st.floats(a + 1e-3, 0.49))
    c = draw(st.floats(a + 1e-3, 0.49))
    lo = max(b, c) + 1e-4
    hi = min(0.5, b + c - a) - 1e-4
    if hi <= lo:
        return None
    d = draw(st.floats(lo, hi))
    return a, b, c, d


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_concave_gap_lemma(data):
    tup = _valid_tuple(data.draw)
    if tup is None:
        return
    a, b, c, d = tup
    assert a < min(b, c) and d > max(b, c) and b + c > a + d
    assert concave_gap(a, b, c, d) > 0


def test_third_condition_identity():
    for th in np.linspace(0.01, 0.49, 50):
        for tau in np.linspace(0.01, 0.49, 50):
            lhs, rhs = third_condition_terms(th, tau)
            assert lhs == pytest.approx(rhs, abs=1e-12)
            assert rhs > 0


def test_excluded_cases_arithmetic():
    # theta = 0: X and Y disagree exactly as often as X and Z
    for tau in (0.05, 0.2, 0.4):
        assert xy_crossover(0.0, tau) == pytest.approx(tau, abs=1e-15)
    # theta >= 1/2: disagreement of X and Y reaches 1/2 or more
    for th in (0.5, 0.7, 0.99):
        for tau in (0.05, 0.2, 0.45):
            assert xy_crossover(th, tau) >= 0.5 - 1e-15
            assert xy_crossover(th, tau) == pytest.approx(0.5 + (th - 0.5) * (1 - 2 * tau), abs=1e-15)
    assert binary_entropy(0.5) == 1.0
