import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multimode_repeater import oracle, rates
from multimode_repeater.fock import PhaseConfig, TruncationError

etas = st.floats(0.05, 1.0)
phases = st.floats(0, 2 * math.pi)


@settings(max_examples=25, deadline=None)
@given(etas)
def test_swap_probability_closed_form(eta):
    p, _ = oracle.swap_oracle(eta)
    assert p == pytest.approx(eta * (2 - eta) / 2, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(etas)
def test_projection_probability_closed_form(eta):
    # two imperfect chains of ideal pairs
    p_pr, f = oracle.postselect_oracle(eta)
    assert p_pr == pytest.approx(eta**2 / 2, abs=1e-12)
    assert f == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("eta", [0.6, 0.81, 0.95])
def test_chain_probabilities(eta):
    swaps, p_pr = oracle.oracle_link_probabilities(2, eta)
    assert swaps[0] == pytest.approx(eta * (2 - eta) / 2, abs=1e-12)
    assert swaps[1] == pytest.approx(eta * (4 - 3 * eta) / (2 * (2 - eta) ** 2), abs=1e-12)
    assert p_pr == pytest.approx(eta**2 / (2 * (4 - 3 * eta) ** 2), abs=1e-12)
    assert swaps[0] * swaps[1] * p_pr == pytest.approx(eta**4 / (8 * (2 - eta) * (4 - 3 * eta)), rel=1e-12)


def test_general_vs_closed_form_ratio_is_three_halves():
    params = rates.RepeaterParams()
    swaps, p_pr = oracle.oracle_link_probabilities(2, params.eta_combined)
    t4 = rates.total_time_general(params, rates.link_probabilities(params, swaps, p_pr, linear=True))
    assert t4 / rates.total_time_n2(params) == pytest.approx(1.5, rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(phases, phases, phases, phases)
def test_link_state_is_target_for_any_phases(pa, pb, ca, cb):
    ph = PhaseConfig(pa, pb, ca, cb)
    link = oracle.elementary_link(1e-3, phases=ph)
    assert link.fidelity() == pytest.approx(1, abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(phases, st.floats(-3, 3))
def test_phase_covariance(pa, delta):
    a = oracle.elementary_link(1e-3, 0.3, 0.9, PhaseConfig(pa, 0, 0, 0), truncation=4)
    b = oracle.elementary_link(1e-3, 0.3, 0.9, PhaseConfig(pa + delta, 0, -delta, 0), truncation=4)
    assert a.probability == pytest.approx(b.probability, rel=1e-10)
    assert a.fidelity() == pytest.approx(b.fidelity(), abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(phases, phases)
def test_swap_phase_adds(t1, t2):
    _, ens = oracle.swap_oracle(1.0, t1, t2)
    assert ens.fidelity(oracle.entangled_pair(t1 + t2)) == pytest.approx(1, abs=1e-10)


def test_link_click_probability_first_order():
    eta_ch, eta_d = math.exp(-250 / 44), 0.9
    ps = [2e-4, 5e-4, 1e-3]
    clicks = [oracle.elementary_link(p, eta_ch, eta_d, truncation=4).probability for p in ps]
    slope = (clicks[2] - clicks[0]) / (ps[2] - ps[0])
    assert slope == pytest.approx(eta_ch * eta_d, rel=0.01)
    assert rates.p0_single_attempt(0.009, 0.003406, 0.9) == pytest.approx(2.759e-5, rel=1e-3)


def test_threshold_detectors_run():
    link = oracle.elementary_link(1e-3, 0.5, 0.9, truncation=4, resolving=False)
    assert 0 < link.probability < 1
    assert 0.99 < link.fidelity() <= 1 + 1e-12


def test_vacuum_admixture_lowers_projection_probability():
    pure, _ = oracle.postselect_oracle(1.0)
    mixed = oracle.vacuum_admixed_pair(0.2)
    p_mixed, f = oracle.postselect_oracle(1.0, mixed, mixed)
    assert p_mixed == pytest.approx(pure * 0.8**2, rel=1e-12)
    assert f == pytest.approx(1, abs=1e-10)


def test_slope_zero_without_loss_and_positive_with_loss():
    assert abs(oracle.chain_fidelity_slope(2, 1.0)) < 1e-6
    s = oracle.chain_fidelity_slope(2, 0.81)
    # measured ground truth, about 47 (1 - eta)
    assert s == pytest.approx(8.974, rel=1e-3)


def test_slope_needs_truncation_four():
    with pytest.raises(TruncationError):
        oracle.chain_fidelity_slope(2, 0.81, truncation=2)
    with pytest.raises(TruncationError):
        oracle.elementary_link(1e-3, truncation=1)
