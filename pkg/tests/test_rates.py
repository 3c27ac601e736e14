import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multimode_repeater import rates
from multimode_repeater.errors import ContractError, DomainError

EXAMPLE = rates.RepeaterParams()


def test_defaults_match_worked_example():
    assert EXAMPLE.link_length_km == 250
    assert EXAMPLE.clock_interval_s == pytest.approx(1.25e-3)
    assert EXAMPLE.eta_combined == pytest.approx(0.81)


def test_channel_transmission():
    assert rates.channel_transmission(250, 22) == pytest.approx(math.exp(-250 / 44))
    assert rates.channel_transmission(250, 22) == pytest.approx(0.003406, rel=1e-3)


def test_closed_form_example():
    assert rates.total_time_n2(EXAMPLE) == pytest.approx(3538.23, rel=1e-5)


def test_closed_form_only_for_two_levels():
    with pytest.raises(ContractError):
        rates.total_time_n2(EXAMPLE.with_(nesting_level=3))


@pytest.mark.parametrize(
    "field,value",
    [
        ("total_distance_km", 0.0),
        ("nesting_level", -1),
        ("pair_probability", 0.0),
        ("detector_efficiency", 1.2),
        ("memory_efficiency_avg", 0.0),
        ("modes_per_interval", 0),
    ],
)
def test_invalid_params_rejected(field, value):
    with pytest.raises(DomainError):
        EXAMPLE.with_(**{field: value})


def test_modes_must_fit_clock_interval():
    # L0/c = 1.25 ms holds 62500 bins of 20 ns
    EXAMPLE.with_(modes_per_interval=62500)
    with pytest.raises(DomainError):
        EXAMPLE.with_(modes_per_interval=62501)


@settings(max_examples=50)
@given(st.floats(1e-9, 1e-3), st.integers(1, 10**4))
def test_multimode_probability(p, N):
    p0 = rates.p0_multimode(p, N)
    assert p <= p0 <= min(1.0, N * p) + 1e-15
    assert p0 == pytest.approx(1 - (1 - p) ** N, rel=1e-9)


@settings(max_examples=50)
@given(st.integers(1, 1000))
def test_time_scales_inverse_with_modes(N):
    t1 = rates.total_time_n2(EXAMPLE)
    assert rates.total_time_n2(EXAMPLE.with_(modes_per_interval=N)) * N == pytest.approx(t1)


@settings(max_examples=50)
@given(st.floats(0.5, 0.999), st.floats(0.5, 0.99))
def test_fidelity_inversion_round_trip(F, eta):
    p = rates.pair_prob_for_fidelity(F, eta)
    assert rates.final_fidelity(eta, p) == pytest.approx(F, abs=1e-12)


def test_pair_probability_for_example():
    assert rates.pair_prob_for_fidelity(0.9, 0.81) == pytest.approx(0.1 / (56 * 0.19))


def test_inversion_at_perfect_efficiency():
    with pytest.raises(ContractError):
        rates.pair_prob_for_fidelity(0.9, 1.0)


def test_fidelity_clamped_and_flagged():
    assert rates.final_fidelity(0.5, 0.5) == 0.0
    assert rates.fidelity_extrapolated(0.5, 0.5)
    assert not rates.fidelity_extrapolated(0.81, 0.009)


def test_general_time_needs_one_probability_per_level():
    lp = rates.link_probabilities(EXAMPLE, [0.5], 0.5)
    with pytest.raises(ContractError):
        rates.total_time_general(EXAMPLE, lp)


def test_general_time_formula():
    lp = rates.link_probabilities(EXAMPLE, [0.5, 0.5], 0.25)
    expected = EXAMPLE.clock_interval_s * 1.5**3 / (lp.p0_multimode * 0.5 * 0.5 * 0.25)
    assert rates.total_time_general(EXAMPLE, lp) == pytest.approx(expected)


def test_optimal_nesting_fixed_p():
    n, t, table = rates.optimal_nesting(EXAMPLE, [0, 1, 2, 3, 4])
    times = dict(table)
    assert n == 3
    assert times[2] == pytest.approx(5307.35, rel=1e-4)
    assert t == min(times.values())


def test_optimal_nesting_custom_provider():
    def ideal(n, eta):
        return [1.0] * n, 1.0

    n, _, table = rates.optimal_nesting(EXAMPLE, [1, 2], probabilities=ideal)
    assert n == 2
    assert len(table) == 2


def test_rate_report_rows():
    rep = rates.rate_report(EXAMPLE)
    names = [k for k, _ in rep.rows()]
    assert names[:2] == ["t_tot_general_s", "t_tot_n2_s"]
    assert "p_swap_2" in names
    assert rep.fidelity == pytest.approx(1 - 56 * 0.19 * 0.009)
