import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multimode_repeater.fock import (
    ConditionalEnsemble,
    FockState,
    PhaseConfig,
    TruncationError,
    apply_beamsplitter,
    apply_loss,
    apply_pair_source,
    apply_phase,
    measure_click,
    measure_number,
    tensor,
    trace_out,
)

phases = st.floats(0, 2 * math.pi, allow_nan=False)
probs = st.floats(0, 1, allow_nan=False)


def random_state(seed, modes=2, truncation=3):
    rng = np.random.default_rng(seed)
    amps = {}
    for n1 in range(truncation + 1):
        for n2 in range(truncation + 1 - n1):
            occ = (n1, n2) + (0,) * (modes - 2)
            amps[occ] = complex(rng.normal(), rng.normal())
    return FockState(modes, amps, truncation).normalized()


def test_vacuum_and_basis():
    v = FockState.vacuum(3, 2)
    assert v.amplitudes == {(0, 0, 0): 1}
    b = FockState.basis((1, 0, 1), 2)
    assert b.inner(v) == 0
    assert b.norm_sq() == pytest.approx(1)


def test_occupation_above_truncation_rejected():
    with pytest.raises(ValueError):
        FockState(2, {(2, 1): 1.0}, 2)


def test_hong_ou_mandel():
    state = apply_beamsplitter(FockState.basis((1, 1), 2), 0, 1)
    assert abs(state.amplitudes.get((1, 1), 0)) < 1e-12
    assert abs(state.amplitudes[(2, 0)]) ** 2 == pytest.approx(0.5)
    assert abs(state.amplitudes[(0, 2)]) ** 2 == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 1), phases, phases)
def test_beamsplitter_is_unitary(seed, T, p1, p2):
    s = random_state(seed)
    t = random_state(seed + 1)
    us = apply_beamsplitter(s, 0, 1, T, p1, p2)
    ut = apply_beamsplitter(t, 0, 1, T, p1, p2)
    assert us.norm_sq() == pytest.approx(1, abs=1e-12)
    assert us.inner(ut) == pytest.approx(s.inner(t), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.5), phases)
def test_pair_source_normalized_and_balanced(p, phi):
    s = apply_pair_source(FockState.vacuum(2, 6), 0, 1, p, phi)
    assert s.norm_sq() == pytest.approx(1, abs=1e-12)
    assert all(occ[0] == occ[1] for occ in s.amplitudes)


def test_pair_source_single_pair_probability():
    p = 1e-3
    s = apply_pair_source(FockState.vacuum(2, 2), 0, 1, p)
    one = abs(s.amplitudes[(1, 1)]) ** 2
    assert one == pytest.approx(p / 2, rel=1e-3)


def test_pair_source_rejects_bad_p():
    with pytest.raises(ValueError):
        apply_pair_source(FockState.vacuum(2, 2), 0, 1, 0.7)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), probs)
def test_loss_conserves_weight_and_mean_number(seed, eta):
    s = random_state(seed)
    ens = apply_loss(s, 0, eta)
    assert ens.total_weight == pytest.approx(1, abs=1e-12)
    n_in = sum(abs(a) ** 2 * occ[0] for occ, a in s.amplitudes.items())
    n_out = sum(b.weight * sum(abs(a) ** 2 * occ[0] for occ, a in b.state.amplitudes.items()) for b in ens.branches)
    assert n_out == pytest.approx(eta * n_in, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_number_outcomes_sum_to_one(seed):
    s = random_state(seed)
    total = sum(measure_number(s, 0, k)[0] for k in range(4))
    assert total == pytest.approx(1, abs=1e-12)
    p_click, _ = measure_click(s, 1, True)
    p_none, _ = measure_click(s, 1, False)
    assert p_click + p_none == pytest.approx(1, abs=1e-12)


def test_phase_only_changes_relative_phase():
    s = random_state(3)
    t = apply_phase(s, 0, 1.3)
    assert t.norm_sq() == pytest.approx(1)
    assert t.fidelity(s) <= 1 + 1e-12


def test_tensor_product_norm():
    s = tensor(random_state(1), random_state(2))
    assert s.mode_count == 4
    assert s.norm_sq() == pytest.approx(1)


def test_trace_out_keeps_weight():
    s = apply_beamsplitter(FockState.basis((1, 1), 2), 0, 1)
    ens = trace_out(ConditionalEnsemble.pure(s), (0,))
    assert ens.total_weight == pytest.approx(1)
    dist = ens.photon_number_distribution()
    assert dist.get(1, 0.0) == pytest.approx(0, abs=1e-12)
    assert dist[2] == pytest.approx(0.5)


def test_compress_preserves_fidelity():
    ens = apply_loss(random_state(5), 0, 0.6)
    target = random_state(9)
    assert ens.compress().fidelity(target) == pytest.approx(ens.fidelity(target), abs=1e-12)


@given(phases, phases, phases, phases)
def test_phase_config_wraps(a, b, c, d):
    cfg = PhaseConfig(a + 7, b, c - 7, d)
    assert 0 <= cfg.phi_a < 2 * math.pi
    assert math.isclose(math.cos(cfg.theta_a), math.cos(a + c), abs_tol=1e-9)


def test_truncation_error_is_contract_error():
    assert issubclass(TruncationError, ValueError)


@pytest.mark.parametrize("stats,expected", [("thermal", 0.5), ("poisson", 0.25)])
def test_two_pair_ratio(stats, expected):
    p = 1e-4
    s = apply_pair_source(FockState.vacuum(2, 4), 0, 1, p, statistics=stats)
    ratio = abs(s.amplitudes[(2, 2)]) ** 2 / abs(s.amplitudes[(1, 1)]) ** 2
    assert ratio == pytest.approx(expected * p, rel=1e-3)
