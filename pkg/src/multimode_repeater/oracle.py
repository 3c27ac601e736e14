"""Brute-force protocol oracle: elementary links, swapping and the final projection.

Every stage works on ensembles over the memory modes that remain after the
heralding measurement.  Heralds are single clicks (exactly one photon in one
output port, zero in the other); the minus-port outcome is mapped onto the
plus-port state by a known pi phase flip on the far memory, which is what a
real node does with the classical herald.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
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
    measure_total,
    trace_out,
    state_from_terms,
    tensor_ensembles,
)

DEFAULT_P_GRID = (2e-4, 5e-4, 1e-3)


def entangled_pair(theta: float = 0.0) -> FockState:
    """(|1,0> + e^{i theta}|0,1>)/sqrt(2) on two memory modes."""
    return state_from_terms({(1, 0): 1.0, (0, 1): complex(math.cos(theta), math.sin(theta))})


def two_pair_target(theta1: float = 0.0, theta2: float = 0.0) -> FockState:
    """One excitation per location, modes ordered (a1, z1, a2, z2).

    Projecting (a1 + e^{i theta1} z1)(a2 + e^{i theta2} z2)|0> onto one photon per
    location gives a1 z2 + e^{i(theta1 - theta2)} a2 z1 up to a global phase.
    """
    rel = theta1 - theta2
    return state_from_terms({(1, 0, 0, 1): 1.0, (0, 1, 1, 0): complex(math.cos(rel), math.sin(rel))})


def _herald(ens: ConditionalEnsemble, port1: int, port2: int, flip_mode: int, resolving: bool):
    """Single-click herald on two beamsplitter output ports.

    Returns the summed probability of the two single-click outcomes and the
    merged, phase-corrected ensemble with the port modes still present.
    """
    if resolving:
        _, plus = measure_number(ens, port1, 1)
        _, plus = measure_number(plus, port2, 0)
        _, minus = measure_number(ens, port1, 0)
        _, minus = measure_number(minus, port2, 1)
    else:
        _, plus = measure_click(ens, port1, True)
        _, plus = measure_click(plus, port2, False)
        _, minus = measure_click(ens, port1, False)
        _, minus = measure_click(minus, port2, True)
    minus = minus.map(lambda s: apply_phase(s, flip_mode, math.pi))
    merged = ConditionalEnsemble(plus.branches + minus.branches)
    return merged.total_weight / ens.total_weight, merged


@dataclass
class LinkResult:
    probability: float
    ensemble: ConditionalEnsemble
    phases: PhaseConfig

    def target(self) -> FockState:
        return entangled_pair(self.phases.theta_ab)

    def fidelity(self) -> float:
        return self.ensemble.fidelity(self.target())


def elementary_link(
    p: float,
    eta_channel: float = 1.0,
    eta_detector: float = 1.0,
    phases: PhaseConfig | None = None,
    truncation: int = 2,
    resolving: bool = True,
    statistics: str = "thermal",
) -> LinkResult:
    """Herald one elementary link between memories A and B.

    Modes: 0 memory a, 1 fiber a', 2 fiber b', 3 memory b.  The returned
    ensemble lives on (a, b), its weights summing to 1 (conditional state).
    """
    phases = phases or PhaseConfig()
    if truncation < 2:
        raise TruncationError("an elementary link needs at least one pair (truncation >= 2)")
    state = FockState.vacuum(4, truncation)
    state = apply_pair_source(state, 0, 1, p, phases.phi_a, statistics)
    state = apply_pair_source(state, 3, 2, p, phases.phi_b, statistics)
    state = apply_phase(state, 1, phases.chi_a)
    state = apply_phase(state, 2, phases.chi_b)
    ens = ConditionalEnsemble.pure(state)
    ens = apply_loss(ens, 1, eta_channel)
    ens = apply_loss(ens, 2, eta_channel)
    ens = ens.map(lambda s: apply_beamsplitter(s, 1, 2))
    ens = apply_loss(ens, 1, eta_detector)
    ens = apply_loss(ens, 2, eta_detector)
    prob, heralded = _herald(ens, 1, 2, flip_mode=3, resolving=resolving)
    out = trace_out(heralded, (0, 3)).compress().conditional()
    return LinkResult(prob, out, phases)


def swap(
    left: ConditionalEnsemble, right: ConditionalEnsemble, eta: float, resolving: bool = True
) -> tuple[float, ConditionalEnsemble]:
    """Entanglement swapping of (a, b) and (c, d) by a click behind a b/c beamsplitter.

    ``eta`` is the combined retrieval and detection efficiency of b and c.
    Returns the success probability and the conditional ensemble on (a, d).
    """
    ens = tensor_ensembles(left.conditional(), right.conditional())
    ens = apply_loss(ens, 1, eta)
    ens = apply_loss(ens, 2, eta)
    ens = ens.map(lambda s: apply_beamsplitter(s, 1, 2))
    prob, heralded = _herald(ens, 1, 2, flip_mode=3, resolving=resolving)
    if prob == 0.0:
        return 0.0, heralded
    return prob, trace_out(heralded, (0, 3)).compress().conditional()


def swap_oracle(
    eta: float, theta_ab: float = 0.0, theta_cd: float = 0.0, resolving: bool = True
) -> tuple[float, ConditionalEnsemble]:
    """Swap two ideal single-excitation pairs; returns (P_swap, ensemble on (a, d))."""
    left = ConditionalEnsemble.pure(entangled_pair(theta_ab))
    right = ConditionalEnsemble.pure(entangled_pair(theta_cd))
    return swap(left, right, eta, resolving)


def postselect(
    chain1: ConditionalEnsemble, chain2: ConditionalEnsemble, eta: float
) -> tuple[float, ConditionalEnsemble]:
    """Keep exactly one detected photon at each location.

    Chains are ensembles on (a_i, z_i); the result lives on (a1, z1, a2, z2).
    """
    ens = tensor_ensembles(chain1.conditional(), chain2.conditional())
    for mode in range(4):
        ens = apply_loss(ens, mode, eta)
    _, ens = measure_total(ens, (0, 2), 1)
    _, ens = measure_total(ens, (1, 3), 1)
    prob = ens.total_weight
    return prob, ens


def postselect_oracle(
    eta: float,
    chain1: ConditionalEnsemble | None = None,
    chain2: ConditionalEnsemble | None = None,
    theta1: float = 0.0,
    theta2: float = 0.0,
) -> tuple[float, float]:
    """(P_pr, fidelity to the two-excitation target); ideal pairs when chains are omitted."""
    chain1 = chain1 or ConditionalEnsemble.pure(entangled_pair(theta1))
    chain2 = chain2 or ConditionalEnsemble.pure(entangled_pair(theta2))
    prob, ens = postselect(chain1, chain2, eta)
    if prob == 0.0:
        return 0.0, float("nan")
    return prob, ens.fidelity(two_pair_target(theta1, theta2))


def vacuum_admixed_pair(vacuum_weight: float, theta: float = 0.0) -> ConditionalEnsemble:
    pair = entangled_pair(theta)
    vac = FockState.vacuum(2, pair.truncation)
    return ConditionalEnsemble(
        [
            *ConditionalEnsemble.pure(pair, 1.0 - vacuum_weight).branches,
            *ConditionalEnsemble.pure(vac, vacuum_weight).branches,
        ]
    ).compress()


@dataclass
class ChainResult:
    nesting_level: int
    link_probability: float
    swap_probabilities: list[float]
    projection_probability: float
    fidelity: float
    level_fidelities: list[float]


def chain_protocol(
    n: int,
    eta: float,
    p: float | None = None,
    eta_channel: float = 1.0,
    eta_detector: float = 1.0,
    truncation: int = 2,
    resolving: bool = True,
    statistics: str = "thermal",
) -> ChainResult:
    """Run 2**n identical links, n swap levels per chain, then the two-chain projection.

    With ``p=None`` the links are ideal single-excitation pairs (the p -> 0 limit).
    All links share phases zero, so every level target has zero phase.
    """
    if n < 0:
        raise ValueError("nesting level must be non-negative")
    if p is None:
        link_prob = float("nan")
        ens = ConditionalEnsemble.pure(entangled_pair())
    else:
        link = elementary_link(
            p, eta_channel, eta_detector, truncation=truncation, resolving=resolving, statistics=statistics
        )
        link_prob = link.probability
        ens = link.ensemble
    target = entangled_pair()
    level_fids = [ens.fidelity(target)]
    swaps = []
    for _ in range(n):
        prob, ens = swap(ens, ens, eta, resolving)
        swaps.append(prob)
        level_fids.append(ens.fidelity(target))
    p_pr, final = postselect(ens, ens, eta)
    fid = final.fidelity(two_pair_target()) if p_pr > 0 else float("nan")
    return ChainResult(n, link_prob, swaps, p_pr, fid, level_fids)


def oracle_link_probabilities(n: int, eta: float) -> tuple[list[float], float]:
    """Swap probabilities P_1..P_n and P_pr in the p -> 0 limit."""
    res = chain_protocol(n, eta)
    return res.swap_probabilities, res.projection_probability


def chain_fidelity_slope(
    n: int,
    eta: float,
    p_grid=DEFAULT_P_GRID,
    eta_channel: float = math.exp(-250.0 / 44.0),
    eta_detector: float = 0.9,
    truncation: int = 4,
    resolving: bool = True,
    statistics: str = "thermal",
) -> float:
    """d(1 - F)/dp of the final two-pair state, from a linear fit over ``p_grid``.

    Defaults follow the 1000 km worked example (L0 = 250 km, L_att = 22 km,
    eta_D = 0.9).  Double-pair emission needs four photons per link.
    """
    if truncation < 4:
        raise TruncationError("double-pair errors need truncation >= 4")
    infid = [
        1.0 - chain_protocol(n, eta, p, eta_channel, eta_detector, truncation, resolving, statistics).fidelity
        for p in p_grid
    ]
    slope, _ = np.polyfit(np.asarray(p_grid, dtype=float), np.asarray(infid), 1)
    return float(slope)
