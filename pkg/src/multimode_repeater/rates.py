"""Closed-form rates, probabilities and fidelity for the nested multimode repeater."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .errors import ContractError, DomainError

DEFAULT_FIBER_SPEED = 2.0e8  # m/s
DEFAULT_ATTENUATION_LENGTH = 22.0  # km
FIDELITY_ERROR_COEFFICIENT = 56.0  # n = 2 double-emission coefficient


@dataclass(frozen=True)
class RepeaterParams:
    total_distance_km: float = 1000.0
    nesting_level: int = 2
    attenuation_length_km: float = DEFAULT_ATTENUATION_LENGTH
    fiber_speed_m_per_s: float = DEFAULT_FIBER_SPEED
    pair_probability: float = 0.009
    detector_efficiency: float = 0.9
    memory_efficiency_avg: float = 0.9
    modes_per_interval: int = 1
    bin_separation_s: float = 20e-9

    def __post_init__(self):
        if not self.total_distance_km > 0:
            raise DomainError(f"total distance must be positive, got {self.total_distance_km}")
        if self.nesting_level < 0 or int(self.nesting_level) != self.nesting_level:
            raise DomainError("nesting level must be a non-negative integer")
        if not self.attenuation_length_km > 0 or not self.fiber_speed_m_per_s > 0:
            raise DomainError("attenuation length and fiber speed must be positive")
        if not 0.0 < self.pair_probability < 1.0:
            raise DomainError(f"pair probability {self.pair_probability} outside (0, 1)")
        for name in ("detector_efficiency", "memory_efficiency_avg"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DomainError(f"{name}={v} outside (0, 1]")
        if self.modes_per_interval < 1 or int(self.modes_per_interval) != self.modes_per_interval:
            raise DomainError("modes_per_interval must be a positive integer")
        if self.bin_separation_s < 0:
            raise DomainError("bin separation must be non-negative")
        # small slack so that N * dt == L0/c built from floats is accepted
        if self.modes_per_interval * self.bin_separation_s > self.clock_interval_s * (1 + 1e-12):
            raise DomainError(
                f"N*dt = {self.modes_per_interval * self.bin_separation_s:.3e} s does not fit "
                f"in one clock interval {self.clock_interval_s:.3e} s"
            )

    @property
    def link_length_km(self) -> float:
        return self.total_distance_km / 2**self.nesting_level

    @property
    def clock_interval_s(self) -> float:
        return self.link_length_km * 1e3 / self.fiber_speed_m_per_s

    @property
    def eta_combined(self) -> float:
        return self.memory_efficiency_avg * self.detector_efficiency

    def with_(self, **changes) -> RepeaterParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class LinkProbabilities:
    p0_single: float
    p0_multimode: float
    swap_probabilities: tuple[float, ...]
    projection_probability: float

    def __post_init__(self):
        object.__setattr__(self, "swap_probabilities", tuple(self.swap_probabilities))
        for v in (self.p0_single, self.p0_multimode, self.projection_probability, *self.swap_probabilities):
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"probability {v} outside [0, 1]")


@dataclass
class RateReport:
    t_tot_general_s: float
    t_tot_n2_s: float
    fidelity: float
    eta_combined: float
    p0_single: float
    p0_multimode: float
    swap_probabilities: list[float] = field(default_factory=list)
    projection_probability: float = float("nan")
    fidelity_extrapolated: bool = False

    def rows(self) -> list[tuple[str, float]]:
        out = [
            ("t_tot_general_s", self.t_tot_general_s),
            ("t_tot_n2_s", self.t_tot_n2_s),
            ("fidelity", self.fidelity),
            ("fidelity_extrapolated", float(self.fidelity_extrapolated)),
            ("eta_combined", self.eta_combined),
            ("p0_single", self.p0_single),
            ("p0_multimode", self.p0_multimode),
        ]
        out += [(f"p_swap_{i + 1}", v) for i, v in enumerate(self.swap_probabilities)]
        out.append(("p_projection", self.projection_probability))
        return out


def _check_prob(name: str, v: float, low_open: bool = False) -> None:
    if not (0.0 < v <= 1.0 if low_open else 0.0 <= v <= 1.0):
        raise DomainError(f"{name}={v} outside its allowed range")


def channel_transmission(L0_km: float, L_att_km: float) -> float:
    """Fiber transmission from a node to the central station, exp(-L0 / (2 L_att))."""
    if not L0_km > 0 or not L_att_km > 0:
        raise DomainError("lengths must be positive")
    return math.exp(-L0_km / (2.0 * L_att_km))


def p0_single_attempt(p: float, eta_channel: float, eta_det: float) -> float:
    for name, v in (("p", p), ("eta_channel", eta_channel), ("eta_det", eta_det)):
        _check_prob(name, v)
    return p * eta_channel * eta_det


def p0_multimode(p0_single: float, N: int) -> float:
    """Probability of at least one herald among N independent time bins."""
    _check_prob("p0_single", p0_single)
    if N < 1:
        raise DomainError("N must be at least 1")
    # -expm1(N log1p(-x)) keeps precision when N x << 1
    if p0_single == 1.0:
        return 1.0
    return -math.expm1(N * math.log1p(-p0_single))


def link_probabilities(
    params: RepeaterParams,
    swap_probabilities: Sequence[float] = (),
    projection_probability: float = 1.0,
    linear: bool = False,
) -> LinkProbabilities:
    """Bundle P0 (single and multimode) with given swap/projection probabilities.

    ``linear=True`` uses N * P0^(1) for the multimode probability, the small-P0
    form that the closed-form n = 2 expression assumes.
    """
    eta_ch = channel_transmission(params.link_length_km, params.attenuation_length_km)
    single = p0_single_attempt(params.pair_probability, eta_ch, params.detector_efficiency)
    N = params.modes_per_interval
    multi = min(N * single, 1.0) if linear else p0_multimode(single, N)
    return LinkProbabilities(single, multi, tuple(swap_probabilities), projection_probability)


def total_time_general(params: RepeaterParams, link_probs: LinkProbabilities) -> float:
    """(L0/c) (3/2)^(n+1) / (P0 P1 ... Pn Ppr), with P0 the multimode link probability."""
    n = params.nesting_level
    if len(link_probs.swap_probabilities) != n:
        raise ContractError(f"need {n} swap probabilities, got {len(link_probs.swap_probabilities)}")
    probs = (link_probs.p0_multimode, *link_probs.swap_probabilities, link_probs.projection_probability)
    if any(v <= 0.0 for v in probs):
        raise DomainError("a zero success probability gives an infinite expected time")
    return params.clock_interval_s * 1.5 ** (n + 1) / math.prod(probs)


def total_time_n2(params: RepeaterParams) -> float:
    """Closed-form two-level time (L0/c) 18 (2-eta)(4-3eta) / (N p eta_L0 eta_D eta^4)."""
    if params.nesting_level != 2:
        raise ContractError(f"closed form holds only for nesting level 2, got {params.nesting_level}")
    eta = params.eta_combined
    eta_ch = channel_transmission(params.link_length_km, params.attenuation_length_km)
    num = 18.0 * (2.0 - eta) * (4.0 - 3.0 * eta)
    den = params.modes_per_interval * params.pair_probability * eta_ch * params.detector_efficiency * eta**4
    return params.clock_interval_s * num / den


def _raw_fidelity(eta: float, p: float, coefficient: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta={eta} outside (0, 1]")
    if not 0.0 <= p < 1.0:
        raise DomainError(f"p={p} outside [0, 1)")
    return 1.0 - coefficient * (1.0 - eta) * p


def final_fidelity(eta: float, p: float, coefficient: float = FIDELITY_ERROR_COEFFICIENT) -> float:
    """Linear double-emission estimate 1 - 56 (1 - eta) p, clamped to [0, 1]."""
    return min(1.0, max(0.0, _raw_fidelity(eta, p, coefficient)))


def fidelity_extrapolated(eta: float, p: float, coefficient: float = FIDELITY_ERROR_COEFFICIENT) -> bool:
    """True when the linear estimate leaves [0, 1] and had to be clamped."""
    return _raw_fidelity(eta, p, coefficient) < 0.0


def pair_prob_for_fidelity(F_target: float, eta: float, coefficient: float = FIDELITY_ERROR_COEFFICIENT) -> float:
    if not 0.0 < F_target < 1.0:
        raise DomainError(f"target fidelity {F_target} outside (0, 1)")
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta={eta} outside (0, 1]")
    if eta == 1.0:
        raise ContractError("with eta = 1 every pair probability reaches the target")
    return (1.0 - F_target) / (coefficient * (1.0 - eta))


ProbabilityProvider = Callable[[int, float], tuple[Sequence[float], float]]


def _oracle_probabilities(n: int, eta: float):
    from .oracle import oracle_link_probabilities

    return oracle_link_probabilities(n, eta)


def optimal_nesting(
    params: RepeaterParams,
    n_candidates: Sequence[int],
    probabilities: ProbabilityProvider | None = None,
    fidelity_target: float | None = None,
    fidelity_slope: Callable[[int, float], float] | None = None,
) -> tuple[int, float, list[tuple[int, float]]]:
    """Minimize the general total time over nesting levels.

    ``probabilities(n, eta)`` supplies (P_1..P_n, P_pr); it defaults to the
    Fock-state oracle.  With ``fidelity_target`` set, the pair probability at each
    level is re-chosen as (1 - F) / slope(n, eta), slope taken from
    ``fidelity_slope`` (default: oracle double-emission slope).

    Returns (n*, T(n*), [(n, T(n)), ...]); ties go to the smaller n.
    """
    if not n_candidates:
        raise ContractError("no nesting levels to compare")
    probabilities = probabilities or _oracle_probabilities
    eta = params.eta_combined
    table = []
    for n in sorted(set(n_candidates)):
        trial = params.with_(nesting_level=n)
        if fidelity_target is not None:
            if fidelity_slope is None:
                from .oracle import chain_fidelity_slope

                fidelity_slope = chain_fidelity_slope
            trial = trial.with_(pair_probability=(1.0 - fidelity_target) / fidelity_slope(n, eta))
        swaps, p_pr = probabilities(n, eta)
        t = total_time_general(trial, link_probabilities(trial, swaps, p_pr))
        table.append((n, t))
    best = min(table, key=lambda row: (row[1], row[0]))
    return best[0], best[1], table


def rate_report(
    params: RepeaterParams,
    probabilities: ProbabilityProvider | None = None,
    coefficient: float = FIDELITY_ERROR_COEFFICIENT,
) -> RateReport:
    probabilities = probabilities or _oracle_probabilities
    eta = params.eta_combined
    swaps, p_pr = probabilities(params.nesting_level, eta)
    lp = link_probabilities(params, swaps, p_pr)
    t_n2 = total_time_n2(params) if params.nesting_level == 2 else float("nan")
    return RateReport(
        t_tot_general_s=total_time_general(params, lp),
        t_tot_n2_s=t_n2,
        fidelity=final_fidelity(eta, params.pair_probability, coefficient),
        eta_combined=eta,
        p0_single=lp.p0_single,
        p0_multimode=lp.p0_multimode,
        swap_probabilities=list(lp.swap_probabilities),
        projection_probability=p_pr,
        fidelity_extrapolated=fidelity_extrapolated(eta, params.pair_probability, coefficient),
    )
