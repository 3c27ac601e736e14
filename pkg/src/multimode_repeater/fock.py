"""Sparse bosonic Fock-state engine.

States are dictionaries from occupation tuples to complex amplitudes.
Mixed states produced by loss and detection are kept as ensembles of pure
branches labelled by the environment/measurement record, which is exact for
every quantity computed here (probabilities and fidelities to pure targets
are linear in the density operator).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError

TWO_PI = 2.0 * math.pi
# amplitudes below this are treated as exact zeros
AMP_EPS = 1e-15


class TruncationError(ContractError):
    """Raised when a truncation is too low for the requested computation."""


@dataclass(frozen=True)
class PhaseConfig:
    """Pump phases (phi) and fiber phases (chi) of the two sources of a link, in radians."""

    phi_a: float = 0.0
    phi_b: float = 0.0
    chi_a: float = 0.0
    chi_b: float = 0.0

    def __post_init__(self):
        for name in ("phi_a", "phi_b", "chi_a", "chi_b"):
            object.__setattr__(self, name, math.fmod(getattr(self, name), TWO_PI) % TWO_PI)

    @property
    def theta_a(self) -> float:
        return (self.phi_a + self.chi_a) % TWO_PI

    @property
    def theta_b(self) -> float:
        return (self.phi_b + self.chi_b) % TWO_PI

    @property
    def theta_ab(self) -> float:
        return (self.theta_b - self.theta_a) % TWO_PI


@dataclass
class FockState:
    mode_count: int
    amplitudes: dict[tuple[int, ...], complex]
    truncation: int

    def __post_init__(self):
        if self.mode_count < 1:
            raise ValueError("mode_count must be positive")
        clean = {}
        for occ, amp in self.amplitudes.items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != self.mode_count or min(occ) < 0:
                raise ValueError(f"bad occupation tuple {occ}")
            if sum(occ) > self.truncation:
                raise TruncationError(f"{occ} exceeds truncation {self.truncation}")
            if abs(amp) > AMP_EPS:
                clean[occ] = complex(amp)
        self.amplitudes = clean

    @classmethod
    def vacuum(cls, mode_count: int, truncation: int) -> FockState:
        return cls(mode_count, {(0,) * mode_count: 1.0}, truncation)

    @classmethod
    def basis(cls, occupation: Sequence[int], truncation: int | None = None) -> FockState:
        occ = tuple(occupation)
        return cls(len(occ), {occ: 1.0}, sum(occ) if truncation is None else truncation)

    def norm_sq(self) -> float:
        return sum(abs(a) ** 2 for a in self.amplitudes.values())

    def normalized(self) -> FockState:
        n = math.sqrt(self.norm_sq())
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockState(self.mode_count, {k: v / n for k, v in self.amplitudes.items()}, self.truncation)

    def scaled(self, factor: complex) -> FockState:
        return FockState(self.mode_count, {k: v * factor for k, v in self.amplitudes.items()}, self.truncation)

    def inner(self, other: FockState) -> complex:
        """<self|other>."""
        if other.mode_count != self.mode_count:
            raise ValueError("mode count mismatch")
        small, large = (self, other) if len(self.amplitudes) <= len(other.amplitudes) else (other, self)
        total = 0j
        for occ in small.amplitudes:
            if occ in large.amplitudes:
                total += self.amplitudes[occ].conjugate() * other.amplitudes[occ]
        return total

    def fidelity(self, target: FockState) -> float:
        """|<target|self>|^2 for normalized arguments."""
        return abs(target.inner(self)) ** 2 / (target.norm_sq() * self.norm_sq())

    def photon_numbers(self) -> set[int]:
        return {sum(occ) for occ in self.amplitudes}

    def select_modes(self, modes: Sequence[int]) -> FockState:
        """Keep only ``modes``; the dropped modes must be in a definite number state."""
        drop = [m for m in range(self.mode_count) if m not in modes]
        seen = {tuple(occ[m] for m in drop) for occ in self.amplitudes}
        if len(seen) > 1:
            raise ValueError("dropped modes are entangled with the kept ones")
        out: dict[tuple[int, ...], complex] = {}
        for occ, amp in self.amplitudes.items():
            out[tuple(occ[m] for m in modes)] = amp
        return FockState(len(modes), out, self.truncation)

    def dump(self) -> list[tuple[tuple[int, ...], float, float]]:
        """Sorted (occupation, re, im) rows."""
        return [(occ, amp.real, amp.imag) for occ, amp in sorted(self.amplitudes.items())]


def tensor(left: FockState, right: FockState) -> FockState:
    amps = {}
    for o1, a1 in left.amplitudes.items():
        for o2, a2 in right.amplitudes.items():
            amps[o1 + o2] = a1 * a2
    return FockState(left.mode_count + right.mode_count, amps, left.truncation + right.truncation)


def _check_mode(state: FockState, *modes: int) -> None:
    for m in modes:
        if not 0 <= m < state.mode_count:
            raise IndexError(f"mode {m} out of range for {state.mode_count} modes")


def apply_phase(state: FockState, mode: int, phase: float) -> FockState:
    """Phase shift a^dag -> e^{i phase} a^dag on one mode."""
    _check_mode(state, mode)
    amps = {occ: amp * cmath.exp(1j * phase * occ[mode]) for occ, amp in state.amplitudes.items()}
    return FockState(state.mode_count, amps, state.truncation)


def apply_pair_source(
    state: FockState,
    idler_mode: int,
    signal_mode: int,
    p: float,
    phase: float = 0.0,
    statistics: str = "thermal",
) -> FockState:
    """Parametric pair source emitting a pair with probability ~p/2.

    Applies sum_k t^k (a^dag a'^dag)^k / k! with t = sqrt(p/2) e^{i phase}
    (two-mode squeezed vacuum, ``statistics="thermal"``), keeps the terms inside
    the truncation and rescales to the input norm.  ``statistics="poisson"``
    divides the k-pair term by an extra sqrt(k!).
    """
    if statistics not in ("thermal", "poisson"):
        raise ValueError(f"unknown pair statistics {statistics!r}")
    _check_mode(state, idler_mode, signal_mode)
    if idler_mode == signal_mode:
        raise ValueError("source modes must be distinct")
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"pair probability {p} outside [0, 0.5]")
    t = math.sqrt(p / 2.0) * cmath.exp(1j * phase)
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.amplitudes.items():
        k = 0
        coeff = amp
        cur = list(occ)
        while sum(cur) <= state.truncation:
            key = tuple(cur)
            out[key] = out.get(key, 0j) + coeff
            if t == 0:
                break
            k += 1
            ni, ns = cur[idler_mode], cur[signal_mode]
            # t^k/k! times the creation-operator matrix elements
            coeff = coeff * t / k * math.sqrt((ni + 1) * (ns + 1))
            if statistics == "poisson":
                coeff /= math.sqrt(k)
            cur[idler_mode] += 1
            cur[signal_mode] += 1
    new = FockState(state.mode_count, out, state.truncation)
    return new.scaled(math.sqrt(state.norm_sq() / new.norm_sq()))


def apply_beamsplitter(
    state: FockState,
    mode1: int,
    mode2: int,
    transmittance: float = 0.5,
    phase1: float = 0.0,
    phase2: float = 0.0,
) -> FockState:
    """Lossless two-mode beamsplitter with input phase shifts.

    Input creation operators map as
    a1^dag -> e^{i phase1} (sqrt(T) b1^dag + sqrt(R) b2^dag) and
    a2^dag -> e^{i phase2} (sqrt(R) b1^dag - sqrt(T) b2^dag),
    so output mode 1 detects (a1 + a2)/sqrt(2) at T = 1/2.
    """
    _check_mode(state, mode1, mode2)
    if mode1 == mode2:
        raise ValueError("beamsplitter modes must differ")
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError("transmittance outside [0, 1]")
    st, sr = math.sqrt(transmittance), math.sqrt(1.0 - transmittance)
    e1, e2 = cmath.exp(1j * phase1), cmath.exp(1j * phase2)
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.amplitudes.items():
        n1, n2 = occ[mode1], occ[mode2]
        pref = amp * e1**n1 * e2**n2 / math.sqrt(math.factorial(n1) * math.factorial(n2))
        for j in range(n1 + 1):
            cj = math.comb(n1, j) * st**j * sr ** (n1 - j)
            if cj == 0.0:
                continue
            for k in range(n2 + 1):
                ck = math.comb(n2, k) * sr**k * (-st) ** (n2 - k)
                if ck == 0.0:
                    continue
                m1 = j + k
                m2 = n1 + n2 - m1
                new = list(occ)
                new[mode1], new[mode2] = m1, m2
                key = tuple(new)
                val = pref * cj * ck * math.sqrt(math.factorial(m1) * math.factorial(m2))
                out[key] = out.get(key, 0j) + val
    return FockState(state.mode_count, out, state.truncation)


@dataclass
class Branch:
    record: tuple
    weight: float
    state: FockState


@dataclass
class ConditionalEnsemble:
    """Mixture of normalized pure branches.

    Weights are joint probabilities, so they sum to the probability of every
    conditioning event applied so far (1 before any conditioning).
    """

    branches: list[Branch] = field(default_factory=list)

    @classmethod
    def pure(cls, state: FockState, weight: float = 1.0) -> ConditionalEnsemble:
        return cls([Branch((), weight, state.normalized())])

    @property
    def mode_count(self) -> int:
        return self.branches[0].state.mode_count

    @property
    def total_weight(self) -> float:
        return sum(b.weight for b in self.branches)

    def conditional(self) -> ConditionalEnsemble:
        tot = self.total_weight
        if tot <= 0.0:
            raise ValueError("conditioning on a zero-probability event")
        return ConditionalEnsemble([Branch(b.record, b.weight / tot, b.state) for b in self.branches])

    def map(self, fn) -> ConditionalEnsemble:
        return ConditionalEnsemble([Branch(b.record, b.weight, fn(b.state)) for b in self.branches])

    def fidelity(self, target: FockState) -> float:
        """sum_i w_i |<target|psi_i>|^2 / sum_i w_i."""
        tn = target.normalized()
        tot = self.total_weight
        return sum(b.weight * abs(tn.inner(b.state)) ** 2 for b in self.branches) / tot

    def photon_number_distribution(self) -> dict[int, float]:
        dist: dict[int, float] = {}
        for b in self.branches:
            for occ, amp in b.state.amplitudes.items():
                n = sum(occ)
                dist[n] = dist.get(n, 0.0) + b.weight * abs(amp) ** 2
        return dist

    def density_matrix(self) -> tuple[list[tuple[int, ...]], np.ndarray]:
        basis = sorted({occ for b in self.branches for occ in b.state.amplitudes})
        index = {occ: i for i, occ in enumerate(basis)}
        rho = np.zeros((len(basis), len(basis)), dtype=complex)
        for b in self.branches:
            vec = np.zeros(len(basis), dtype=complex)
            for occ, amp in b.state.amplitudes.items():
                vec[index[occ]] = amp
            rho += b.weight * np.outer(vec, vec.conj())
        return basis, rho

    def compress(self, rtol: float = 1e-14) -> ConditionalEnsemble:
        """Replace the branches by the eigen-decomposition of the density operator."""
        if len(self.branches) <= 1:
            return self
        trunc = max(b.state.truncation for b in self.branches)
        basis, rho = self.density_matrix()
        vals, vecs = np.linalg.eigh(rho)
        cutoff = rtol * max(vals.max(), 0.0)
        out = []
        for i in range(len(vals) - 1, -1, -1):
            if vals[i] <= cutoff:
                continue
            amps = {occ: vecs[j, i] for j, occ in enumerate(basis) if abs(vecs[j, i]) > AMP_EPS}
            state = FockState(len(basis[0]), amps, trunc).normalized()
            out.append(Branch(("eig", len(out)), float(vals[i]), state))
        return ConditionalEnsemble(out)


def _as_ensemble(obj: FockState | ConditionalEnsemble) -> ConditionalEnsemble:
    return obj if isinstance(obj, ConditionalEnsemble) else ConditionalEnsemble.pure(obj)


def tensor_ensembles(left: ConditionalEnsemble, right: ConditionalEnsemble) -> ConditionalEnsemble:
    out = []
    for b1 in left.branches:
        for b2 in right.branches:
            out.append(Branch((b1.record, b2.record), b1.weight * b2.weight, tensor(b1.state, b2.state)))
    return ConditionalEnsemble(out)


def apply_loss(
    state_or_ensemble: FockState | ConditionalEnsemble, mode: int, eta: float
) -> ConditionalEnsemble:
    """Transmit ``mode`` with efficiency ``eta``; branches are labelled by lost photon count.

    Kraus operators K_k |n> = sqrt(C(n, k) eta^(n-k) (1-eta)^k) |n-k>.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"efficiency {eta} outside [0, 1]")
    ens = _as_ensemble(state_or_ensemble)
    _check_mode(ens.branches[0].state, mode)
    if eta == 1.0:
        return ens
    out = []
    for b in ens.branches:
        by_loss: dict[int, dict[tuple[int, ...], complex]] = {}
        for occ, amp in b.state.amplitudes.items():
            n = occ[mode]
            for k in range(n + 1):
                kraus = math.sqrt(math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k)
                if kraus == 0.0:
                    continue
                new = list(occ)
                new[mode] = n - k
                key = tuple(new)
                slot = by_loss.setdefault(k, {})
                slot[key] = slot.get(key, 0j) + amp * kraus
        for k, amps in sorted(by_loss.items()):
            st = FockState(b.state.mode_count, amps, b.state.truncation)
            w = st.norm_sq()
            if w > AMP_EPS**2:
                out.append(Branch(b.record + (("lost", mode, k),), b.weight * w, st.normalized()))
    return ConditionalEnsemble(out)


def _project(ens: ConditionalEnsemble, keep, label) -> ConditionalEnsemble:
    out = []
    for b in ens.branches:
        amps = {occ: amp for occ, amp in b.state.amplitudes.items() if keep(occ)}
        if not amps:
            continue
        st = FockState(b.state.mode_count, amps, b.state.truncation)
        w = st.norm_sq()
        if w > AMP_EPS**2:
            out.append(Branch(b.record + (label,), b.weight * w, st.normalized()))
    return ConditionalEnsemble(out)


def measure_number(
    ensemble: FockState | ConditionalEnsemble, mode: int, outcome: int
) -> tuple[float, ConditionalEnsemble]:
    """Number-resolving detection of ``mode`` with result ``outcome``.

    Returns the conditional probability of the outcome and the projected
    ensemble (weights are joint probabilities).
    """
    if outcome < 0:
        raise ValueError("photon number outcome must be non-negative")
    ens = _as_ensemble(ensemble)
    _check_mode(ens.branches[0].state, mode)
    before = ens.total_weight
    after = _project(ens, lambda occ: occ[mode] == outcome, ("n", mode, outcome))
    return after.total_weight / before, after


def measure_click(
    ensemble: FockState | ConditionalEnsemble, mode: int, clicked: bool
) -> tuple[float, ConditionalEnsemble]:
    """Threshold (non-resolving) detection of ``mode``."""
    ens = _as_ensemble(ensemble)
    _check_mode(ens.branches[0].state, mode)
    before = ens.total_weight
    after = _project(ens, lambda occ: (occ[mode] > 0) == clicked, ("click", mode, clicked))
    return after.total_weight / before, after


def measure_total(
    ensemble: ConditionalEnsemble, modes: Iterable[int], outcome: int
) -> tuple[float, ConditionalEnsemble]:
    """Project onto a fixed total photon number in a group of modes."""
    modes = tuple(modes)
    before = ensemble.total_weight
    after = _project(ensemble, lambda occ: sum(occ[m] for m in modes) == outcome, ("sum", modes, outcome))
    return after.total_weight / before, after


def select_modes(ensemble: ConditionalEnsemble, modes: Sequence[int]) -> ConditionalEnsemble:
    """Drop modes that are in a definite number state in every branch."""
    return ensemble.map(lambda s: s.select_modes(modes))


def trace_out(ensemble: ConditionalEnsemble, keep: Sequence[int]) -> ConditionalEnsemble:
    """Partial trace over all modes not in ``keep``.

    Each branch splits by the occupation of the discarded modes; the pieces are
    orthogonal, so they become separate branches.
    """
    drop = [m for m in range(ensemble.mode_count) if m not in keep]
    out = []
    for b in ensemble.branches:
        parts: dict[tuple[int, ...], dict[tuple[int, ...], complex]] = {}
        for occ, amp in b.state.amplitudes.items():
            parts.setdefault(tuple(occ[m] for m in drop), {})[tuple(occ[m] for m in keep)] = amp
        for env, amps in sorted(parts.items()):
            st = FockState(len(keep), amps, b.state.truncation)
            w = st.norm_sq()
            if w > AMP_EPS**2:
                out.append(Branch(b.record + (("traced", env),), b.weight * w, st.normalized()))
    return ConditionalEnsemble(out)


def state_from_terms(terms: Mapping[tuple[int, ...], complex], truncation: int | None = None) -> FockState:
    """Normalized state from a {occupation: amplitude} mapping."""
    mode_count = len(next(iter(terms)))
    trunc = max(sum(o) for o in terms) if truncation is None else truncation
    return FockState(mode_count, dict(terms), trunc).normalized()
