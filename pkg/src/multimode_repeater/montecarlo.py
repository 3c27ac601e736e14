"""Monte Carlo of the nested repeater timeline.

Trials are generated in fixed blocks of ``BLOCK_SIZE``.  Block ``b`` draws from
a Philox stream keyed by (seed, b), so the trial stream depends only on the
seed and never on how blocks are spread over workers.  Inside a block the
nested protocol is sampled level by level with numpy:

* an elementary link waits a geometric number of clock slots L0/c;
* a level-k connection waits for both children, pays a herald latency
  2^k L0/c, and succeeds with P_k; on failure both children are regenerated;
* the final projection combines two independent chains and succeeds with P_pr.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .rates import LinkProbabilities, RepeaterParams, link_probabilities, total_time_general, total_time_n2

BLOCK_SIZE = 1024


@dataclass(frozen=True)
class SimConfig:
    params: RepeaterParams
    link_probs: LinkProbabilities
    same_interval_mode: bool = False
    pump_diffusion: float = 0.0  # rad^2/s for each pump phase walk
    fiber_diffusion: float = 0.0  # rad^2/s for each fiber phase walk
    trials: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trial count must be at least 1")
        if self.pump_diffusion < 0 or self.fiber_diffusion < 0:
            raise DomainError("diffusion coefficients must be non-negative")
        if len(self.link_probs.swap_probabilities) != self.params.nesting_level:
            raise DomainError("one swap probability per nesting level is required")

    @classmethod
    def from_params(cls, params: RepeaterParams, probabilities=None, **kwargs) -> SimConfig:
        """Build a config whose swap/projection probabilities come from the oracle by default."""
        if probabilities is None:
            from .oracle import oracle_link_probabilities

            probabilities = oracle_link_probabilities
        swaps, p_pr = probabilities(params.nesting_level, params.eta_combined)
        return cls(params, link_probabilities(params, swaps, p_pr), **kwargs)

    @property
    def slot_s(self) -> float:
        return self.params.clock_interval_s

    @property
    def total_diffusion(self) -> float:
        return 2.0 * (self.pump_diffusion + self.fiber_diffusion)

    def with_(self, **changes) -> SimConfig:
        return replace(self, **changes)


@dataclass
class TrialResult:
    total_time_s: float
    swap_attempts: tuple[int, ...]
    gap_s: float
    phase_error_rad: float


@dataclass
class TrialBatch:
    total_time_s: np.ndarray
    swap_attempts: np.ndarray  # (trials, n)
    gap_s: np.ndarray
    phase_error_rad: np.ndarray

    def __len__(self) -> int:
        return len(self.total_time_s)

    def __getitem__(self, i: int) -> TrialResult:
        return TrialResult(
            float(self.total_time_s[i]),
            tuple(int(v) for v in self.swap_attempts[i]),
            float(self.gap_s[i]),
            float(self.phase_error_rad[i]),
        )

    def head(self, k: int) -> TrialBatch:
        return TrialBatch(self.total_time_s[:k], self.swap_attempts[:k], self.gap_s[:k], self.phase_error_rad[:k])

    @classmethod
    def concat(cls, parts: list[TrialBatch]) -> TrialBatch:
        return cls(
            np.concatenate([p.total_time_s for p in parts]),
            np.concatenate([p.swap_attempts for p in parts]),
            np.concatenate([p.gap_s for p in parts]),
            np.concatenate([p.phase_error_rad for p in parts]),
        )


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def stream_rng(seed: int, label: str) -> np.random.Generator:
    """Auxiliary stream keyed by a label, disjoint from the trial blocks."""
    key = (zlib.crc32(label.encode()), 1)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _geometric(rng: np.random.Generator, p: float, size) -> np.ndarray:
    if p >= 1.0:
        return np.ones(size, dtype=np.int64)
    return rng.geometric(p, size).astype(np.int64)


def sample_first_bin(rng: np.random.Generator, p_bin: float, N: int, size) -> np.ndarray:
    """Index (1..N) of the first successful bin, given at least one success in the slot."""
    if N == 1 or p_bin >= 1.0:
        return np.ones(size, dtype=np.int64)
    if p_bin <= 0.0:
        return rng.integers(1, N + 1, size)
    u = rng.random(size)
    # inverse CDF of a geometric law truncated to [1, N]
    mass = -np.expm1(N * np.log1p(-p_bin))
    k = np.floor(np.log1p(-u * mass) / np.log1p(-p_bin)).astype(np.int64) + 1
    return np.clip(k, 1, N)


def simulate_link(config: SimConfig, rng: np.random.Generator, size=None):
    """(slots waited, first successful bin index) for independent elementary links."""
    lp = config.link_probs
    slots = _geometric(rng, lp.p0_multimode, size)
    bins = sample_first_bin(rng, lp.p0_single, config.params.modes_per_interval, size)
    return slots, bins


def _level(config: SimConfig, rng: np.random.Generator, k: int, count: int):
    """Completion times of ``count`` independent level-k links and their swap attempts per level."""
    n = config.params.nesting_level
    if k == 0:
        slots = _geometric(rng, config.link_probs.p0_multimode, count)
        return slots * config.slot_s, np.zeros((count, n), dtype=np.int64)
    attempts = _geometric(rng, config.link_probs.swap_probabilities[k - 1], count)
    total = int(attempts.sum())
    child_t, child_a = _level(config, rng, k - 1, 2 * total)
    latency = 2**k * config.slot_s
    attempt_time = child_t.reshape(total, 2).max(axis=1) + latency
    owner = np.repeat(np.arange(count), attempts)
    times = np.bincount(owner, weights=attempt_time, minlength=count)
    counts = np.zeros((count, n), dtype=np.int64)
    child_sum = child_a.reshape(total, 2, n).sum(axis=1)
    np.add.at(counts, owner, child_sum)
    counts[:, k - 1] += attempts
    return times, counts


def simulate_repeater(config: SimConfig, rng: np.random.Generator, size: int = 1) -> TrialBatch:
    """``size`` independent end-to-end runs drawn from ``rng``."""
    n = config.params.nesting_level
    if n < 0:
        raise DomainError("nesting level must be non-negative")
    attempts = _geometric(rng, config.link_probs.projection_probability, size)
    total = int(attempts.sum())
    chain_t, chain_a = _level(config, rng, n, 2 * total)
    attempt_time = chain_t.reshape(total, 2).max(axis=1)
    owner = np.repeat(np.arange(size), attempts)
    times = np.bincount(owner, weights=attempt_time, minlength=size)
    counts = np.zeros((size, n), dtype=np.int64)
    np.add.at(counts, owner, chain_a.reshape(total, 2, n).sum(axis=1))
    gap, _ = _pair_gaps(config, rng, size)
    dtheta = _phase_errors(config, rng, gap)
    return TrialBatch(times, counts, gap, dtheta)


def _pair_gaps(config: SimConfig, rng: np.random.Generator, size: int):
    """Creation-time gap |t2 - t1| of the two links on one segment and the time to hold both."""
    lp = config.link_probs
    N = config.params.modes_per_interval
    dt = config.params.bin_separation_s
    if config.same_interval_mode:
        slots = _geometric(rng, lp.p0_multimode**2, size)
        b1 = sample_first_bin(rng, lp.p0_single, N, size)
        b2 = sample_first_bin(rng, lp.p0_single, N, size)
        return np.abs(b2 - b1) * dt, slots * config.slot_s
    s1, b1 = simulate_link(config, rng, size)
    s2, b2 = simulate_link(config, rng, size)
    t1 = (s1 - 1) * config.slot_s + b1 * dt
    t2 = (s2 - 1) * config.slot_s + b2 * dt
    return np.abs(t2 - t1), np.maximum(s1, s2) * config.slot_s


def _phase_errors(config: SimConfig, rng: np.random.Generator, gap: np.ndarray) -> np.ndarray:
    """Four independent Wiener phases accumulate variance D_total * gap."""
    return rng.standard_normal(gap.shape) * np.sqrt(config.total_diffusion * gap)


def _run_block(config: SimConfig, block: int) -> TrialBatch:
    return simulate_repeater(config, block_rng(config.seed, block), BLOCK_SIZE)


def run_trials(config: SimConfig, workers: int = 1) -> TrialBatch:
    """Trial stream for ``config``; identical for any ``workers``."""
    blocks = range(math.ceil(config.trials / BLOCK_SIZE))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _run_block(config, b), blocks))
    else:
        parts = [_run_block(config, b) for b in blocks]
    return TrialBatch.concat(parts).head(config.trials)


@dataclass
class PhaseStats:
    mean_gap_s: float
    visibility: float
    mean_pair_time_s: float
    gap_stderr_s: float
    visibility_stderr: float


def phase_error_stats(config: SimConfig, rng: np.random.Generator, samples: int | None = None) -> PhaseStats:
    """Gap between the two link creations on one segment and the surviving visibility E[cos dtheta]."""
    size = samples or config.trials
    gap, pair_time = _pair_gaps(config, rng, size)
    cos = np.cos(_phase_errors(config, rng, gap))
    return PhaseStats(
        float(gap.mean()),
        float(cos.mean()),
        float(pair_time.mean()),
        float(gap.std(ddof=1) / math.sqrt(size)) if size > 1 else 0.0,
        float(cos.std(ddof=1) / math.sqrt(size)) if size > 1 else 0.0,
    )


def expected_max_geometric(p: float) -> float:
    """E[max(X, Y)] for iid geometric X, Y on {1, 2, ...}."""
    return 2.0 / p - 1.0 / (2.0 * p - p * p)


def waiting_factor_check(P0: float, trials: int, rng: np.random.Generator) -> float:
    """Empirical E[max of two links] / E[one link]."""
    if not 0.0 < P0 <= 1.0:
        raise DomainError("P0 must lie in (0, 1]")
    x = _geometric(rng, P0, trials)
    y = _geometric(rng, P0, trials)
    return float(np.maximum(x, y).mean() / (0.5 * (x.mean() + y.mean())))


def mean_with_ci(values: np.ndarray, z: float = 1.96) -> tuple[float, float]:
    m = float(np.mean(values))
    half = z * float(np.std(values, ddof=1)) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    return m, half


@dataclass
class MCReport:
    rows: list[tuple[str, float, float, float]] = field(default_factory=list)  # name, value, ci_low, ci_high

    def add(self, name: str, value: float, half: float = 0.0) -> None:
        self.rows.append((name, value, value - half, value + half))

    def value(self, name: str) -> float:
        for row in self.rows:
            if row[0] == name:
                return row[1]
        raise KeyError(name)


def compare_to_analytic(config: SimConfig, trials: int | None = None, speedup_modes=(1, 10, 100), workers: int = 1) -> MCReport:
    """Simulated vs closed-form mean total time plus the N-speedup T(N=1)/T(N) at matched seeds."""
    cfg = config.with_(trials=trials) if trials else config
    batch = run_trials(cfg, workers)
    rep = MCReport()
    m, h = mean_with_ci(batch.total_time_s)
    rep.add("mc_mean_total_time_s", m, h)
    rep.add("analytic_general_s", total_time_general(cfg.params, cfg.link_probs))
    if cfg.params.nesting_level == 2:
        rep.add("analytic_n2_s", total_time_n2(cfg.params))
    for lvl in range(cfg.params.nesting_level):
        mm, hh = mean_with_ci(batch.swap_attempts[:, lvl])
        rep.add(f"mc_swap_attempts_level{lvl + 1}", mm, hh)
    g, gh = mean_with_ci(batch.gap_s)
    rep.add("mc_mean_gap_s", g, gh)
    v, vh = mean_with_ci(np.cos(batch.phase_error_rad))
    rep.add("mc_visibility", v, vh)
    if speedup_modes:
        base = None
        for N in speedup_modes:
            t = mean_total_time(with_modes(cfg, N), workers)
            base = t if base is None else base
            rep.add(f"speedup_N{N}", base / t)
    return rep


def with_modes(config: SimConfig, N: int) -> SimConfig:
    """Same config with N modes per interval; P0 is recomputed, swap/projection kept."""
    params = config.params.with_(modes_per_interval=N)
    lp = link_probabilities(params, config.link_probs.swap_probabilities, config.link_probs.projection_probability)
    return config.with_(params=params, link_probs=lp)


def mean_total_time(config: SimConfig, workers: int = 1) -> float:
    return float(run_trials(config, workers).total_time_s.mean())
