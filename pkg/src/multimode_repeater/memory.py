"""CRIB photon-echo memory: efficiency, bin-averaged efficiency and its optimization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ContractError, DomainError

BANDWIDTH_RULE = 6.0  # gamma * dt
X_BRACKET = (0.0, 2.0 * math.pi)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def sinc(u: float) -> float:
    """Unnormalized sinc, sin(u)/u with sinc(0) = 1."""
    return 1.0 if u == 0.0 else math.sin(u) / u


@dataclass(frozen=True)
class MemoryParams:
    optical_depth: float
    initial_width_hz: float
    broadened_width_hz: float
    bin_separation_s: float
    mode_count: int = 1

    def __post_init__(self):
        if not self.optical_depth > 0:
            raise DomainError("optical depth must be positive")
        if not 0 < self.initial_width_hz <= self.broadened_width_hz:
            raise DomainError("need 0 < gamma0 <= gamma")
        if self.mode_count < 1:
            raise DomainError("mode_count must be at least 1")
        if self.bin_separation_s < 0:
            raise DomainError("bin separation must be non-negative")

    @classmethod
    def standard(cls, optical_depth: float, initial_width_hz: float, broadened_width_hz: float, mode_count: int = 1):
        """Bin separation from the gamma * dt = 6 rule."""
        return cls(optical_depth, initial_width_hz, broadened_width_hz, BANDWIDTH_RULE / broadened_width_hz, mode_count)

    @property
    def x(self) -> float:
        return self.initial_width_hz * self.mode_count * self.bin_separation_s

    @property
    def y(self) -> float:
        return self.optical_depth / self.mode_count

    @property
    def absorption(self) -> float:
        return self.optical_depth * self.initial_width_hz / self.broadened_width_hz


@dataclass(frozen=True)
class MaterialSpec:
    name: str
    homogeneous_linewidth_hz: float | None = None
    inhomogeneous_linewidth_hz: float | None = None
    hyperfine_splitting_hz: float | None = None
    absorption_per_cm: float | None = None
    reference_wavelength_nm: float | None = None

    def __post_init__(self):
        for name in (
            "homogeneous_linewidth_hz",
            "inhomogeneous_linewidth_hz",
            "hyperfine_splitting_hz",
            "absorption_per_cm",
            "reference_wavelength_nm",
        ):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{self.name}: {name} must be positive")


# hyperfine splittings for Nd and Er are order-of-magnitude picks ("hundreds of MHz")
MATERIALS = {
    "pr_yso": MaterialSpec("Pr:Y2SiO5", hyperfine_splitting_hz=10e6, reference_wavelength_nm=606.0),
    "nd_yvo4": MaterialSpec(
        "Nd:YVO4",
        homogeneous_linewidth_hz=10e3,
        hyperfine_splitting_hz=500e6,
        absorption_per_cm=100.0,
        reference_wavelength_nm=879.0,
    ),
    "er_linbo3": MaterialSpec(
        "Er:LiNbO3",
        homogeneous_linewidth_hz=2e3,
        inhomogeneous_linewidth_hz=250e9,
        hyperfine_splitting_hz=500e6,
        reference_wavelength_nm=1532.0,
    ),
}


def efficiency_instant(params: MemoryParams, t: float) -> float:
    """(1 - exp(-alpha0 L gamma0/gamma))^2 sinc^2(gamma0 t)."""
    if t < 0:
        raise DomainError("storage time must be non-negative")
    pref = -math.expm1(-params.absorption)
    return pref**2 * sinc(params.initial_width_hz * t) ** 2


def _sinc2_integral(x: float) -> float:
    val, _ = quad(lambda u: sinc(u) ** 2, 0.0, x, epsabs=1e-8, epsrel=1e-10, limit=200)
    return val


def average_efficiency(x: float, y: float) -> float:
    """Efficiency averaged over t in [0, N dt] in the reduced variables.

    x = gamma0 N dt and y = alpha0 L / N; gamma dt = 6 turns the absorption
    exponent into x y / 6.
    """
    if not x > 0 or not y > 0:
        raise DomainError("x and y must be positive")
    pref = -math.expm1(-x * y / BANDWIDTH_RULE)
    return pref**2 * _sinc2_integral(x) / x


def average_efficiency_discrete(x: float, y: float, bins: int) -> float:
    """Same average taken over ``bins`` equally spaced storage times (midpoints)."""
    if bins < 1:
        raise DomainError("need at least one bin")
    pref = -math.expm1(-x * y / BANDWIDTH_RULE)
    u = (np.arange(bins) + 0.5) * x / bins
    return float(pref**2 * np.mean(np.sinc(u / np.pi) ** 2))


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-4) -> float:
    """Maximizer of a unimodal ``f`` on [a, b] to within ``tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def optimize_x(y: float, scan_points: int = 64, tol: float = 1e-4) -> tuple[float, float]:
    """Best x = gamma0 N dt for a given y, with the resulting average efficiency.

    A coarse scan over (0, 2 pi] locates the peak, then golden-section search
    refines it inside the neighbouring grid cells.
    """
    if not y > 0:
        raise DomainError("y must be positive")
    lo, hi = X_BRACKET
    grid = np.linspace(lo, hi, scan_points + 1)[1:]
    vals = np.array([average_efficiency(x, y) for x in grid])
    if vals.max() - vals.min() <= 1e-15:
        # flat objective: widest maximizing x
        return float(grid[-1]), float(vals[-1])
    k = int(np.argmax(vals))
    a = grid[k - 1] if k > 0 else grid[0] * 1e-3
    b = grid[min(k + 1, scan_points - 1)]
    x_star = golden_section_max(lambda x: average_efficiency(x, y), a, b, tol)
    return float(x_star), float(average_efficiency(x_star, y))


@dataclass
class EfficiencyCurve:
    y: list[float] = field(default_factory=list)
    x_star: list[float] = field(default_factory=list)
    eta_star: list[float] = field(default_factory=list)

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.y, self.x_star, self.eta_star))


def efficiency_curve(y_values: Sequence[float]) -> EfficiencyCurve:
    ys = list(y_values)
    if any(v <= 0 for v in ys):
        raise DomainError("y values must be positive")
    if any(b < a for a, b in zip(ys, ys[1:])):
        raise DomainError("y values must be ascending")
    curve = EfficiencyCurve()
    for y in ys:
        x, eta = optimize_x(y)
        curve.y.append(y)
        curve.x_star.append(x)
        curve.eta_star.append(eta)
    return curve


def required_per_mode_depth(eta_target: float, tol: float = 0.5, y_max: float = 1e6) -> float:
    """Smallest y with optimized average efficiency >= eta_target, by bisection."""
    if not 0 < eta_target < 1:
        raise ContractError(f"efficiency target {eta_target} is not achievable")
    if optimize_x(y_max)[1] < eta_target:
        raise ContractError(f"efficiency target {eta_target} exceeds what y <= {y_max:g} reaches")
    lo, hi = 0.0, 1.0
    while optimize_x(hi)[1] < eta_target:
        lo, hi = hi, hi * 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if optimize_x(mid)[1] >= eta_target:
            hi = mid
        else:
            lo = mid
    return hi


def required_optical_depth(eta_target: float, N: int) -> float:
    if N < 1:
        raise DomainError("N must be at least 1")
    return N * required_per_mode_depth(eta_target)


def mode_capacity(L0_km: float, c: float, gamma_hz: float) -> int:
    """Time bins that fit in one clock interval: floor(L0 gamma / (6 c))."""
    if L0_km <= 0 or c <= 0 or gamma_hz < 0:
        raise DomainError("lengths and speed must be positive, gamma non-negative")
    # guard against 62499.9999 from float rounding
    return int(math.floor(L0_km * 1e3 * gamma_hz / (BANDWIDTH_RULE * c) + 1e-9))


def bin_separation(gamma_hz: float) -> float:
    return BANDWIDTH_RULE / gamma_hz


@dataclass
class ConstraintCheck:
    name: str
    passed: bool | None  # None: not checkable with the given data
    margin: float = float("nan")
    detail: str = ""


@dataclass
class FeasibilityReport:
    material: str
    checks: list[ConstraintCheck]
    required_optical_depth: float
    optical_depth_per_pass: float
    passes_needed: int | None
    frequency_channels: int | None

    @property
    def feasible(self) -> bool:
        return all(c.passed is True for c in self.checks)

    def rows(self) -> list[tuple[str, str, float, str]]:
        status = {True: "pass", False: "fail", None: "unknown"}
        return [(c.name, status[c.passed], c.margin, c.detail) for c in self.checks]


def material_feasibility(
    material: MaterialSpec,
    params: MemoryParams,
    passes: int = 1,
    crystal_length_cm: float = 1.0,
    L0_km: float | None = None,
    c: float = 2e8,
) -> FeasibilityReport:
    """Check a design point against a host material.

    Constraints: gamma0 > 2 gamma_h, gamma below the hyperfine splitting,
    N within the mode capacity of one clock interval (needs ``L0_km``), and the
    optical depth reachable with ``passes`` passes through the crystal.
    Missing material data turn a check into 'unknown' rather than a failure.
    """
    checks = []
    gh = material.homogeneous_linewidth_hz
    if gh is None:
        checks.append(ConstraintCheck("gamma0_gt_2gamma_h", None, detail="homogeneous linewidth unknown"))
    else:
        m = params.initial_width_hz - 2.0 * gh
        checks.append(ConstraintCheck("gamma0_gt_2gamma_h", m > 0, m, f"gamma0/(2 gamma_h) = {params.initial_width_hz / (2 * gh):.4g}"))
    hf = material.hyperfine_splitting_hz
    if hf is None:
        checks.append(ConstraintCheck("gamma_lt_hyperfine", None, detail="hyperfine splitting unknown"))
    else:
        m = hf - params.broadened_width_hz
        checks.append(ConstraintCheck("gamma_lt_hyperfine", m > 0, m))
    if L0_km is None:
        checks.append(ConstraintCheck("modes_within_capacity", None, detail="link length not given"))
    else:
        cap = mode_capacity(L0_km, c, params.broadened_width_hz)
        checks.append(ConstraintCheck("modes_within_capacity", params.mode_count <= cap, cap - params.mode_count, f"capacity {cap}"))

    alpha = material.absorption_per_cm
    per_pass = float("nan")
    needed = None
    if alpha is None:
        checks.append(ConstraintCheck("optical_depth", None, detail="absorption coefficient unknown"))
    else:
        per_pass = alpha * crystal_length_cm
        needed = math.ceil(params.optical_depth / per_pass - 1e-12)
        reach = passes * per_pass
        checks.append(ConstraintCheck("optical_depth", reach >= params.optical_depth, reach - params.optical_depth, f"{needed} passes needed"))

    channels = None
    if material.inhomogeneous_linewidth_hz is not None:
        channels = int(material.inhomogeneous_linewidth_hz // params.broadened_width_hz)
    return FeasibilityReport(material.name, checks, params.optical_depth, per_pass, needed, channels)
