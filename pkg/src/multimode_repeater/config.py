"""Flat ``section.key = value`` configuration, presets and run manifests."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .errors import DomainError
from .rates import RepeaterParams

# key -> (type, default, unit)
SCHEMA: dict[str, tuple[str, Any, str]] = {
    "repeater.total_distance_km": ("float", 1000.0, "km"),
    "repeater.nesting_level": ("int", 2, ""),
    "repeater.attenuation_length_km": ("float", 22.0, "km"),
    "repeater.fiber_speed_m_per_s": ("float", 2.0e8, "m/s"),
    "repeater.pair_probability": ("float", 0.009, ""),
    "repeater.detector_efficiency": ("float", 0.9, ""),
    "repeater.memory_efficiency_avg": ("float", 0.9, ""),
    "repeater.modes_per_interval": ("int", 1, ""),
    "repeater.bin_separation_s": ("float", 20e-9, "s"),
    "repeater.target_fidelity": ("float", 0.0, ""),  # > 0: pair probability from the fidelity inversion
    "repeater.n_candidates": ("ints", [0, 1, 2, 3, 4], ""),
    "memory.y_grid": ("floats", [10.0, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0, 200.0], ""),
    "memory.eta_target": ("float", 0.9, ""),
    "memory.modes": ("ints", [100, 400, 1000], ""),
    "memory.materials": ("strs", [], ""),
    "memory.initial_width_hz": ("float", 100e3, "Hz"),
    "memory.broadened_width_hz": ("float", 300e6, "Hz"),
    "memory.design_modes": ("int", 400, ""),
    "memory.passes": ("int", 1, ""),
    "memory.crystal_length_cm": ("float", 1.0, "cm"),
    "memory.link_length_km": ("float", 250.0, "km"),
    "oracle.eta_grid": ("floats", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0], ""),
    "oracle.slope_eta": ("floats", [0.81, 1.0], ""),
    "oracle.truncation": ("int", 4, ""),
    "oracle.slope_check": ("bool", True, ""),
    "oracle.slope_nesting_level": ("int", 2, ""),
    "oracle.p_grid": ("floats", [2e-4, 5e-4, 1e-3], ""),
    "oracle.consistency_eta": ("floats", [0.7, 0.75, 0.8, 0.85, 0.9, 0.95], ""),
    "sim.trials": ("int", 20000, ""),
    "sim.seed": ("int", 0, ""),
    "sim.same_interval_mode": ("bool", False, ""),
    "sim.pump_diffusion": ("float", 0.0, "rad^2/s"),
    "sim.fiber_diffusion": ("float", 0.0, "rad^2/s"),
    "sim.waiting_p0": ("float", 1e-3, ""),
    "sim.waiting_trials": ("int", 1000000, ""),
    "sim.speedup_modes": ("ints", [1, 10, 100], ""),
    "sim.gap_modes": ("int", 1000, ""),
    "sim.gap_samples": ("int", 200000, ""),
    "sweep.parameters": ("strs", ["repeater.memory_efficiency_avg", "repeater.detector_efficiency"], ""),
    "sweep.values": ("floats", [0.9, 0.95], ""),
}

CHECK_PREFIX = "check."


class ConfigError(ValueError):
    pass


def _parse_value(kind: str, text: str):
    text = text.strip()
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if kind == "str":
            return text
        items = [t.strip() for t in text.split(",") if t.strip()]
        if kind == "floats":
            return [float(t) for t in items]
        if kind == "ints":
            return [int(t) for t in items]
        if kind == "strs":
            return items
    except ValueError:
        raise ConfigError(f"cannot read {text!r} as {kind}") from None
    raise ConfigError(f"unknown kind {kind}")


def _format_value(kind: str, value) -> str:
    if kind == "float":
        return repr(float(value))
    if kind == "int":
        return str(int(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "str":
        return str(value)
    if kind == "floats":
        return ",".join(repr(float(v)) for v in value)
    if kind == "ints":
        return ",".join(str(int(v)) for v in value)
    if kind == "strs":
        return ",".join(value)
    raise ConfigError(f"unknown kind {kind}")


def _kind(key: str) -> str:
    if key.startswith(CHECK_PREFIX):
        return "floats"
    if key not in SCHEMA:
        raise ConfigError(f"unknown configuration key {key!r}")
    return SCHEMA[key][0]


def parse_config(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        val = _parse_value(_kind(key), value)
        if key.startswith(CHECK_PREFIX) and len(val) != 2:
            raise ConfigError(f"line {lineno}: {key} needs 'low,high'")
        out[key] = val
    return out


def serialize_config(cfg: dict[str, Any]) -> str:
    return "".join(f"{key} = {_format_value(_kind(key), cfg[key])}\n" for key in sorted(cfg))


def resolve(*layers: dict[str, Any]) -> dict[str, Any]:
    """Defaults overlaid by each layer in turn."""
    cfg = {key: spec[1] for key, spec in SCHEMA.items()}
    for layer in layers:
        for key, value in layer.items():
            _kind(key)
            cfg[key] = value
    return cfg


def repeater_params(cfg: dict[str, Any]) -> RepeaterParams:
    from .rates import pair_prob_for_fidelity

    try:
        params = RepeaterParams(
            total_distance_km=cfg["repeater.total_distance_km"],
            nesting_level=cfg["repeater.nesting_level"],
            attenuation_length_km=cfg["repeater.attenuation_length_km"],
            fiber_speed_m_per_s=cfg["repeater.fiber_speed_m_per_s"],
            pair_probability=cfg["repeater.pair_probability"],
            detector_efficiency=cfg["repeater.detector_efficiency"],
            memory_efficiency_avg=cfg["repeater.memory_efficiency_avg"],
            modes_per_interval=cfg["repeater.modes_per_interval"],
            bin_separation_s=cfg["repeater.bin_separation_s"],
        )
        if cfg["repeater.target_fidelity"] > 0:
            p = pair_prob_for_fidelity(cfg["repeater.target_fidelity"], params.eta_combined)
            params = params.with_(pair_probability=p)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return params


def _checks(band: dict[str, tuple[float, float]]) -> dict[str, list[float]]:
    return {CHECK_PREFIX + k: [lo, hi] for k, (lo, hi) in band.items()}


def _rel(center: float, tol: float) -> tuple[float, float]:
    return center * (1 - tol), center * (1 + tol)


PRESETS: dict[str, dict[str, Any]] = {
    "paper_1000km_090": {
        "repeater.memory_efficiency_avg": 0.9,
        "repeater.detector_efficiency": 0.9,
        "repeater.pair_probability": 0.009,
        "sim.gap_modes": 1000,
        **_checks(
            {
                "t_tot_n2_times_N": _rel(3400, 0.05),
                "waiting_ratio": (1.49, 1.51),
                "link_slots_z": (-3.0, 3.0),
                "speedup_N10": _rel(10, 0.05),
                "speedup_N100": _rel(100, 0.05),
                "gap_s@same_interval": (10e-6, 40e-6),
                "gap_s@unrestricted": (3.0, 30.0),
                "same_interval_inflation_times_p0": (0.8, 1.2),
            }
        ),
    },
    "paper_1000km_095": {
        "repeater.memory_efficiency_avg": 0.95,
        "repeater.detector_efficiency": 0.95,
        "repeater.target_fidelity": 0.9,
        **_checks({"t_tot_n2_times_N": _rel(800, 0.05)}),
    },
    "paper_sweep": {
        "repeater.target_fidelity": 0.9,
        "sweep.parameters": ["repeater.memory_efficiency_avg", "repeater.detector_efficiency"],
        "sweep.values": [0.9, 0.95],
        **_checks({"row0.t_tot_n2_times_N": _rel(3400, 0.05), "row1.t_tot_n2_times_N": _rel(800, 0.05)}),
    },
    "oracle_checks": {
        "oracle.truncation": 4,
        "oracle.slope_check": True,
        **_checks(
            {
                "link_state_fidelity": (1 - 1e-10, 1 + 1e-10),
                "swap_state_fidelity": (1 - 1e-10, 1 + 1e-10),
                "projection_fidelity": (1 - 1e-10, 1 + 1e-10),
                "p_projection@1": (0.5 - 1e-12, 0.5 + 1e-12),
                **{f"p_swap_error@{e / 10:g}": (0.0, 1e-12) for e in range(1, 11)},
                **{f"general_over_n2@{e:g}": (0.9, 1.1) for e in (0.7, 0.75, 0.8, 0.85, 0.9, 0.95)},
                "slope@0.81": _rel(56 * (1 - 0.81), 0.10),
                "slope@1": (-1e-6, 1e-6),
            }
        ),
    },
    "fig2": {
        "memory.y_grid": [10.0, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0, 200.0],
        **_checks(
            {
                "eta_star@y30": (0.89, 0.91),
                "x_star@y30": (0.75, 0.85),
                "eta_star@y50": (0.94, 0.96),
                "x_star@y50": (0.55, 0.65),
                "required_optical_depth@N100": (2900, 3100),
                "required_optical_depth@N400": (11600, 12400),
            }
        ),
    },
    "nd_yvo4": {
        "memory.materials": ["nd_yvo4"],
        "memory.modes": [400],
        "memory.design_modes": 400,
        "memory.initial_width_hz": 100e3,
        "memory.broadened_width_hz": 300e6,
        "memory.passes": 122,
        **_checks({"required_optical_depth@N400": (11600, 12400), "feasible@nd_yvo4": (1.0, 1.0)}),
    },
    "er_linbo3": {
        "memory.materials": ["er_linbo3"],
        "memory.initial_width_hz": 100e3,
        "memory.broadened_width_hz": 300e6,
    },
}


@dataclass
class RunManifest:
    subcommand: str
    config: dict[str, Any]
    seed: int
    version: str = __version__
    outputs: list[str] = field(default_factory=list)

    def canonical(self) -> str:
        """Everything that determines the numbers; output paths and thread count excluded."""
        head = f"# subcommand = {self.subcommand}\n# seed = {self.seed}\n# version = {self.version}\n"
        return head + serialize_config(self.config)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def render(self) -> str:
        lines = [self.canonical(), f"# manifest = {self.digest}\n"]
        lines += [f"# output = {o}\n" for o in self.outputs]
        return "".join(lines)
