"""Command-line front end: ``mmrepeater {rates,memory,oracle,simulate,sweep}``.

Exit codes: 0 when every configured check passes, 1 on usage or configuration
errors, 2 when a check misses its tolerance band.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import memory, montecarlo, oracle, rates
from .config import PRESETS, ConfigError, RunManifest, parse_config, repeater_params, resolve
from .errors import ContractError, DomainError
from .reporting import Table, evaluate_checks, unknown_checks, write_outputs

OUT_ENV = "MMREPEATER_OUT"
SUBCOMMANDS = ("rates", "memory", "oracle", "simulate", "sweep")


def _tag(x: float) -> str:
    return f"{x:g}"


def _rate_metrics(params: rates.RepeaterParams, prefix: str = "") -> tuple[list, dict]:
    rep = rates.rate_report(params)
    N = params.modes_per_interval
    metrics = {k: v for k, v in rep.rows()}
    metrics["pair_probability"] = params.pair_probability
    if params.nesting_level == 2:
        metrics["t_tot_n2_times_N"] = rep.t_tot_n2_s * N
    metrics["t_tot_general_times_N"] = rep.t_tot_general_s * N
    return rep, {prefix + k: v for k, v in metrics.items()}


def cmd_rates(cfg: dict) -> tuple[list[Table], dict]:
    params = repeater_params(cfg)
    rep, metrics = _rate_metrics(params)
    main = Table("report", ["quantity", "value"], [[k, v] for k, v in metrics.items()])
    n_star, t_star, table = rates.optimal_nesting(params, cfg["repeater.n_candidates"])
    opt = Table("optimal_n", ["nesting_level", "t_tot_general_s", "optimal"], [[n, t, n == n_star] for n, t in table])
    metrics["optimal_n"] = n_star
    if cfg["repeater.target_fidelity"] > 0:
        n_f, _, table_f = rates.optimal_nesting(
            params, cfg["repeater.n_candidates"], fidelity_target=cfg["repeater.target_fidelity"]
        )
        fixed = Table(
            "optimal_n_fixed_fidelity",
            ["nesting_level", "t_tot_general_s", "optimal"],
            [[n, t, n == n_f] for n, t in table_f],
        )
        metrics["optimal_n_fixed_fidelity"] = n_f
        return [main, opt, fixed], metrics
    return [main, opt], metrics


def cmd_sweep(cfg: dict) -> tuple[list[Table], dict]:
    keys = cfg["sweep.parameters"]
    metrics: dict[str, float] = {}
    rows = []
    header = ["row", "value", "pair_probability", "eta_combined", "t_tot_general_s", "t_tot_n2_s", "t_tot_n2_times_N", "fidelity"]
    for i, value in enumerate(cfg["sweep.values"]):
        layer = dict(cfg)
        for key in keys:
            if key not in cfg or not key.startswith("repeater."):
                raise ConfigError(f"cannot sweep {key!r}")
            layer[key] = type(cfg[key])(value)
        params = repeater_params(layer)
        rep, m = _rate_metrics(params, prefix=f"row{i}.")
        metrics.update(m)
        rows.append(
            [i, value, params.pair_probability, rep.eta_combined, rep.t_tot_general_s, rep.t_tot_n2_s, m.get(f"row{i}.t_tot_n2_times_N", float("nan")), rep.fidelity]
        )
    return [Table("rows", header, rows)], metrics


def cmd_memory(cfg: dict) -> tuple[list[Table], dict]:
    metrics: dict[str, float] = {}
    curve = memory.efficiency_curve(cfg["memory.y_grid"])
    for y, x, e in curve.rows():
        metrics[f"x_star@y{_tag(y)}"] = x
        metrics[f"eta_star@y{_tag(y)}"] = e
    tables = [Table("curve", ["y", "x_star", "eta_star"], [list(r) for r in curve.rows()])]

    target = cfg["memory.eta_target"]
    y_req = memory.required_per_mode_depth(target)
    depth_rows = []
    for N in cfg["memory.modes"]:
        d = N * y_req
        depth_rows.append([target, N, y_req, d])
        metrics[f"required_optical_depth@N{N}"] = d
    tables.append(Table("required_depth", ["eta_target", "modes", "y_required", "optical_depth"], depth_rows))

    gamma = cfg["memory.broadened_width_hz"]
    metrics["mode_capacity"] = memory.mode_capacity(cfg["memory.link_length_km"], cfg["repeater.fiber_speed_m_per_s"], gamma)
    metrics["bin_separation_s"] = memory.bin_separation(gamma)
    feas_rows = []
    design_N = cfg["memory.design_modes"]
    design = memory.MemoryParams.standard(design_N * y_req, cfg["memory.initial_width_hz"], gamma, design_N)
    for key in cfg["memory.materials"]:
        if key not in memory.MATERIALS:
            raise ConfigError(f"unknown material {key!r}; known: {', '.join(memory.MATERIALS)}")
        rep = memory.material_feasibility(
            memory.MATERIALS[key],
            design,
            passes=cfg["memory.passes"],
            crystal_length_cm=cfg["memory.crystal_length_cm"],
            L0_km=cfg["memory.link_length_km"],
            c=cfg["repeater.fiber_speed_m_per_s"],
        )
        for name, status, margin, detail in rep.rows():
            feas_rows.append([key, name, status, margin, detail])
        metrics[f"feasible@{key}"] = float(rep.feasible)
        if rep.passes_needed is not None:
            metrics[f"passes_needed@{key}"] = rep.passes_needed
        if rep.frequency_channels is not None:
            metrics[f"frequency_channels@{key}"] = rep.frequency_channels
    tables.append(Table("feasibility", ["material", "constraint", "status", "margin", "detail"], feas_rows))
    tables.append(Table("summary", ["quantity", "value"], [[k, v] for k, v in metrics.items()]))
    return tables, metrics


def cmd_oracle(cfg: dict) -> tuple[list[Table], dict]:
    if cfg["oracle.truncation"] < 2:
        raise oracle.TruncationError("oracle runs need truncation >= 2")
    if cfg["oracle.slope_check"] and cfg["oracle.truncation"] < 4:
        raise oracle.TruncationError("the double-emission slope needs oracle.truncation >= 4")
    metrics: dict[str, float] = {}
    link = oracle.elementary_link(1e-3, truncation=2)
    metrics["link_state_fidelity"] = link.fidelity()
    p1, swapped = oracle.swap_oracle(1.0)
    metrics["swap_state_fidelity"] = swapped.fidelity(oracle.entangled_pair())
    p_pr, f_pr = oracle.postselect_oracle(1.0)
    metrics["projection_fidelity"] = f_pr
    metrics["p_projection@1"] = p_pr

    swap_rows = []
    for eta in cfg["oracle.eta_grid"]:
        ps, _ = oracle.swap_oracle(eta)
        closed = eta * (2 - eta) / 2
        swap_rows.append([eta, ps, closed, abs(ps - closed)])
        metrics[f"p_swap@{_tag(eta)}"] = ps
        metrics[f"p_swap_error@{_tag(eta)}"] = abs(ps - closed)
    tables = [Table("swap", ["eta", "p_swap", "eta(2-eta)/2", "abs_diff"], swap_rows)]

    cons_rows = []
    base = repeater_params(cfg).with_(nesting_level=2)
    for eta in cfg["oracle.consistency_eta"]:
        e = math.sqrt(eta)
        params = base.with_(memory_efficiency_avg=e, detector_efficiency=e)
        swaps, ppr = oracle.oracle_link_probabilities(2, params.eta_combined)
        lp = rates.link_probabilities(params, swaps, ppr, linear=True)
        t4 = rates.total_time_general(params, lp)
        t6 = rates.total_time_n2(params)
        cons_rows.append([eta, *swaps, ppr, t4, t6, t4 / t6])
        metrics[f"general_over_n2@{_tag(eta)}"] = t4 / t6
    tables.append(Table("consistency", ["eta", "p_swap_1", "p_swap_2", "p_projection", "t_general_s", "t_n2_s", "ratio"], cons_rows))

    if cfg["oracle.slope_check"]:
        slope_rows = []
        n = cfg["oracle.slope_nesting_level"]
        for eta in cfg["oracle.slope_eta"]:
            s = oracle.chain_fidelity_slope(n, eta, p_grid=cfg["oracle.p_grid"], truncation=cfg["oracle.truncation"])
            ref = rates.FIDELITY_ERROR_COEFFICIENT * (1 - eta)
            slope_rows.append([n, eta, s, ref, s / ref if ref else float("nan")])
            metrics[f"slope@{_tag(eta)}"] = s
        tables.append(Table("slope", ["nesting_level", "eta", "slope", "56(1-eta)", "ratio"], slope_rows))

    amp_rows = []
    for i, b in enumerate(link.ensemble.branches):
        for occ, re, im in b.state.dump():
            amp_rows.append([i, b.weight, " ".join(map(str, occ)), re, im])
    tables.append(Table("link_amplitudes", ["branch", "weight", "occupation", "re", "im"], amp_rows))
    tables.append(Table("summary", ["quantity", "value"], [[k, v] for k, v in metrics.items()]))
    return tables, metrics


def cmd_simulate(cfg: dict, workers: int = 1) -> tuple[list[Table], dict]:
    params = repeater_params(cfg)
    seed = cfg["sim.seed"]
    sim = montecarlo.SimConfig.from_params(
        params,
        same_interval_mode=cfg["sim.same_interval_mode"],
        pump_diffusion=cfg["sim.pump_diffusion"],
        fiber_diffusion=cfg["sim.fiber_diffusion"],
        trials=cfg["sim.trials"],
        seed=seed,
    )
    metrics: dict[str, float] = {}
    report = montecarlo.compare_to_analytic(sim, speedup_modes=cfg["sim.speedup_modes"], workers=workers)
    for name, value, lo, hi in report.rows:
        metrics[name] = value
    metrics["mc_over_general"] = metrics["mc_mean_total_time_s"] / metrics["analytic_general_s"]
    if "analytic_n2_s" in metrics:
        metrics["mc_over_n2"] = metrics["mc_mean_total_time_s"] / metrics["analytic_n2_s"]

    rng = montecarlo.stream_rng(seed, "waiting")
    metrics["waiting_ratio"] = montecarlo.waiting_factor_check(cfg["sim.waiting_p0"], cfg["sim.waiting_trials"], rng)

    slots, _ = montecarlo.simulate_link(sim, montecarlo.stream_rng(seed, "link"), cfg["sim.gap_samples"])
    expected = 1.0 / sim.link_probs.p0_multimode
    metrics["link_mean_slots"] = float(slots.mean())
    metrics["link_expected_slots"] = expected
    metrics["link_slots_z"] = float((slots.mean() - expected) / (slots.std(ddof=1) / math.sqrt(len(slots))))

    gap_rows = []
    gap_cfg = montecarlo.with_modes(sim, cfg["sim.gap_modes"])
    single = montecarlo.with_modes(sim, 1)
    for label, c in (
        ("unrestricted_N1", single),
        ("unrestricted", gap_cfg),
        ("same_interval", gap_cfg.with_(same_interval_mode=True)),
    ):
        st = montecarlo.phase_error_stats(c, montecarlo.stream_rng(seed, "gap-" + label), cfg["sim.gap_samples"])
        gap_rows.append([label, c.params.modes_per_interval, c.link_probs.p0_multimode, st.mean_gap_s, st.gap_stderr_s, st.mean_pair_time_s, st.visibility])
        metrics[f"gap_s@{label}"] = st.mean_gap_s
        metrics[f"pair_time_s@{label}"] = st.mean_pair_time_s
        metrics[f"visibility@{label}"] = st.visibility
    p0 = gap_cfg.link_probs.p0_multimode
    metrics["same_interval_inflation_times_p0"] = metrics["pair_time_s@same_interval"] / metrics["pair_time_s@unrestricted"] * p0

    tables = [
        Table("summary", ["quantity", "value", "ci_low", "ci_high"], [list(r) for r in report.rows]),
        Table("gaps", ["mode", "N", "p0", "mean_gap_s", "gap_stderr_s", "mean_pair_time_s", "visibility"], gap_rows),
        Table("metrics", ["quantity", "value"], [[k, v] for k, v in metrics.items()]),
    ]
    return tables, metrics


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmrepeater", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--preset", action="append", default=[], choices=sorted(PRESETS), help="named preset (repeatable)")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--threads", type=int, default=1)
    return ap


def load_config(args) -> dict:
    layers = [PRESETS[name] for name in args.preset]
    if args.config:
        with open(args.config) as fh:
            layers.append(parse_config(fh.read()))
    if args.set:
        layers.append(parse_config("\n".join(args.set)))
    cfg = resolve(*layers)
    if args.seed is not None:
        cfg["sim.seed"] = args.seed
    if args.trials is not None:
        cfg["sim.trials"] = args.trials
    return cfg


def run(args) -> int:
    cfg = load_config(args)
    if cfg["sim.trials"] < 1:
        raise ConfigError("sim.trials must be at least 1")
    handlers = {
        "rates": cmd_rates,
        "sweep": cmd_sweep,
        "memory": cmd_memory,
        "oracle": cmd_oracle,
        "simulate": lambda c: cmd_simulate(c, max(1, args.threads)),
    }
    tables, metrics = handlers[args.subcommand](cfg)
    missing = unknown_checks(cfg, metrics)
    # checks may target other subcommands' metrics; only report them
    checks = evaluate_checks(cfg, metrics)
    manifest = RunManifest(args.subcommand, cfg, cfg["sim.seed"])
    out_dir = args.out or os.environ.get(OUT_ENV) or "out"
    write_outputs(out_dir, manifest, tables, checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} = {c.value:.9g} in [{c.low:.9g}, {c.high:.9g}]")
    if missing:
        print(f"skipped checks for other subcommands: {', '.join(missing)}")
    print(f"manifest {manifest.digest} -> {out_dir}")
    return 0 if all(c.passed for c in checks) else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return run(args)
    except (ConfigError, DomainError, ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
