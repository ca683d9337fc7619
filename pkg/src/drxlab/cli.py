"""Experiment runner CLI: config-file driven subcommands writing CSV.

Subcommands map one-to-one onto the evaluation protocol: ``analytic`` (one
chain-model row), ``simulate`` (Monte Carlo summary plus a pooled
delay-sample file), ``optimize`` (constrained search plus lookup-table
update), ``sweep`` (rate x TTI x policy power table), ``cdf`` (instant-delay
CDF for both IT policies at optimized parameters) and ``delay-sweep``
(relative power across delay budgets).  All outputs are deterministic for a
given seed.  Exit codes: 0 success, 1 configuration error, 2 I/O error,
3 infeasible optimization.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .chain import analyze
from .config import (
    ConfigError,
    ExperimentConfig,
    build_drx_params,
    build_time_base,
    build_traffic,
    load_config,
    resolve_t_i,
)
from .drx import DrxParams
from .optimize import (
    EvalContext,
    GaConfig,
    LookupTable,
    LutKey,
    SearchSpace,
    exhaustive_search,
    genetic_search,
)
from .sim import ItPolicy, SimConfig, empirical_cdf, monte_carlo
from .traffic import TimeBase, derive_run_seed

__all__ = ["main", "entry", "emit_csv", "format_value"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_INFEASIBLE = 3

SWEEP_LAMBDAS = (5.0, 10.0, 20.0, 50.0)
SWEEP_TTIS = (1.0, 0.5, 0.25, 0.125)
POLICIES = (ItPolicy.STANDARD, ItPolicy.INTELLIGENT, ItPolicy.GENIE)


def format_value(v) -> str:
    """CSV cell text: reals at 9 significant digits, everything else as str."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def emit_csv(path: str, header: list[str], rows) -> None:
    """Write rows as comma-separated text, header first, LF line endings."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ValueError("row width does not match header")
            fh.write(",".join(format_value(v) for v in row) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="drxlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("analytic", "simulate", "optimize", "sweep", "cdf", "delay-sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override sim.seed")
        p.add_argument("--runs", type=int, default=None, help="override sim.runs")
        p.add_argument("--grid", choices=("reduced", "full"), default="reduced",
                       help="search grid for optimizing subcommands")
    return parser


def _space(cfg: ExperimentConfig, grid: str, t_i: int) -> SearchSpace:
    """Grid preset (--grid) with any explicit stride overrides from the config."""
    if grid == "full":
        space = SearchSpace(t_i=t_i, t_on=cfg.t_on)
    else:
        space = SearchSpace.reduced(t_i=t_i, t_on=cfg.t_on)
    overrides = {}
    if cfg.t_ss_stride is not None:
        overrides["t_ss_stride"] = cfg.t_ss_stride
    if cfg.t_ls_stride is not None:
        overrides["t_ls_stride"] = cfg.t_ls_stride
    if cfg.t_sc_list is not None:
        overrides["t_sc_values"] = cfg.t_sc_list
    return dataclasses.replace(space, **overrides) if overrides else space


def _ga(cfg: ExperimentConfig) -> GaConfig:
    return GaConfig(
        generations=cfg.ga_generations,
        population=cfg.ga_population,
        mutation_rate=cfg.ga_mutation_rate,
        tournament_size=cfg.ga_tournament,
        elitism_count=cfg.ga_elitism,
        crossover_prob=cfg.ga_crossover_prob,
    )


def _optimize(cfg: ExperimentConfig, grid: str, method: str, traffic, tti_ms: float,
              d_max_ms: float, seed: int):
    t_i = resolve_t_i(cfg, traffic)
    space = _space(cfg, grid, t_i)
    ctx = EvalContext(traffic=traffic, time_base=TimeBase(tti_ms))
    if method == "genetic":
        return genetic_search(space, d_max_ms, _ga(cfg), ctx, seed)
    return exhaustive_search(space, d_max_ms, ctx)


def _sim_config(cfg: ExperimentConfig, traffic, params: DrxParams, tti_ms: float,
                policy: ItPolicy, seed: int) -> SimConfig:
    return SimConfig(
        traffic=traffic,
        params=params,
        time_base=TimeBase(tti_ms),
        it_policy=policy,
        service_multiplier=cfg.service_multiplier,
        horizon_ttis=cfg.horizon_ttis,
        seed=seed,
        power_weights=cfg.power_weights,
    )


_PARAM_COLS = ["t_on", "t_i", "t_ss", "t_ls", "t_sc"]


def _param_cells(p: DrxParams):
    return [p.t_on, p.t_i, p.t_ss, p.t_ls, p.t_sc]


def _cmd_analytic(cfg: ExperimentConfig, args) -> int:
    traffic = build_traffic(cfg)
    params = build_drx_params(cfg, traffic)
    rep = analyze(params, traffic, build_time_base(cfg))
    header = ["traffic_model", "lambda_pkt_s", "q", "tti_ms"] + _PARAM_COLS + [
        "ps", "mean_delay_ttis", "mean_delay_ms"]
    row = [cfg.traffic_model, cfg.lambda_pkt_s, cfg.q, cfg.tti_ms] + _param_cells(params) + [
        rep.ps, rep.mean_delay_ttis, rep.mean_delay_ms]
    emit_csv(args.out, header, [row])
    return EXIT_OK


def _cmd_simulate(cfg: ExperimentConfig, args) -> int:
    traffic = build_traffic(cfg)
    params = build_drx_params(cfg, traffic)
    mc = monte_carlo(_sim_config(cfg, traffic, params, cfg.tti_ms, cfg.policy, cfg.seed), cfg.runs)
    header = (
        ["traffic_model", "lambda_pkt_s", "q", "tti_ms", "policy", "runs", "horizon_ttis", "seed"]
        + _PARAM_COLS
        + ["power_mean", "power_ci95", "sleep_mean", "sleep_ci95",
           "delay_ms_mean", "delay_ms_ci95", "sleep_delay_ms_mean", "sleep_delay_ms_ci95",
           "packets_delivered_mean"]
    )
    row = (
        [cfg.traffic_model, cfg.lambda_pkt_s, cfg.q, cfg.tti_ms, cfg.policy.name.lower(),
         cfg.runs, cfg.horizon_ttis, cfg.seed]
        + _param_cells(params)
        + [mc.power.mean, mc.power.ci95, mc.sleep_fraction.mean, mc.sleep_fraction.ci95,
           mc.mean_delay_ms.mean, mc.mean_delay_ms.ci95,
           mc.sleep_delay_ms.mean, mc.sleep_delay_ms.ci95,
           mc.packets_delivered_mean]
    )
    emit_csv(args.out, header, [row])
    root, ext = os.path.splitext(args.out)
    emit_csv(root + ".delays" + (ext or ".csv"),
             ["delay_ms", "sleep_wait_ms"],
             zip(mc.pooled_delays_ms.tolist(), mc.pooled_sleep_waits_ms.tolist()))
    return EXIT_OK


def _cmd_optimize(cfg: ExperimentConfig, args) -> int:
    traffic = build_traffic(cfg)
    result = _optimize(cfg, args.grid, cfg.method, traffic, cfg.tti_ms, cfg.d_max_ms, cfg.seed)
    header = (["traffic_model", "lambda_pkt_s", "q", "tti_ms", "d_max_ms", "method",
               "evaluator", "grid", "feasible", "evaluations"]
              + _PARAM_COLS + ["ps", "mean_delay_ms"])
    row = ([cfg.traffic_model, cfg.lambda_pkt_s, cfg.q, cfg.tti_ms, cfg.d_max_ms, cfg.method,
            result.evaluator_kind, args.grid, result.feasible, result.evaluations]
           + _param_cells(result.best) + [result.ps, result.mean_delay_ms])
    emit_csv(args.out, header, [row])
    lut_path = cfg.lut_path
    if not os.path.isabs(lut_path):
        lut_path = os.path.join(os.path.dirname(os.path.abspath(args.out)), lut_path)
    key = LutKey.for_traffic(traffic, cfg.tti_ms, cfg.d_max_ms)
    LookupTable(lut_path).put(key, result)
    if not result.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_sweep(cfg: ExperimentConfig, args) -> int:
    """Rate x TTI x policy power table at per-cell optimized parameters."""
    header = (["lambda_pkt_s", "tti_ms", "policy", "feasible"] + _PARAM_COLS
              + ["ps_analytic", "delay_ms_analytic",
                 "power_mean", "power_ci95", "sleep_mean", "sleep_ci95",
                 "delay_ms_mean", "delay_ms_ci95", "sleep_delay_ms_mean", "sleep_delay_ms_ci95"])
    rows = []
    cell = 0
    for lam_s in SWEEP_LAMBDAS:
        for tti_ms in SWEEP_TTIS:
            traffic = build_traffic(cfg, lambda_pkt_s=lam_s, tti_ms=tti_ms)
            opt_seed = derive_run_seed(cfg.seed, 90_000 + cell)
            result = _optimize(cfg, args.grid, cfg.method, traffic, tti_ms, cfg.d_max_ms, opt_seed)
            for policy in POLICIES:
                sim_seed = derive_run_seed(cfg.seed, cell * len(POLICIES) + int(policy))
                mc = monte_carlo(
                    _sim_config(cfg, traffic, result.best, tti_ms, policy, sim_seed), cfg.runs)
                rows.append(
                    [lam_s, tti_ms, policy.name.lower(), result.feasible]
                    + _param_cells(result.best)
                    + [result.ps, result.mean_delay_ms,
                       mc.power.mean, mc.power.ci95, mc.sleep_fraction.mean, mc.sleep_fraction.ci95,
                       mc.mean_delay_ms.mean, mc.mean_delay_ms.ci95,
                       mc.sleep_delay_ms.mean, mc.sleep_delay_ms.ci95]
                )
            cell += 1
    emit_csv(args.out, header, rows)
    return EXIT_OK


def _cmd_cdf(cfg: ExperimentConfig, args) -> int:
    """Instant-delay CDF for standard and intelligent IT at optimized parameters."""
    traffic = build_traffic(cfg)
    result = _optimize(cfg, args.grid, cfg.method, traffic, cfg.tti_ms, cfg.d_max_ms, cfg.seed)
    if not result.feasible:
        return EXIT_INFEASIBLE
    rows = []
    for policy in (ItPolicy.STANDARD, ItPolicy.INTELLIGENT):
        seed = derive_run_seed(cfg.seed, 70_000 + int(policy))
        mc = monte_carlo(_sim_config(cfg, traffic, result.best, cfg.tti_ms, policy, seed), cfg.runs)
        for value, prob in empirical_cdf(mc.pooled_delays_ms):
            rows.append([policy.name.lower(), value, prob])
    emit_csv(args.out, ["policy", "delay_ms", "cum_prob"], rows)
    return EXIT_OK


def _cmd_delay_sweep(cfg: ExperimentConfig, args) -> int:
    """Relative power of GA-optimized intelligent IT against brute-force standard IT
    across delay budgets."""
    traffic = build_traffic(cfg)
    header = (["d_max_ms", "feasible_std", "feasible_int",
               "power_standard", "power_standard_ci95",
               "power_intelligent", "power_intelligent_ci95", "relative_power"]
              + [c + "_std" for c in _PARAM_COLS] + [c + "_int" for c in _PARAM_COLS])
    rows = []
    for i, d_max in enumerate(cfg.delay_grid_ms):
        r_std = _optimize(cfg, args.grid, "exhaustive", traffic, cfg.tti_ms, d_max,
                          derive_run_seed(cfg.seed, 80_000 + i))
        r_int = _optimize(cfg, args.grid, "genetic", traffic, cfg.tti_ms, d_max,
                          derive_run_seed(cfg.seed, 81_000 + i))
        mc_std = monte_carlo(
            _sim_config(cfg, traffic, r_std.best, cfg.tti_ms, ItPolicy.STANDARD,
                        derive_run_seed(cfg.seed, 82_000 + i)), cfg.runs)
        mc_int = monte_carlo(
            _sim_config(cfg, traffic, r_int.best, cfg.tti_ms, ItPolicy.INTELLIGENT,
                        derive_run_seed(cfg.seed, 83_000 + i)), cfg.runs)
        rel = mc_int.power.mean / mc_std.power.mean if mc_std.power.mean > 0 else float("nan")
        rows.append([d_max, r_std.feasible, r_int.feasible,
                     mc_std.power.mean, mc_std.power.ci95,
                     mc_int.power.mean, mc_int.power.ci95, rel]
                    + _param_cells(r_std.best) + _param_cells(r_int.best))
    emit_csv(args.out, header, rows)
    return EXIT_OK


_COMMANDS = {
    "analytic": _cmd_analytic,
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
    "cdf": _cmd_cdf,
    "delay-sweep": _cmd_delay_sweep,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.runs is not None:
            cfg.runs = args.runs
    except (ConfigError, FileNotFoundError) as exc:
        # missing/invalid config file is a configuration problem, not I/O
        print(f"drxlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except OSError as exc:
        print(f"drxlab: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # invalid parameter combinations surface from the config's values
        print(f"drxlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
