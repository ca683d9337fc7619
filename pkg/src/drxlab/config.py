"""Experiment configuration: flat ``section.key = value`` text files.

Lines are ``key = value`` with ``#`` comments; keys are dotted section
paths.  The schema is closed: unknown keys are rejected, values are parsed
and validated before anything runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .drx import DrxParams
from .optimize import default_inactivity_timer
from .sim import ItPolicy
from .traffic import BurstyTraffic, PoissonTraffic, TimeBase, TrafficSpec, activation_from_rate, per_tti_rate

__all__ = ["ConfigError", "ExperimentConfig", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Schema violation in an experiment configuration."""


def _parse_policy(raw: str) -> ItPolicy:
    try:
        return ItPolicy[raw.strip().upper()]
    except KeyError:
        raise ConfigError(f"unknown policy {raw!r} (standard, intelligent, genie)") from None


def _parse_weights(raw: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"power_weights needs three comma-separated values, got {raw!r}")
    return tuple(float(p) for p in parts)


def _parse_auto_int(raw: str) -> int | None:
    raw = raw.strip()
    if raw.lower() == "auto":
        return None
    return int(raw)


def _parse_float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(p.strip()) for p in raw.split(",") if p.strip())


def _parse_int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in raw.split(",") if p.strip())


@dataclass
class ExperimentConfig:
    traffic_model: str = "poisson"
    lambda_pkt_s: float = 20.0
    q: float = 0.5
    tti_ms: float = 1.0
    t_on: int = 8
    t_i: int | None = None  # None = auto, ceil(1/rate)
    t_ss: int = 32
    t_ls: int = 64
    t_sc: int = 1
    policy: ItPolicy = ItPolicy.STANDARD
    service_multiplier: float = 4.0
    horizon_ttis: int = 100_000
    runs: int = 250
    seed: int = 12345
    power_weights: tuple[float, float, float] = (1.0, 1.0, 0.0)
    d_max_ms: float = 10.0
    method: str = "exhaustive"
    ga_generations: int = 200
    ga_population: int = 50
    ga_mutation_rate: float = 0.1
    ga_tournament: int = 2
    ga_elitism: int = 2
    ga_crossover_prob: float = 0.9
    lut_path: str = "drx_lut.txt"
    delay_grid_ms: tuple[float, ...] = (1, 2, 5, 10, 15, 20, 25, 30, 40, 50)
    # None = take the stride/value set of the --grid preset
    t_ss_stride: int | None = None
    t_ls_stride: int | None = None
    t_sc_list: tuple[int, ...] | None = None


_SCHEMA = {
    "traffic.model": ("traffic_model", str),
    "traffic.lambda_pkt_s": ("lambda_pkt_s", float),
    "traffic.q": ("q", float),
    "time.tti_ms": ("tti_ms", float),
    "drx.t_on": ("t_on", int),
    "drx.t_i": ("t_i", _parse_auto_int),
    "drx.t_ss": ("t_ss", int),
    "drx.t_ls": ("t_ls", int),
    "drx.t_sc": ("t_sc", int),
    "sim.policy": ("policy", _parse_policy),
    "sim.service_multiplier": ("service_multiplier", float),
    "sim.horizon_ttis": ("horizon_ttis", int),
    "sim.runs": ("runs", int),
    "sim.seed": ("seed", int),
    "sim.power_weights": ("power_weights", _parse_weights),
    "opt.d_max_ms": ("d_max_ms", float),
    "opt.method": ("method", str),
    "opt.ga_generations": ("ga_generations", int),
    "opt.ga_population": ("ga_population", int),
    "opt.ga_mutation_rate": ("ga_mutation_rate", float),
    "opt.ga_tournament": ("ga_tournament", int),
    "opt.ga_elitism": ("ga_elitism", int),
    "opt.ga_crossover_prob": ("ga_crossover_prob", float),
    "opt.lut_path": ("lut_path", str),
    "opt.delay_grid_ms": ("delay_grid_ms", _parse_float_list),
    "opt.t_ss_stride": ("t_ss_stride", int),
    "opt.t_ls_stride": ("t_ls_stride", int),
    "opt.t_sc_list": ("t_sc_list", _parse_int_list),
}


def parse_config_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        attr, parser = _SCHEMA[key]
        try:
            setattr(cfg, attr, parser(value))
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.traffic_model not in ("poisson", "bursty"):
        raise ConfigError(f"traffic.model must be poisson or bursty, got {cfg.traffic_model!r}")
    if cfg.method not in ("exhaustive", "genetic"):
        raise ConfigError(f"opt.method must be exhaustive or genetic, got {cfg.method!r}")
    if cfg.lambda_pkt_s < 0:
        raise ConfigError("traffic.lambda_pkt_s must be >= 0")
    if not 0 <= cfg.q < 1:
        raise ConfigError("traffic.q must be in [0, 1)")
    if cfg.tti_ms <= 0:
        raise ConfigError("time.tti_ms must be positive")
    if cfg.runs < 2:
        raise ConfigError("sim.runs must be >= 2")
    if cfg.d_max_ms <= 0:
        raise ConfigError("opt.d_max_ms must be positive")


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def build_time_base(cfg: ExperimentConfig) -> TimeBase:
    return TimeBase(cfg.tti_ms)


def build_traffic(
    cfg: ExperimentConfig, lambda_pkt_s: float | None = None, tti_ms: float | None = None
) -> TrafficSpec:
    """Traffic spec for the configured model, with optional rate/TTI overrides."""
    rate_s = cfg.lambda_pkt_s if lambda_pkt_s is None else lambda_pkt_s
    lam = per_tti_rate(rate_s, TimeBase(cfg.tti_ms if tti_ms is None else tti_ms))
    if cfg.traffic_model == "poisson":
        return PoissonTraffic(lam)
    return BurstyTraffic(activation_from_rate(lam, cfg.q), cfg.q)


def resolve_t_i(cfg: ExperimentConfig, traffic: TrafficSpec) -> int:
    return cfg.t_i if cfg.t_i is not None else default_inactivity_timer(traffic)


def build_drx_params(cfg: ExperimentConfig, traffic: TrafficSpec) -> DrxParams:
    return DrxParams(t_on=cfg.t_on, t_i=resolve_t_i(cfg, traffic),
                     t_ss=cfg.t_ss, t_ls=cfg.t_ls, t_sc=cfg.t_sc)
