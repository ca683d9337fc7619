"""Constrained DRX configuration search: maximize the power-saving factor
subject to a mean-delay budget and a strictly longer long cycle.

Two searches are provided: exhaustive enumeration of the timer grid and a
genetic algorithm over the same grid.  Both default to the analytic chain
evaluator; Monte Carlo evaluation is available for final validation.
Optimized configurations can be persisted in a plain-text lookup table so
the online path is a single key lookup.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .chain import analyze
from .drx import DrxParams
from .sim import ItPolicy, SimConfig, monte_carlo
from .traffic import PoissonTraffic, TimeBase, TrafficSpec, mean_rate

__all__ = [
    "SearchSpace",
    "GaConfig",
    "EvalContext",
    "OptResult",
    "LutKey",
    "LookupTable",
    "default_inactivity_timer",
    "enumerate_space",
    "evaluate",
    "exhaustive_search",
    "genetic_search",
]


def default_inactivity_timer(traffic: TrafficSpec) -> int:
    """IT sized to the mean inter-packet time, ceil(1 / rate) TTIs."""
    rate = mean_rate(traffic)
    if rate <= 0:
        raise ValueError("inactivity timer undefined for zero-rate traffic")
    return max(1, math.ceil(1.0 / rate))


@dataclass(frozen=True)
class SearchSpace:
    """Timer grid: short sleep range, long sleep offsets, short-cycle counts.

    For each ``t_ss`` the long sleep takes values t_ss + j * t_ls_stride up
    to ``t_ls_max`` (j >= 1, keeping the short cycle strictly shorter).
    ``t_i_values`` optionally adds the inactivity timer as a search
    dimension; by default it stays fixed at ``t_i``.
    """

    t_i: int
    t_on: int = 8
    t_ss_min: int = 32
    t_ss_max: int = 160
    t_ss_stride: int = 1
    t_ls_max: int = 640
    t_ls_stride: int = 1
    t_sc_values: tuple[int, ...] = tuple(range(1, 17))
    t_i_values: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.t_ss_min < 1 or self.t_ss_max < self.t_ss_min:
            raise ValueError("bad t_ss range")
        if self.t_ss_stride < 1 or self.t_ls_stride < 1:
            raise ValueError("strides must be >= 1")
        if self.t_ls_max < self.t_ss_max + self.t_ls_stride:
            raise ValueError("t_ls_max leaves no feasible long sleep for the largest t_ss")
        if not self.t_sc_values:
            raise ValueError("t_sc_values is empty")

    @classmethod
    def reduced(cls, t_i: int, t_on: int = 8) -> "SearchSpace":
        """Laptop-scale grid: strides 16/32, short-cycle counts 1,2,4,8,16."""
        return cls(t_i=t_i, t_on=t_on, t_ss_stride=16, t_ls_stride=32,
                   t_sc_values=(1, 2, 4, 8, 16))

    def t_ss_options(self) -> range:
        return range(self.t_ss_min, self.t_ss_max + 1, self.t_ss_stride)

    def t_ls_options(self, t_ss: int) -> range:
        return range(t_ss + self.t_ls_stride, self.t_ls_max + 1, self.t_ls_stride)

    def size(self) -> int:
        per_ti = sum(
            len(self.t_ls_options(t_ss)) * len(self.t_sc_values)
            for t_ss in self.t_ss_options()
        )
        return per_ti * (len(self.t_i_values) if self.t_i_values else 1)


def enumerate_space(space: SearchSpace) -> Iterator[DrxParams]:
    """Yield every grid point in deterministic lexicographic order."""
    ti_options = space.t_i_values if space.t_i_values else (space.t_i,)
    for t_i in ti_options:
        for t_ss in space.t_ss_options():
            for t_ls in space.t_ls_options(t_ss):
                for t_sc in space.t_sc_values:
                    yield DrxParams(t_on=space.t_on, t_i=t_i, t_ss=t_ss, t_ls=t_ls, t_sc=t_sc)


@dataclass(frozen=True)
class GaConfig:
    """Genetic-algorithm knobs.

    Tournament selection (size 2), per-gene uniform crossover, bounded
    integer mutation that jitters a gene by one or two grid steps, and
    elitism.  ``stall_generations`` optionally stops early after that many
    generations without improvement (disabled by default).
    """

    generations: int = 200
    population: int = 50
    mutation_rate: float = 0.1
    tournament_size: int = 2
    elitism_count: int = 2
    crossover_prob: float = 0.9
    stall_generations: int | None = None

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")


@dataclass(frozen=True)
class EvalContext:
    """How candidate configurations are scored.

    ``analytic`` uses the semi-Markov chain (fast, deterministic).
    ``simulated`` runs a Monte Carlo batch under the standard IT policy and
    scores (sleep fraction, sleep-induced mean delay), the pair comparable
    to the analytic metrics.
    """

    traffic: TrafficSpec
    time_base: TimeBase = TimeBase(1.0)
    evaluator: str = "analytic"
    sim_runs: int = 20
    sim_horizon: int = 100_000
    sim_seed: int = 0
    sim_policy: ItPolicy = ItPolicy.STANDARD

    def __post_init__(self):
        if self.evaluator not in ("analytic", "simulated"):
            raise ValueError(f"unknown evaluator {self.evaluator!r}")


@dataclass(frozen=True)
class OptResult:
    best: DrxParams
    ps: float
    mean_delay_ms: float
    feasible: bool
    evaluations: int
    evaluator_kind: str


def evaluate(params: DrxParams, ctx: EvalContext) -> tuple[float, float]:
    """Score one configuration: (power-saving factor, mean delay in ms)."""
    if ctx.evaluator == "analytic":
        rep = analyze(params, ctx.traffic, ctx.time_base)
        return rep.ps, rep.mean_delay_ms
    cfg = SimConfig(
        traffic=ctx.traffic, params=params, time_base=ctx.time_base,
        it_policy=ctx.sim_policy, horizon_ttis=ctx.sim_horizon, seed=ctx.sim_seed,
    )
    mc = monte_carlo(cfg, ctx.sim_runs)
    return mc.sleep_fraction.mean, mc.sleep_delay_ms.mean


def _key(ps: float, delay: float, p: DrxParams):
    """Sort key: higher PS, then lower delay, then lexicographically smaller tuple."""
    return (-ps, delay, p.t_i, p.t_ss, p.t_ls, p.t_sc)


def exhaustive_search(space: SearchSpace, d_max_ms: float, ctx: EvalContext) -> OptResult:
    """Scan the whole grid; returns the feasible PS maximum.

    With no feasible point the result carries feasible=False and the
    minimum-delay point as a best effort.
    """
    best = None
    best_key = None
    fallback = None
    fallback_key = None
    evals = 0
    for params in enumerate_space(space):
        ps, delay = evaluate(params, ctx)
        evals += 1
        k = _key(ps, delay, params)
        if delay <= d_max_ms and (best_key is None or k < best_key):
            best, best_key = (params, ps, delay), k
        fk = (delay, -ps, params.t_i, params.t_ss, params.t_ls, params.t_sc)
        if fallback_key is None or fk < fallback_key:
            fallback, fallback_key = (params, ps, delay), fk
    if best is not None:
        params, ps, delay = best
        return OptResult(params, ps, delay, True, evals, ctx.evaluator)
    params, ps, delay = fallback
    return OptResult(params, ps, delay, False, evals, ctx.evaluator)


def _fitness(ps: float, delay: float, d_max_ms: float) -> float:
    """Feasible individuals score their PS; infeasible ones are pushed below
    every feasible score by a fixed offset plus 1 per ms of violation."""
    if delay <= d_max_ms:
        return ps
    return ps - 1.0 - (delay - d_max_ms)


def genetic_search(
    space: SearchSpace, d_max_ms: float, ga: GaConfig, ctx: EvalContext, seed: int
) -> OptResult:
    """Tournament GA over grid indices; deterministic for a given seed.

    Genes are (t_ss index, long-sleep offset index, t_sc index[, t_i index]).
    The initial population counts as the first generation, so the number of
    fitness evaluations never exceeds generations * population; repeated
    genotypes are memoized and only scored once.
    """
    rng = np.random.default_rng(seed)
    ss_opts = list(space.t_ss_options())
    sc_opts = list(space.t_sc_values)
    ti_opts = list(space.t_i_values) if space.t_i_values else [space.t_i]

    def n_ls(ss_idx: int) -> int:
        return len(space.t_ls_options(ss_opts[ss_idx]))

    def decode(gene: tuple[int, ...]) -> DrxParams:
        ss_i, ls_j, sc_i, ti_i = gene
        t_ss = ss_opts[ss_i]
        t_ls = t_ss + (ls_j + 1) * space.t_ls_stride
        return DrxParams(t_on=space.t_on, t_i=ti_opts[ti_i], t_ss=t_ss,
                         t_ls=t_ls, t_sc=sc_opts[sc_i])

    def clamp(gene: list[int]) -> tuple[int, ...]:
        gene[0] = min(max(gene[0], 0), len(ss_opts) - 1)
        gene[1] = min(max(gene[1], 0), n_ls(gene[0]) - 1)
        gene[2] = min(max(gene[2], 0), len(sc_opts) - 1)
        gene[3] = min(max(gene[3], 0), len(ti_opts) - 1)
        return tuple(gene)

    def random_gene() -> tuple[int, ...]:
        ss_i = int(rng.integers(len(ss_opts)))
        return (
            ss_i,
            int(rng.integers(n_ls(ss_i))),
            int(rng.integers(len(sc_opts))),
            int(rng.integers(len(ti_opts))),
        )

    cache: dict[tuple[int, ...], tuple[float, float]] = {}
    evals = 0

    def score(gene: tuple[int, ...]) -> tuple[float, float]:
        nonlocal evals
        if gene not in cache:
            cache[gene] = evaluate(decode(gene), ctx)
            evals += 1
        return cache[gene]

    pop = [random_gene() for _ in range(ga.population)]
    best_feasible = None  # (key, gene, ps, delay)
    best_any = None
    stall = 0

    for _generation in range(ga.generations):
        fits = []
        for gene in pop:
            ps, delay = score(gene)
            fits.append(_fitness(ps, delay, d_max_ms))
            p = decode(gene)
            k = _key(ps, delay, p)
            if delay <= d_max_ms and (best_feasible is None or k < best_feasible[0]):
                best_feasible = (k, gene, ps, delay)
                stall = -1
            fk = (delay, -ps, p.t_i, p.t_ss, p.t_ls, p.t_sc)
            if best_any is None or fk < best_any[0]:
                best_any = (fk, gene, ps, delay)
        stall += 1
        if ga.stall_generations is not None and stall >= ga.stall_generations:
            break
        order = sorted(range(len(pop)), key=lambda i: (-fits[i], pop[i]))
        elite = [pop[i] for i in order[: ga.elitism_count]]
        children = list(elite)
        while len(children) < ga.population:
            pa = _tournament(pop, fits, ga.tournament_size, rng)
            pb = _tournament(pop, fits, ga.tournament_size, rng)
            child = list(pa)
            if rng.random() < ga.crossover_prob:
                for g in range(4):
                    if rng.random() < 0.5:
                        child[g] = pb[g]
            for g in range(4):
                if rng.random() < ga.mutation_rate:
                    step = int(rng.integers(1, 3))
                    child[g] += step if rng.random() < 0.5 else -step
            children.append(clamp(child))
        pop = children

    if best_feasible is not None:
        _, gene, ps, delay = best_feasible
        return OptResult(decode(gene), ps, delay, True, evals, ctx.evaluator)
    _, gene, ps, delay = best_any
    return OptResult(decode(gene), ps, delay, False, evals, ctx.evaluator)


def _tournament(pop, fits, size, rng) -> tuple[int, ...]:
    idx = rng.integers(len(pop), size=size)
    winner = max(idx, key=lambda i: (fits[i], pop[int(i)]))
    return pop[int(winner)]


@dataclass(frozen=True)
class LutKey:
    """Lookup key: traffic statistics, slot duration and delay budget."""

    traffic_kind: str  # "poisson" | "bursty"
    lambda_per_tti: float
    q: float
    tti_ms: float
    d_max_ms: float

    @classmethod
    def for_traffic(cls, traffic: TrafficSpec, tti_ms: float, d_max_ms: float) -> "LutKey":
        if isinstance(traffic, PoissonTraffic):
            return cls("poisson", traffic.lambda_per_tti, 0.0, tti_ms, d_max_ms)
        return cls("bursty", mean_rate(traffic), traffic.q, tti_ms, d_max_ms)


class LookupTable:
    """Line-delimited optimized-configuration store.

    One record per line, space-separated, fixed column order:
    traffic_kind lambda_per_tti q tti_ms d_max_ms t_on t_i t_ss t_ls t_sc
    ps mean_delay_ms feasible evaluations evaluator_kind.  Floats are
    written with repr for bit-exact round trips; writes replace the file
    atomically (temp file + rename).
    """

    def __init__(self, path: str):
        self.path = path

    def _load(self) -> dict[LutKey, OptResult]:
        records: dict[LutKey, OptResult] = {}
        if not os.path.exists(self.path):
            return records
        with open(self.path, "r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                f = line.split()
                if len(f) != 15:
                    raise ValueError(f"malformed lookup record: {line!r}")
                key = LutKey(f[0], float(f[1]), float(f[2]), float(f[3]), float(f[4]))
                params = DrxParams(t_on=int(f[5]), t_i=int(f[6]), t_ss=int(f[7]),
                                   t_ls=int(f[8]), t_sc=int(f[9]))
                records[key] = OptResult(params, float(f[10]), float(f[11]),
                                         f[12] == "1", int(f[13]), f[14])
        return records

    def get(self, key: LutKey) -> OptResult | None:
        """Stored result for the key, or None when absent."""
        return self._load().get(key)

    def put(self, key: LutKey, result: OptResult) -> None:
        records = self._load()
        records[key] = result
        lines = []
        for k in sorted(records, key=lambda k: (k.traffic_kind, k.lambda_per_tti, k.q, k.tti_ms, k.d_max_ms)):
            r = records[k]
            p = r.best
            lines.append(
                f"{k.traffic_kind} {k.lambda_per_tti!r} {k.q!r} {k.tti_ms!r} {k.d_max_ms!r} "
                f"{p.t_on} {p.t_i} {p.t_ss} {p.t_ls} {p.t_sc} "
                f"{r.ps!r} {r.mean_delay_ms!r} {int(r.feasible)} {r.evaluations} {r.evaluator_kind}"
            )
        directory = os.path.dirname(os.path.abspath(self.path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lut-")
        try:
            with os.fdopen(fd, "w", encoding="ascii") as fh:
                fh.write("\n".join(lines) + ("\n" if lines else ""))
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
