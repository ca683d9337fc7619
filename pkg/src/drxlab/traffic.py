"""Downlink traffic models on a TTI-slotted time axis.

Two arrival processes are supported: memoryless Poisson arrivals and a
two-state (idle/active) bursty chain whose active sojourns are geometric.
Rates are expressed in packets per TTI; :func:`per_tti_rate` bridges from
packets per second for a given slot duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "TimeBase",
    "PoissonTraffic",
    "BurstyTraffic",
    "TrafficSpec",
    "ArrivalTrace",
    "per_tti_rate",
    "mean_rate",
    "no_arrival_prob",
    "burst_length_pmf",
    "activation_from_rate",
    "sample_arrivals",
    "derive_run_seed",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TimeBase:
    """Slot duration in milliseconds.

    Scalable-TTI deployments commonly use 1, 0.5, 0.25 or 0.125 ms; any
    positive duration is accepted.
    """

    tti_ms: float = 1.0

    def __post_init__(self):
        if not self.tti_ms > 0:
            raise ValueError(f"tti_ms must be positive, got {self.tti_ms}")


@dataclass(frozen=True)
class PoissonTraffic:
    """Poisson arrivals with mean ``lambda_per_tti`` packets per TTI.

    A zero rate is accepted and models a silent link (useful for limit
    checks); negative rates are rejected.
    """

    lambda_per_tti: float

    def __post_init__(self):
        if self.lambda_per_tti < 0:
            raise ValueError(f"lambda_per_tti must be >= 0, got {self.lambda_per_tti}")


@dataclass(frozen=True)
class BurstyTraffic:
    """Two-state bursty arrivals: activation probability ``p``, burstiness ``q``.

    Once activated, the source stays active for 1 + k consecutive TTIs with
    k distributed as (1-q) * q**k, emitting one packet per active TTI.
    The declared mean rate of this model is p * (1 + q) packets per TTI
    (see :func:`mean_rate`), which must not exceed one packet per TTI.
    """

    p: float
    q: float

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"activation probability p must be in (0, 1], got {self.p}")
        if not 0 <= self.q < 1:
            raise ValueError(f"burstiness q must be in [0, 1), got {self.q}")
        if self.p * (1 + self.q) > 1 + 1e-12:
            raise ValueError(
                f"mean rate p*(1+q) = {self.p * (1 + self.q):.6g} exceeds 1 pkt/TTI"
            )


TrafficSpec = Union[PoissonTraffic, BurstyTraffic]


@dataclass(frozen=True)
class ArrivalTrace:
    """Per-TTI packet counts over a fixed horizon."""

    counts: np.ndarray

    def __post_init__(self):
        if self.counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if len(self.counts) and self.counts.min() < 0:
            raise ValueError("counts must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.counts)

    def total_packets(self) -> int:
        return int(self.counts.sum())


def per_tti_rate(rate_pkt_per_s: float, time_base: TimeBase) -> float:
    """Convert a packets-per-second rate into packets per TTI."""
    if rate_pkt_per_s < 0:
        raise ValueError(f"rate must be >= 0, got {rate_pkt_per_s}")
    return rate_pkt_per_s * time_base.tti_ms / 1000.0


def mean_rate(spec: TrafficSpec) -> float:
    """Declared mean arrival rate in packets per TTI."""
    if isinstance(spec, PoissonTraffic):
        return spec.lambda_per_tti
    return spec.p * (1 + spec.q)


def no_arrival_prob(spec: TrafficSpec, t: int) -> float:
    """Probability of no packet arrival within ``t`` TTIs.

    Poisson: exp(-lambda * t).  Bursty: p * (1 - p)**(t - 1), the model's
    closed form taken as-is; note it is a first-activation mass function
    rather than a survival probability, so it evaluates to p at t = 1.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if isinstance(spec, PoissonTraffic):
        return math.exp(-spec.lambda_per_tti * t)
    return spec.p * (1 - spec.p) ** (t - 1)


def burst_length_pmf(q: float, k: int) -> float:
    """P(k additional active TTIs after activation) = (1 - q) * q**k."""
    if not 0 <= q < 1:
        raise ValueError(f"q must be in [0, 1), got {q}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return (1 - q) * q**k


def activation_from_rate(lambda_per_tti: float, q: float) -> float:
    """Activation probability giving a bursty source the mean rate ``lambda_per_tti``.

    Inverts the rate identity lambda = p * (1 + q); raises when no valid
    activation probability exists.
    """
    if lambda_per_tti < 0:
        raise ValueError(f"lambda_per_tti must be >= 0, got {lambda_per_tti}")
    if not 0 <= q < 1:
        raise ValueError(f"q must be in [0, 1), got {q}")
    p = lambda_per_tti / (1 + q)
    if p > 1:
        raise ValueError(
            f"rate {lambda_per_tti} infeasible for q={q}: activation probability {p:.6g} > 1"
        )
    return p


def sample_arrivals(spec: TrafficSpec, horizon: int, rng: np.random.Generator) -> ArrivalTrace:
    """Draw one arrival trace of ``horizon`` TTIs.

    Poisson: independent Poisson counts per TTI.

    Bursty: alternating idle/active renewal chain.  Each activation emits one
    packet in its own TTI and continues for k further TTIs (one packet each)
    with k ~ (1-q) q**k, then the source returns to idle.  The idle-exit
    probability is calibrated to p_eff = m(1-q) / (1 - m*q) with m = p(1+q)
    so that the trace's exact long-run rate equals the declared mean rate m;
    leaving the raw activation probability p in place would run the chain at
    p / ((1-p)(1-q) + p) packets per TTI instead.

    Identical (spec, horizon, generator state) yields the identical trace.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if isinstance(spec, PoissonTraffic):
        counts = rng.poisson(spec.lambda_per_tti, horizon).astype(np.int64)
        return ArrivalTrace(counts)
    m = spec.p * (1 + spec.q)
    if m >= 1.0:
        return ArrivalTrace(np.ones(horizon, dtype=np.int64))
    p_eff = m * (1 - spec.q) / (1 - m * spec.q)
    diff = np.zeros(horizon + 1, dtype=np.int64)
    # Whole renewal cycles (idle gap + burst) drawn in fixed-size blocks so the
    # stream consumption order is deterministic.
    block = max(256, int(horizon * m * (1 - spec.q) * 1.25) + 16)
    pos = 0
    while pos < horizon:
        gaps = rng.geometric(p_eff, block) - 1  # idle TTIs before activation
        bursts = rng.geometric(1.0 - spec.q, block)  # active TTIs incl. activation
        ends = pos + np.cumsum(gaps + bursts)
        starts = ends - bursts
        np.add.at(diff, np.minimum(starts, horizon), 1)
        np.add.at(diff, np.minimum(ends, horizon), -1)
        pos = int(ends[-1])
    return ArrivalTrace(np.cumsum(diff[:-1]))


def derive_run_seed(base_seed: int, run_index: int) -> int:
    """Mix (base_seed, run_index) into an independent 64-bit run seed.

    splitmix64 finalizer over the base seed advanced by (run_index + 1)
    golden-gamma increments; stated here so any other implementation can
    reproduce the same per-run streams.
    """
    z = (base_seed + (run_index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
