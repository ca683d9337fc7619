"""Semi-Markov model of the DRX cycle.

States are indexed S_0 (continuous reception), S_{2i-1}/S_{2i} for the i-th
short cycle's on/sleep pair (i = 1..t_sc), and S_{2*t_sc+1}/S_{2*t_sc+2} for
the long cycle's on/sleep pair, giving 2*t_sc + 3 states.  Forward transition
probabilities are the no-arrival probabilities of the traffic model over the
corresponding timer; all residual row mass returns to S_0 (packet arrival).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .drx import DrxParams
from .traffic import PoissonTraffic, TimeBase, TrafficSpec, mean_rate, no_arrival_prob

__all__ = [
    "ChainModel",
    "AnalyticReport",
    "build_chain",
    "steady_state",
    "closed_form_steady_state",
    "power_saving",
    "cycle_delay",
    "mean_delay",
    "markov_delay_bound",
    "analyze",
]


@dataclass
class ChainModel:
    """Transition matrix P, holding times U (TTIs) and steady state pi.

    ``pi`` is None until :func:`steady_state` (or the closed form) has been
    assigned by the caller.
    """

    P: np.ndarray
    U: np.ndarray
    pi: np.ndarray | None = None

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def t_sc(self) -> int:
        return (self.n_states - 3) // 2


@dataclass(frozen=True)
class AnalyticReport:
    ps: float
    mean_delay_ttis: float
    mean_delay_ms: float


def build_chain(params: DrxParams, traffic: TrafficSpec) -> ChainModel:
    """Assemble P and U for the given DRX timers and traffic model.

    Holding times for the timed states are the timer-truncated expected
    dwell (1 - P0(T)) / lam with lam the mean arrival rate; at lam = 0 the
    analytic limit T is substituted.  Sleep states always dwell their full
    duration.
    """
    t_sc = params.t_sc
    n = 2 * t_sc + 3
    P = np.zeros((n, n))
    U = np.zeros(n)

    P[0, 1] = no_arrival_prob(traffic, params.t_i)
    p_on = no_arrival_prob(traffic, params.t_on)
    for i in range(1, t_sc + 2):
        P[2 * i - 1, 2 * i] = p_on
    p_ss = no_arrival_prob(traffic, params.t_ss)
    for i in range(1, t_sc + 1):
        P[2 * i, 2 * i + 1] = p_ss
    P[2 * t_sc + 2, 2 * t_sc + 1] = no_arrival_prob(traffic, params.t_ls)
    # A packet arrival interrupts the forward path back to continuous reception.
    for row in range(n):
        P[row, 0] += 1.0 - P[row].sum()

    lam = mean_rate(traffic)
    if lam > 0:
        U[0] = (1.0 - no_arrival_prob(traffic, params.t_i)) / lam
        u_on = (1.0 - p_on) / lam
    else:
        U[0] = float(params.t_i)
        u_on = float(params.t_on)
    for i in range(1, t_sc + 2):
        U[2 * i - 1] = u_on
    for i in range(1, t_sc + 1):
        U[2 * i] = float(params.t_ss)
    U[2 * t_sc + 2] = float(params.t_ls)
    return ChainModel(P=P, U=U)


def steady_state(chain: ChainModel) -> np.ndarray:
    """Stationary distribution of the jump chain: pi P = pi, sum(pi) = 1.

    Solved as a linear system with the normalization replacing one balance
    equation; falls back to least squares if the system is singular beyond
    that replacement.
    """
    n = chain.n_states
    A = chain.P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = None
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        pass
    if pi is None or np.max(np.abs(pi @ chain.P - pi)) > 1e-10 or pi.min() < -1e-9:
        pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = np.max(np.abs(pi @ chain.P - pi))
    if residual > 1e-10 or pi.min() < -1e-9:
        raise ArithmeticError(f"steady state did not converge (residual {residual:.3g})")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def closed_form_steady_state(chain: ChainModel) -> np.ndarray:
    """Stationary vector from the forward-path product recursions.

    pi_k = pi_0 * prod_{j<=k} p_{j-1,j} along the short-cycle chain; the long
    on/sleep pair is closed through the factor 1 / (1 - p_on_sleep * p_sleep_on)
    and pi_0 follows from normalization.  With all forward probabilities at 1
    (no traffic) the pair factor diverges and the mass concentrates on the
    long cycle, which is returned directly.
    """
    n = chain.n_states
    t_sc = chain.t_sc
    last_on, last_sleep = 2 * t_sc + 1, 2 * t_sc + 2
    loop = chain.P[last_on, last_sleep] * chain.P[last_sleep, last_on]
    denom = 1.0 - loop
    pi = np.zeros(n)
    if denom <= 1e-14:
        pi[last_on] = 1.0
        pi[last_sleep] = chain.P[last_on, last_sleep]
        return pi / pi.sum()
    pi[0] = 1.0
    prod = 1.0
    for k in range(1, 2 * t_sc + 1):
        prod *= chain.P[k - 1, k]
        pi[k] = prod
    head = prod * chain.P[2 * t_sc, last_on]
    pi[last_on] = head / denom
    pi[last_sleep] = head * chain.P[last_on, last_sleep] / denom
    return pi / pi.sum()


def power_saving(chain: ChainModel) -> float:
    """Power-saving factor: sleep-state share of time-weighted occupancy."""
    if chain.pi is None:
        raise ValueError("steady state not computed; assign chain.pi first")
    w = chain.pi * chain.U
    total = w.sum()
    if total <= 0:
        raise ArithmeticError("zero total occupancy")
    t_sc = chain.t_sc
    sleep = sum(w[2 * i] for i in range(1, t_sc + 2))
    return float(sleep / total)


def cycle_delay(traffic: TrafficSpec, T: int, max_bursts: int | None = None) -> float:
    """Mean waiting delay for packets arriving in a sleep of ``T`` TTIs.

    Poisson: T / 2.  Bursty: the burst-size expansion over k packets per
    burst, truncated where the geometric weight (1-q) q**k drops below 1e-12
    (and at k = T); ``max_bursts`` optionally caps k for partial sums.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if isinstance(traffic, PoissonTraffic):
        return T / 2.0
    return _bursty_cycle_delay(traffic.q, T, max_bursts)


@lru_cache(maxsize=4096)
def _bursty_cycle_delay(q: float, T: int, max_bursts: int | None) -> float:
    """Burst-delay sum D_T = sum_k (1-q)q^k / (T-k+1) * sum_{d1=k..T} F(k, d1).

    F(k, d1) sums (d1 + ... + dk) / prod_{i<k}(d_i - (k - i)) over strictly
    decreasing delay chains d1 > d2 > ... > dk >= 1.  Writing H_m for the
    chain-suffix sums with m levels below the current one gives
        H_0(d) = d,
        H_m(d) = d + (sum_{u=m}^{d-1} H_{m-1}(u)) / (d - m),
    and F(k, d1) = H_{k-1}(d1); each level is one prefix sum, so the whole
    table costs O(k_max * T).
    """
    if q == 0.0:
        return 0.0
    k_max = T
    if max_bursts is not None:
        k_max = min(k_max, max_bursts)
    weights = []
    for k in range(1, k_max + 1):
        w = (1 - q) * q**k
        if w < 1e-12:
            break
        weights.append(w)
    if not weights:
        return 0.0
    k_top = len(weights)

    d = np.arange(T + 1, dtype=np.float64)
    H = d.copy()  # H_0
    total = 0.0
    for k in range(1, k_top + 1):
        # H currently holds H_{k-1}; valid for d >= k.
        outer = H[k:].sum()
        total += weights[k - 1] / (T - k + 1) * outer
        if k == k_top:
            break
        m = k
        prefix = np.concatenate(([0.0], np.cumsum(H)))  # prefix[j] = sum_{u<j} H(u)
        nxt = np.zeros(T + 1)
        dv = d[m + 1 :]
        nxt[m + 1 :] = dv + (prefix[m + 1 : T + 1] - prefix[m]) / (dv - m)
        H = nxt
    return float(total)


def mean_delay(chain: ChainModel, params: DrxParams, traffic: TrafficSpec) -> float:
    """Occupancy-weighted mean delay in TTIs.

    Short and long sleeps contribute their cycle delay weighted by their
    share of time-weighted occupancy; listening states contribute none.
    """
    if chain.pi is None:
        raise ValueError("steady state not computed; assign chain.pi first")
    w = chain.pi * chain.U
    total = w.sum()
    if total <= 0:
        raise ArithmeticError("zero total occupancy")
    t_sc = chain.t_sc
    short_occ = sum(w[2 * i] for i in range(1, t_sc + 1))
    long_occ = w[2 * t_sc + 2]
    d_short = cycle_delay(traffic, params.t_ss)
    d_long = cycle_delay(traffic, params.t_ls)
    return float((d_short * short_occ + d_long * long_occ) / total)


def markov_delay_bound(mean_delay_ms: float, threshold_ms: float) -> float:
    """Markov upper bound on P(instantaneous delay > threshold)."""
    if mean_delay_ms < 0 or threshold_ms <= 0:
        raise ValueError("delays must be positive")
    return min(1.0, mean_delay_ms / threshold_ms)


def analyze(params: DrxParams, traffic: TrafficSpec, time_base: TimeBase) -> AnalyticReport:
    """Build the chain, solve it, and report PS and mean delay."""
    chain = build_chain(params, traffic)
    chain.pi = steady_state(chain)
    ps = power_saving(chain)
    d_ttis = mean_delay(chain, params, traffic)
    return AnalyticReport(ps=ps, mean_delay_ttis=d_ttis, mean_delay_ms=d_ttis * time_base.tti_ms)
