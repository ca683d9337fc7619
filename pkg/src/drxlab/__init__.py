"""drxlab: a desk-scale laboratory for DRX power saving.

Analytic semi-Markov model, TTI-slotted buffer/device co-simulation with
three inactivity-timer policies, and constrained optimizers (exhaustive and
genetic) that pick DRX timers maximizing sleep time under a mean-delay
budget.
"""

from .chain import (
    AnalyticReport,
    ChainModel,
    analyze,
    build_chain,
    closed_form_steady_state,
    cycle_delay,
    markov_delay_bound,
    mean_delay,
    power_saving,
    steady_state,
)
from .drx import DeviceMode, DrxParams, Phase, TickInput, init, is_listening, tick
from .optimize import (
    EvalContext,
    GaConfig,
    LookupTable,
    LutKey,
    OptResult,
    SearchSpace,
    default_inactivity_timer,
    enumerate_space,
    evaluate,
    exhaustive_search,
    genetic_search,
)
from .sim import (
    ItPolicy,
    MonteCarloResult,
    SimConfig,
    SimMetrics,
    empirical_cdf,
    it_restart_decision,
    monte_carlo,
    run_once,
)
from .traffic import (
    ArrivalTrace,
    BurstyTraffic,
    PoissonTraffic,
    TimeBase,
    activation_from_rate,
    burst_length_pmf,
    derive_run_seed,
    mean_rate,
    no_arrival_prob,
    per_tti_rate,
    sample_arrivals,
)

__version__ = "0.1.0"
