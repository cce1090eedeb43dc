"""Latency-security and throughput-latency trade-offs for longest-chain
consensus under bounded-delay Poisson mining, cross-checked by direct
Monte-Carlo of the same race.

The HTTP layer lives in naklab.service and the command-line front end in
naklab.cli; neither is imported here so that numeric use stays light.
"""

__version__ = "0.1.0"

from .balance import (
    ChainSimResult,
    TieParams,
    simulate_chain,
    tie_cdf,
    tie_cdf_bounded,
    tie_params,
    tie_tail,
)
from .bounds import (
    BoundReport,
    ChernoffConstants,
    MinDepthResult,
    MinTimeResult,
    ToleranceReport,
    beta_star,
    chernoff_constants,
    chernoff_depth_bound,
    depth_lower,
    depth_table,
    depth_upper,
    min_depth,
    min_time,
    time_lower,
    time_upper,
    tolerance_check,
)
from .errors import (
    AccuracyError,
    DomainError,
    InfeasibleError,
    ParameterError,
    PoleError,
    SearchExhaustedError,
)
from .probability import (
    DiscreteCdf,
    EmpiricalCdf,
    Prob,
    couple_extremal,
    minimize_phi,
    phi_split,
    wilson_interval,
)
from .renewal import (
    MiningParams,
    PmfSeries,
    peak_lead_mgf,
    peak_lead_pgf,
    peak_lead_pmf,
    pgf_pole,
)
from .sim import (
    Histogram,
    SimConfig,
    SimEstimate,
    arrival_stats,
    jumper_pacer_check,
    sim_lead,
    sim_max_diff,
    sim_private_attack_depth,
    sim_private_attack_time,
)
from .throughput import (
    ThroughputProblem,
    ThroughputSolution,
    delay_of_block,
    fork_cap,
    grid_rows,
    horizon_sweep,
    optimize,
    throughput_rate_cap,
)

__all__ = [
    "__version__",
    "AccuracyError",
    "BoundReport",
    "ChainSimResult",
    "ChernoffConstants",
    "DiscreteCdf",
    "DomainError",
    "EmpiricalCdf",
    "Histogram",
    "InfeasibleError",
    "MinDepthResult",
    "MinTimeResult",
    "MiningParams",
    "ParameterError",
    "PmfSeries",
    "PoleError",
    "Prob",
    "SearchExhaustedError",
    "SimConfig",
    "SimEstimate",
    "ThroughputProblem",
    "ThroughputSolution",
    "TieParams",
    "ToleranceReport",
    "arrival_stats",
    "beta_star",
    "chernoff_constants",
    "chernoff_depth_bound",
    "couple_extremal",
    "delay_of_block",
    "depth_lower",
    "depth_table",
    "depth_upper",
    "fork_cap",
    "grid_rows",
    "horizon_sweep",
    "jumper_pacer_check",
    "min_depth",
    "min_time",
    "minimize_phi",
    "optimize",
    "peak_lead_mgf",
    "peak_lead_pgf",
    "peak_lead_pmf",
    "pgf_pole",
    "phi_split",
    "throughput_rate_cap",
    "sim_lead",
    "sim_max_diff",
    "sim_private_attack_depth",
    "sim_private_attack_time",
    "simulate_chain",
    "tie_cdf",
    "tie_cdf_bounded",
    "tie_params",
    "tie_tail",
    "time_lower",
    "time_upper",
    "tolerance_check",
    "wilson_interval",
]
