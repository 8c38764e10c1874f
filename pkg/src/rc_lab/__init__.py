"""Monte Carlo lab for one-hop throughput in random-connection wireless networks."""

from rc_lab.dist import ExponentialDistribution, PaperDistribution, ParentDistribution
from rc_lab.errors import (
    DegenerateError,
    DomainError,
    RcLabError,
    UnsupportedLawError,
    UsageError,
)
from rc_lab.order_stats import (
    FalkNormalization,
    OrderStatSpec,
    falk_constants,
    ks_statistic_vs_normal,
    normality_diagnostic,
    sample_top_order_stats,
    standard_normal_cdf,
)
from rc_lab.scaling import (
    BoundCheck,
    ScalingFit,
    SweepPlan,
    SweepRow,
    bound_checks,
    fit_exponent,
    m_rule,
    markov_bound,
    run_sweep,
    upper_bound_reference,
)
from rc_lab.sim import (
    NetworkConfig,
    Policy,
    ThroughputEstimate,
    TrialOutcome,
    estimate_throughput,
    run_trial,
    select_active_pairs,
    simulate_trials,
    sinr,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "DegenerateError",
    "DomainError",
    "ExponentialDistribution",
    "FalkNormalization",
    "NetworkConfig",
    "OrderStatSpec",
    "PaperDistribution",
    "ParentDistribution",
    "Policy",
    "RcLabError",
    "ScalingFit",
    "SweepPlan",
    "SweepRow",
    "ThroughputEstimate",
    "TrialOutcome",
    "UnsupportedLawError",
    "UsageError",
    "bound_checks",
    "estimate_throughput",
    "falk_constants",
    "fit_exponent",
    "ks_statistic_vs_normal",
    "m_rule",
    "markov_bound",
    "normality_diagnostic",
    "run_sweep",
    "run_trial",
    "sample_top_order_stats",
    "select_active_pairs",
    "simulate_trials",
    "sinr",
    "standard_normal_cdf",
    "upper_bound_reference",
]
