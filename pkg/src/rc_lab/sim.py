"""One time slot of the one-hop random-connection network.

Only the quantities the SINR rule needs are drawn: the ``m`` selected
direct gains and the ``m (m - 1)`` cross gains between active pairs. The
full ``n x n`` gain matrix is never built, which is valid because every
link is i.i.d. and selection looks at direct gains only.

Sources and destinations are disjoint index sets; a receiver never hears
its own node's transmission.
"""

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from rc_lab import seeding
from rc_lab.dist import ParentDistribution
from rc_lab.errors import DomainError
from rc_lab.order_stats import NAIVE, SPACING, sample_top_order_stats


class Policy(str, enum.Enum):
    TOP_M = "TopM"
    RANDOM_M = "RandomM"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NetworkConfig:
    """Parameters of one experiment.

    ``seed`` is the 64-bit seed from which each trial's stream is derived.
    ``oracle_mode`` swaps the O(m) top-m sampler for the naive sort of all
    ``n`` direct gains.
    """

    n: int
    m: int
    beta: float
    noise: float
    distribution: ParentDistribution
    policy: Policy = Policy.TOP_M
    trials: int = 10_000
    seed: int = 42
    oracle_mode: bool = False

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if int(self.m) != self.m or not 1 <= self.m <= self.n:
            raise DomainError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if not (self.beta > 0.0) or not math.isfinite(self.beta):
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not (self.noise >= 0.0) or not math.isfinite(self.noise):
            raise DomainError(f"noise must be nonnegative, got {self.noise}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= seeding.MASK64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def noiseless(self):
        return self.noise == 0.0

    def describe(self):
        return {
            "n": self.n,
            "m": self.m,
            "beta": self.beta,
            "noise": self.noise,
            "policy": self.policy.value,
            "distribution": self.distribution.describe(),
            "trials": self.trials,
            "seed": self.seed,
            "oracle_mode": self.oracle_mode,
        }


@dataclass(frozen=True)
class TrialOutcome:
    """One slot: selected direct gains (descending), per-receiver
    interference sums and SINRs, and the success count ``M``."""

    direct_gains: np.ndarray
    interference: np.ndarray
    sinr: np.ndarray
    successes: int


@dataclass(frozen=True)
class ThroughputEstimate:
    mean_M: float
    std_error: float
    trials: int
    success_rate: float
    degenerate: bool = field(default=False)


def select_active_pairs(n, m, policy, d, stream, oracle_mode=False):
    """Direct gains of the ``m`` active pairs, sorted descending.

    TopM takes the ``m`` strongest of ``n`` direct gains. RandomM draws
    ``m`` fresh gains: by exchangeability any fixed subset's gains are
    i.i.d. from the parent law.
    """
    policy = Policy(policy)
    if int(m) != m or int(n) != n or not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    if policy is Policy.TOP_M:
        method = NAIVE if oracle_mode else SPACING
        return sample_top_order_stats(d, n, m, stream, method=method)
    gains = d.sample_iid(m, stream)
    return -np.sort(-gains, kind="stable")


def sinr(direct, interference_sum, noise):
    """``direct / (noise + interference_sum)``; a zero denominator gives ``+inf``."""
    scalar = np.ndim(direct) == 0 and np.ndim(interference_sum) == 0
    direct = np.asarray(direct, dtype=float)
    denom = noise + np.asarray(interference_sum, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0.0, direct / np.where(denom > 0.0, denom, 1.0), np.inf)
    return float(out) if scalar else out


def run_trial(cfg, stream):
    d = cfg.distribution
    m = cfg.m
    direct = select_active_pairs(cfg.n, m, cfg.policy, d, stream, cfg.oracle_mode)
    if m > 1:
        # row r holds the gains from the m - 1 other active sources into receiver r
        cross = d.sample_iid_array((m, m - 1), stream)
        interference = cross.sum(axis=1)
    else:
        interference = np.zeros(1)
    s = sinr(direct, interference, cfg.noise)
    return TrialOutcome(
        direct_gains=direct,
        interference=interference,
        sinr=s,
        successes=int(np.count_nonzero(s >= cfg.beta)),
    )


def _run_range(cfg, start, stop):
    return [run_trial(cfg, seeding.child_stream(cfg.seed, t)) for t in range(start, stop)]


def simulate_trials(cfg, threads=1):
    """Run ``cfg.trials`` trials; trial ``t`` uses the stream ``mix(cfg.seed, t)``.

    The result is in trial order and does not depend on ``threads``.
    """
    if int(threads) != threads or threads < 1:
        raise DomainError(f"threads must be a positive integer, got {threads}")
    if threads == 1 or cfg.trials < 2 * threads:
        return _run_range(cfg, 0, cfg.trials)
    bounds = np.linspace(0, cfg.trials, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        chunks = pool.map(lambda ab: _run_range(cfg, *ab), zip(bounds[:-1], bounds[1:]))
        return [o for chunk in chunks for o in chunk]


def summarize(outcomes, m):
    counts = np.array([o.successes for o in outcomes], dtype=np.int64)
    trials = counts.size
    if trials == 0:
        raise DomainError("no trial outcomes to summarize")
    mean = int(counts.sum()) / trials
    if trials == 1:
        return ThroughputEstimate(mean, 0.0, 1, mean / m, degenerate=True)
    std_error = float(np.std(counts, ddof=1)) / math.sqrt(trials)
    return ThroughputEstimate(mean, std_error, trials, mean / m)


def estimate_throughput(cfg, threads=1):
    """Monte Carlo estimate of the expected number of successes per slot."""
    return summarize(simulate_trials(cfg, threads), cfg.m)
