"""Sweeps over network size, exponent fitting and proof-chain bound checks."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from rc_lab import seeding
from rc_lab.dist import PaperDistribution
from rc_lab.errors import DomainError, RcLabError
from rc_lab.sim import NetworkConfig, Policy, ThroughputEstimate, simulate_trials, summarize


def m_rule(n, delta):
    """Number of active pairs: ``n^(1/3 - delta)`` rounded half up, at least 1."""
    if int(n) != n or n < 2:
        raise DomainError(f"m_rule needs an integer n >= 2, got {n}")
    if not 0.0 < delta < 1.0 / 3.0:
        raise DomainError(f"delta must lie in (0, 1/3), got {delta}")
    return max(1, math.floor(n ** (1.0 / 3.0 - delta) + 0.5))


def markov_bound(beta, noise, mean_gain, m):
    """Markov bound ``beta (N0 + (m-1) mean) / (2 beta mean m)`` on the overshoot event."""
    if m < 1 or not mean_gain > 0.0 or not beta > 0.0:
        raise DomainError("markov bound needs m >= 1, beta > 0, mean > 0")
    return beta * (noise + (m - 1) * mean_gain) / (2.0 * beta * mean_gain * m)


def interference_threshold(mean_gain, m):
    """Level ``2 mean m`` that noise plus interference must stay under.

    The overshoot event ``beta (N0 + I) > 2 beta mean m`` does not depend on
    ``beta``, which cancels from both sides.
    """
    return 2.0 * mean_gain * m


@dataclass(frozen=True)
class BoundCheck:
    markov_event_prob: float
    markov_bound: float
    tail_event_prob: float
    quarter_ratio: float


def bound_checks(cfg, outcomes):
    """Empirical frequencies of the events used in the achievability argument.

    All events are read at the weakest active receiver (smallest selected
    direct gain) of each trial.
    """
    if not outcomes:
        raise DomainError("bound checks need at least one outcome")
    if cfg.policy is not Policy.TOP_M:
        raise DomainError("bound checks apply to the TopM policy only")
    m = cfg.m
    mean_gain = cfg.distribution.mean()
    level = 2.0 * cfg.beta * mean_gain * m
    weakest_direct = np.array([o.direct_gains[-1] for o in outcomes])
    weakest_interf = np.array([o.interference[-1] for o in outcomes])
    overshoot = cfg.noise + weakest_interf > interference_threshold(mean_gain, m)
    successes = sum(o.successes for o in outcomes)
    return BoundCheck(
        markov_event_prob=float(np.mean(overshoot)),
        markov_bound=markov_bound(cfg.beta, cfg.noise, mean_gain, m),
        tail_event_prob=float(np.mean(weakest_direct > level)),
        quarter_ratio=successes / (len(outcomes) * m),
    )


def markov_check(d, m, beta, noise, trials, stream):
    """Overshoot frequency of ``N0 + sum of m-1 i.i.d. gains`` and its Markov bound.

    Returns ``(empirical, bound)``.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    mean_gain = d.mean()
    if m > 1:
        sums = d.sample_iid_array((int(trials), m - 1), stream).sum(axis=1)
    else:
        sums = np.zeros(int(trials))
    empirical = float(np.mean(noise + sums > interference_threshold(mean_gain, m)))
    return empirical, markov_bound(beta, noise, mean_gain, m)


@dataclass(frozen=True)
class SweepPlan:
    n_grid: tuple
    epsilon: float = 0.3
    delta: float = None
    beta: float = 1.0
    noise: float = 1.0
    trials: int = 10_000
    seed: int = 42
    policy: Policy = Policy.TOP_M
    oracle_mode: bool = False
    m: int = None

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.delta is None:
            object.__setattr__(self, "delta", self.epsilon / 3.0)
        if not grid:
            raise DomainError("n_grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError(f"n_grid must be strictly ascending, got {grid}")
        if not 0.0 < self.delta < 1.0 / 3.0:
            raise DomainError(f"delta must lie in (0, 1/3), got {self.delta}")
        for n in grid:
            if self.m is not None and not 1 <= self.m <= n:
                raise DomainError(f"fixed m={self.m} exceeds n={n}")
            self.m_for(n)

    @property
    def distribution(self):
        return PaperDistribution(self.epsilon)

    def m_for(self, n):
        return self.m if self.m is not None else m_rule(n, self.delta)

    def config_for(self, index):
        n = self.n_grid[index]
        return NetworkConfig(
            n=n,
            m=self.m_for(n),
            beta=self.beta,
            noise=self.noise,
            distribution=self.distribution,
            policy=self.policy,
            trials=self.trials,
            seed=seeding.mix(self.seed, index),
            oracle_mode=self.oracle_mode,
        )

    def describe(self):
        return {
            "n_grid": list(self.n_grid),
            "epsilon": self.epsilon,
            "delta": self.delta,
            "beta": self.beta,
            "noise": self.noise,
            "trials": self.trials,
            "seed": self.seed,
            "policy": self.policy.value,
            "oracle_mode": self.oracle_mode,
            "m": self.m,
        }


@dataclass(frozen=True)
class SweepRow:
    n: int
    m: int
    estimate: ThroughputEstimate
    bounds: BoundCheck = None


class SweepError(RcLabError):
    """A grid point failed; ``rows`` keeps the points completed before it."""

    def __init__(self, message, rows, n):
        super().__init__(message)
        self.rows = rows
        self.n = n


def run_sweep(plan, threads=1):
    """Estimate throughput at each grid size, in grid order.

    Grid point ``k`` runs under seed ``mix(plan.seed, k)``. Bound checks
    reuse the same trials and are left as ``None`` for RandomM.
    """
    rows = []
    for index, n in enumerate(plan.n_grid):
        try:
            cfg = plan.config_for(index)
            outcomes = simulate_trials(cfg, threads)
            bounds = bound_checks(cfg, outcomes) if cfg.policy is Policy.TOP_M else None
            rows.append(SweepRow(n, cfg.m, summarize(outcomes, cfg.m), bounds))
        except (RcLabError, ValueError, ArithmeticError) as exc:
            raise SweepError(f"grid point n={n} failed: {exc}", rows, n) from exc
    return rows


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of ``log mean_M = intercept + exponent log n``."""

    exponent: float
    intercept: float
    r_squared: float
    exponent_stderr: float
    points: int
    ci_low: float = field(default=math.nan)
    ci_high: float = field(default=math.nan)

    def predict(self, n):
        return np.exp(self.intercept + self.exponent * np.log(np.asarray(n, dtype=float)))


def fit_exponent(rows, confidence=0.95):
    """Fit a power law to ``(n, mean_M)`` pairs in log-log space.

    Unweighted OLS; the confidence interval on the exponent uses the
    Student t quantile with ``points - 2`` degrees of freedom.
    """
    rows = [(float(n), float(y)) for n, y in rows]
    if len(rows) < 3:
        raise DomainError(f"exponent fit needs at least 3 points, got {len(rows)}")
    if any(not y > 0.0 for _, y in rows) or any(not n > 0.0 for n, _ in rows):
        raise DomainError("exponent fit needs positive n and mean_M")
    x = np.log([n for n, _ in rows])
    y = np.log([v for _, v in rows])
    k = x.size
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DomainError("exponent fit needs at least two distinct n")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    sse = float(resid @ resid)
    yc = y - y.mean()
    sst = float(yc @ yc)
    r_squared = 1.0 - sse / sst if sst > 0.0 else 1.0
    r_squared = min(1.0, max(0.0, r_squared))
    stderr = math.sqrt(sse / (k - 2) / sxx)
    half = float(stats.t.ppf(0.5 + confidence / 2.0, k - 2)) * stderr
    return ScalingFit(slope, intercept, r_squared, stderr, k, slope - half, slope + half)


def upper_bound_reference(n_grid, c=1.0):
    """Reference curve ``c n^(1/3)`` for plotting next to sweep results."""
    if not c > 0.0:
        raise DomainError(f"c must be positive, got {c}")
    return [(int(n), c * _cbrt(n)) for n in n_grid]


def _cbrt(n):
    # exact on perfect cubes, unlike n ** (1/3)
    r = round(n ** (1.0 / 3.0))
    return float(r) if r**3 == n else float(np.cbrt(n))
