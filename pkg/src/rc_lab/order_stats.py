"""Intermediate order statistics.

Covers the Falk centering/scale pair for the i-th largest of n draws, an
exact O(m) sampler for the top m order statistics, and Kolmogorov-Smirnov
diagnostics for the normal limit.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from rc_lab.errors import DegenerateError, DomainError

SPACING = "spacing"
NAIVE = "naive"


@dataclass(frozen=True)
class OrderStatSpec:
    """The ``i``-th largest of ``n`` i.i.d. draws."""

    n: int
    i: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if int(self.i) != self.i or not 1 <= self.i <= self.n:
            raise DomainError(f"need 1 <= i <= n, got i={self.i}, n={self.n}")

    @property
    def fraction(self):
        return self.i / self.n


def intermediate_regime(specs):
    """True when ``i`` grows and ``i/n`` shrinks along the ordered specs."""
    specs = list(specs)
    if len(specs) < 2:
        return False
    for a, b in zip(specs, specs[1:]):
        if not (b.n > a.n and b.i > a.i and b.fraction < a.fraction):
            return False
    return True


def ceil_cube_root(n):
    """Exact ``ceil(n ** (1/3))`` for positive integers."""
    r = max(1, round(n ** (1.0 / 3.0)))
    while r**3 < n:
        r += 1
    while r > 1 and (r - 1) ** 3 >= n:
        r -= 1
    return r


@dataclass(frozen=True)
class FalkNormalization:
    a_n: float
    b_n: float

    def normalize(self, x):
        return (np.asarray(x, dtype=float) - self.a_n) / self.b_n


def falk_constants(d, spec):
    """Centering ``a_n = F^-1(1 - i/n)`` and scale ``b_n = sqrt(i) / (n f(a_n))``."""
    if spec.i >= spec.n:
        raise DomainError(f"falk constants need i < n, got i={spec.i}, n={spec.n}")
    a_n = float(d.isf(spec.i / spec.n))
    f_a = float(d.density(a_n))
    if not f_a > 0.0:
        raise DegenerateError(f"density vanishes at a_n={a_n}")
    b_n = math.sqrt(spec.i) / (spec.n * f_a)
    return FalkNormalization(a_n=a_n, b_n=b_n)


def _top_tail_masses(n, m, exponentials):
    """Upper-tail masses ``1 - U_(n-k)`` of the top ``m`` uniform order statistics.

    Uses the descending spacing recursion in log space:
    ``log U_(n-k) = log U_(n-k+1) - E_{k+1} / (n-k)`` with ``E`` standard
    exponential, so ``n`` up to 1e8 and beyond loses no precision.
    ``exponentials`` has shape ``(..., m)``.
    """
    divisors = n - np.arange(m, dtype=float)
    log_u = -np.cumsum(exponentials / divisors, axis=-1)
    return -np.expm1(log_u)


def _tail_to_values(d, q):
    # a tail mass can round to 0 only when E/n underflows; treat it as the
    # smallest positive double so isf stays finite
    return d.isf(np.maximum(q, np.finfo(float).tiny))


def sample_top_order_stats(d, n, m, stream, method=SPACING):
    """Joint sample of the ``m`` largest of ``n`` i.i.d. draws, descending.

    The default spacing method costs O(m) and never materialises the
    ``n`` draws. ``method="naive"`` draws all ``n`` values and sorts them;
    it exists as the verification oracle, with ties broken by draw index.
    """
    _check_sizes(n, m)
    if method == SPACING:
        q = _top_tail_masses(n, m, stream.standard_exponential(m))
        return _tail_to_values(d, q)
    if method == NAIVE:
        return top_m_of(d.sample_iid(n, stream), m)
    raise DomainError(f"unknown sampler method {method!r}")


def top_m_of(values, m):
    """The ``m`` largest entries of ``values``, descending, ties by index."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if m < n:
        threshold = np.partition(values, n - m)[n - m]
        candidates = np.flatnonzero(values >= threshold)
    else:
        candidates = np.arange(n)
    order = np.argsort(-values[candidates], kind="stable")
    return values[candidates[order[:m]]]


def sample_kth_largest(d, n, i, replicates, stream):
    """``replicates`` independent copies of the ``i``-th largest of ``n``.

    Vectorised form of the spacing sampler keeping only rank ``i``.
    """
    _check_sizes(n, i)
    e = stream.standard_exponential((int(replicates), i))
    q = _top_tail_masses(n, i, e)[:, -1]
    return _tail_to_values(d, q)


def _check_sizes(n, m):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    if m > n:
        raise DomainError(f"cannot take the top {m} of {n} draws")


def standard_normal_cdf(x):
    """Standard normal cumulative via the complementary error function."""
    scalar = np.ndim(x) == 0
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if scalar else out


def ks_statistic_vs_normal(samples):
    """Two-sided sup distance between the empirical cdf of ``samples`` and N(0,1)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    k = x.size
    if k == 0:
        raise DomainError("KS statistic needs at least one sample")
    cdf = standard_normal_cdf(x)
    steps = np.arange(1, k + 1) / k
    d_plus = np.max(steps - cdf)
    d_minus = np.max(cdf - (steps - 1.0 / k))
    return float(max(d_plus, d_minus))


def normality_diagnostic(d, spec, replicates, stream):
    """KS distance of Falk-normalised ``i``-th largest statistics to N(0,1).

    Returns ``(ks, normalized)``; ``normalized`` holds one value per
    replicate, in generation order, for export.
    """
    if int(replicates) != replicates or replicates < 1:
        raise DomainError(f"replicates must be a positive integer, got {replicates}")
    norm = falk_constants(d, spec)
    draws = sample_kth_largest(d, spec.n, spec.i, replicates, stream)
    normalized = norm.normalize(draws)
    return ks_statistic_vs_normal(normalized), normalized
