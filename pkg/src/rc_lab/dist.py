"""Channel-power parent distributions.

Every member of the family is a law on ``[0, inf)`` with finite mean and
variance. Sampling is by inverse transform only, so a sample is a fixed
function of the uniform stream it consumes.
"""

import abc
import math

import numpy as np
from scipy.integrate import quad

from rc_lab.errors import DegenerateError, DomainError, UnsupportedLawError

# absolute tolerance in u-space for the generic quantile search
BISECTION_TOL = 1e-12


def _as_output(values, scalar):
    return float(values) if scalar else values


class ParentDistribution(abc.ABC):
    """Common contract for channel-power laws.

    Subclasses must provide :meth:`density`, :meth:`survival`, :meth:`mean`
    and :meth:`variance`. The quantile and inverse survival functions fall
    back to bisection on the cumulative; members with a closed form
    should override them.
    """

    @abc.abstractmethod
    def density(self, x):
        """Probability density at ``x``; zero below the support."""

    @abc.abstractmethod
    def survival(self, x):
        """Upper tail ``1 - F(x)``, computed without cancellation."""

    @abc.abstractmethod
    def mean(self):
        pass

    @abc.abstractmethod
    def variance(self):
        pass

    def cumulative(self, x):
        scalar = np.ndim(x) == 0
        return _as_output(1.0 - np.asarray(self.survival(x), dtype=float), scalar)

    def moments(self):
        """Return ``(mean, variance)`` of the law, both exact."""
        return self.mean(), self.variance()

    def quantile(self, u):
        """Smallest ``x`` with ``cumulative(x) >= u``, for ``0 <= u < 1``."""
        scalar = np.ndim(u) == 0
        u = _check_probability(u)
        out = np.array([self._bisect(float(v)) for v in u.ravel()]).reshape(u.shape)
        return _as_output(out, scalar)

    def isf(self, q):
        """Inverse survival: ``quantile(1 - q)`` for ``0 < q <= 1``.

        Taking the upper-tail mass directly keeps resolution when ``q`` is
        tiny, where ``1 - q`` would round to one.
        """
        scalar = np.ndim(q) == 0
        q = np.asarray(q, dtype=float)
        if np.any(~(q > 0.0)) or np.any(q > 1.0):
            raise DomainError("tail probability must lie in (0, 1]")
        out = np.array([self._bisect(1.0 - float(v)) for v in q.ravel()]).reshape(q.shape)
        return _as_output(out, scalar)

    def _bisect(self, u):
        if u <= 0.0:
            return 0.0
        lo, hi = 0.0, 1.0
        while self.cumulative(hi) < u:
            lo, hi = hi, 2.0 * hi
            if not math.isfinite(hi):
                raise DegenerateError(f"no finite quantile for u={u}")
        # invariant: cumulative(lo) < u <= cumulative(hi)
        while self.cumulative(hi) - self.cumulative(lo) > BISECTION_TOL:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self.cumulative(mid) >= u:
                hi = mid
            else:
                lo = mid
        return hi

    def von_mises_ratio(self, x):
        """Hazard-type ratio ``x f(x) / (1 - F(x))``.

        Raises :class:`DegenerateError` once the tail mass has underflowed.
        """
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        if np.any(~(x > 0.0)):
            raise DomainError("von Mises ratio needs positive x")
        tail = np.asarray(self.survival(x), dtype=float)
        if np.any(tail <= 0.0):
            raise DegenerateError("cumulative equals 1 to machine precision")
        return _as_output(x * np.asarray(self.density(x), dtype=float) / tail, scalar)

    def sample_iid(self, count, stream):
        """Draw ``count`` inverse-transform samples from ``stream``.

        ``stream`` is anything with a numpy-style ``random(size)`` method
        returning uniforms on ``[0, 1)``.
        """
        if int(count) != count or count < 1:
            raise DomainError(f"count must be a positive integer, got {count}")
        return self.quantile(np.asarray(stream.random(int(count)), dtype=float))

    def sample_iid_array(self, shape, stream):
        """Inverse-transform samples filling ``shape`` (row-major stream order)."""
        return self.quantile(np.asarray(stream.random(shape), dtype=float))

    def params(self):
        return {}

    def describe(self):
        return {"family": type(self).__name__, **self.params()}


def _check_probability(u):
    u = np.asarray(u, dtype=float)
    if np.any(~(u >= 0.0)) or np.any(u >= 1.0):
        raise DomainError("quantile needs 0 <= u < 1")
    return u


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("density is defined for finite x only")
    return x


class PaperDistribution(ParentDistribution):
    """Shifted Pareto law ``f(x) = (2+eps) (1+x)^-(3+eps)`` on ``x >= 0``.

    Its tail index ``2 + eps`` keeps the mean and variance finite for
    every ``eps > 0``, and the von Mises ratio tends to ``2 + eps``.
    """

    def __init__(self, epsilon):
        epsilon = float(epsilon)
        if not (epsilon > 0.0) or not math.isfinite(epsilon):
            raise UnsupportedLawError(
                f"epsilon must be strictly positive and finite, got {epsilon}"
            )
        self.epsilon = epsilon
        self.alpha = 2.0 + epsilon

    def __repr__(self):
        return f"PaperDistribution(epsilon={self.epsilon!r})"

    def __eq__(self, other):
        return type(other) is type(self) and other.epsilon == self.epsilon

    def __hash__(self):
        return hash((type(self).__name__, self.epsilon))

    def params(self):
        return {"epsilon": self.epsilon}

    def density(self, x):
        scalar = np.ndim(x) == 0
        x = _check_finite(x)
        xs = np.maximum(x, 0.0)
        out = np.where(x >= 0.0, self.alpha * np.exp(-(self.alpha + 1.0) * np.log1p(xs)), 0.0)
        return _as_output(out, scalar)

    def survival(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 0.0)
        out = np.where(x > 0.0, np.exp(-self.alpha * np.log1p(xs)), 1.0)
        return _as_output(out, scalar)

    def cumulative(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 0.0)
        out = np.where(x > 0.0, -np.expm1(-self.alpha * np.log1p(xs)), 0.0)
        return _as_output(out, scalar)

    def quantile(self, u):
        scalar = np.ndim(u) == 0
        u = _check_probability(u)
        out = np.expm1(-np.log1p(-u) / self.alpha)
        return _as_output(out, scalar)

    def isf(self, q):
        scalar = np.ndim(q) == 0
        q = np.asarray(q, dtype=float)
        if np.any(~(q > 0.0)) or np.any(q > 1.0):
            raise DomainError("tail probability must lie in (0, 1]")
        return _as_output(np.expm1(-np.log(q) / self.alpha), scalar)

    def mean(self):
        return 1.0 / (1.0 + self.epsilon)

    def variance(self):
        eps = self.epsilon
        return (2.0 + eps) / ((1.0 + eps) ** 2 * eps)

    def von_mises_ratio(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        if np.any(~(x > 0.0)):
            raise DomainError("von Mises ratio needs positive x")
        if np.any(np.isinf(x)):
            raise DegenerateError("cumulative equals 1 to machine precision")
        return _as_output(self.alpha * x / (1.0 + x), scalar)

    def von_mises_limit(self):
        return self.alpha


class ExponentialDistribution(ParentDistribution):
    """Exponential channel power (Rayleigh fading), a light-tailed baseline."""

    def __init__(self, rate=1.0):
        rate = float(rate)
        if not (rate > 0.0) or not math.isfinite(rate):
            raise UnsupportedLawError(f"rate must be strictly positive, got {rate}")
        self.rate = rate

    def __repr__(self):
        return f"ExponentialDistribution(rate={self.rate!r})"

    def __eq__(self, other):
        return type(other) is type(self) and other.rate == self.rate

    def __hash__(self):
        return hash((type(self).__name__, self.rate))

    def params(self):
        return {"rate": self.rate}

    def density(self, x):
        scalar = np.ndim(x) == 0
        x = _check_finite(x)
        out = np.where(x >= 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)
        return _as_output(out, scalar)

    def survival(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        out = np.where(x > 0.0, np.exp(-self.rate * np.maximum(x, 0.0)), 1.0)
        return _as_output(out, scalar)

    def cumulative(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        out = np.where(x > 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)
        return _as_output(out, scalar)

    def quantile(self, u):
        scalar = np.ndim(u) == 0
        u = _check_probability(u)
        return _as_output(-np.log1p(-u) / self.rate, scalar)

    def isf(self, q):
        scalar = np.ndim(q) == 0
        q = np.asarray(q, dtype=float)
        if np.any(~(q > 0.0)) or np.any(q > 1.0):
            raise DomainError("tail probability must lie in (0, 1]")
        return _as_output(-np.log(q) / self.rate, scalar)

    def mean(self):
        return 1.0 / self.rate

    def variance(self):
        return 1.0 / self.rate**2


def quadrature_moments(d):
    """Mean and variance by numerical integration of the density.

    Used as a cross-check on the closed forms; the range is split at 1 so
    the heavy tail goes through quad's infinite-interval transform.
    """

    def raw(k):
        head = quad(lambda x: x**k * d.density(x), 0.0, 1.0, epsabs=0.0, epsrel=1e-13)[0]
        tail = quad(
            lambda x: x**k * d.density(x), 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=500
        )[0]
        return head + tail

    m1 = raw(1)
    return m1, raw(2) - m1 * m1


def from_name(family, **params):
    """Build a distribution from its family name, as used in config files."""
    families = {
        "paper": PaperDistribution,
        "PaperDistribution": PaperDistribution,
        "exponential": ExponentialDistribution,
        "ExponentialDistribution": ExponentialDistribution,
    }
    try:
        cls = families[family]
    except KeyError:
        raise DomainError(f"unknown distribution family {family!r}") from None
    return cls(**params)
