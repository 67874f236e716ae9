"""Univariate distributions used throughout the package.

Every distribution is an immutable dataclass that validates its parameters
on construction. Log densities are the canonical evaluation path; ``pdf`` is
``exp(logpdf)``. All methods accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import DomainError, ParameterError, UnsupportedOperation

__all__ = [
    "Dist", "Normal", "StudentT", "Gamma", "InverseGamma", "Beta", "Uniform",
    "Poisson", "Binomial", "NegBinomial", "Bernoulli", "Lomax", "Dirichlet",
    "pdf", "log_pdf", "cdf", "quantile", "sample",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be finite and > 0, got {value!r}")


def _probability(name, value, closed=False):
    ok = 0.0 <= value <= 1.0 if closed else 0.0 < value < 1.0
    if not ok:
        bounds = "[0, 1]" if closed else "(0, 1)"
        raise ParameterError(f"{name} must lie in {bounds}, got {value!r}")


def _check_unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("quantile level must lie strictly inside (0, 1)")
    return u


def _out(values):
    values = np.asarray(values)
    return values.item() if values.ndim == 0 else values


class Dist:
    """Common interface; subclasses provide ``logpdf``, ``cdf``, ``quantile``
    and ``sample``."""

    discrete = False

    def pdf(self, x):
        return _out(np.exp(self.logpdf(x)))

    def logpdf(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def cdf(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def quantile(self, u):  # pragma: no cover - abstract
        raise NotImplementedError

    def sample(self, rng, size=None):  # pragma: no cover - abstract
        raise NotImplementedError

    def expectation(self):
        raise UnsupportedOperation(f"{type(self).__name__} has no closed-form mean")


# --------------------------------------------------------------------------
# continuous families
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Normal(Dist):
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        _positive("sd", self.sd)

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.sd
        return _out(-0.5 * z * z - math.log(self.sd) - _LOG_SQRT_2PI)

    def cdf(self, x):
        return _out(special.ndtr((np.asarray(x, dtype=float) - self.mean) / self.sd))

    def quantile(self, u):
        return _out(self.mean + self.sd * special.ndtri(_check_unit(u)))

    def sample(self, rng, size=None):
        return rng.normal(self.mean, self.sd, size)

    def expectation(self):
        return self.mean


@dataclass(frozen=True)
class StudentT(Dist):
    """Location-scale Student-t; ``scale`` is a scale, not a variance."""

    loc: float = 0.0
    scale: float = 1.0
    df: float = 1.0

    def __post_init__(self):
        _positive("scale", self.scale)
        _positive("df", self.df)

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        nu = self.df
        const = (special.gammaln(0.5 * (nu + 1.0)) - special.gammaln(0.5 * nu)
                 - 0.5 * math.log(nu * math.pi) - math.log(self.scale))
        return _out(const - 0.5 * (nu + 1.0) * np.log1p(z * z / nu))

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return _out(special.stdtr(self.df, z))

    def quantile(self, u):
        return _out(self.loc + self.scale * special.stdtrit(self.df, _check_unit(u)))

    def sample(self, rng, size=None):
        return self.loc + self.scale * rng.standard_t(self.df, size)

    def expectation(self):
        if self.df <= 1:
            return math.inf
        return self.loc


@dataclass(frozen=True)
class Gamma(Dist):
    """Gamma with shape and *rate* (mean shape/rate)."""

    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("rate", self.rate)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.shape, self.rate
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * math.log(b) - special.gammaln(a) + special.xlogy(a - 1.0, x) - b * x
        return _out(np.where(x >= 0, out, -np.inf))

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(special.gammainc(self.shape, self.rate * x))

    def quantile(self, u):
        return _out(special.gammaincinv(self.shape, _check_unit(u)) / self.rate)

    def sample(self, rng, size=None):
        # numpy's Generator.gamma is the Marsaglia-Tsang rejection sampler
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def expectation(self):
        return self.shape / self.rate


@dataclass(frozen=True)
class InverseGamma(Dist):
    shape: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("scale", self.scale)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * math.log(b) - special.gammaln(a) - (a + 1.0) * np.log(x) - b / x
            out = np.where(x > 0, out, -np.inf)
        return _out(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(x > 0, special.gammaincc(self.shape, self.scale / np.where(x > 0, x, 1.0)), 0.0)
        return _out(out)

    def quantile(self, u):
        return _out(self.scale / special.gammainccinv(self.shape, _check_unit(u)))

    def sample(self, rng, size=None):
        return self.scale / rng.gamma(self.shape, 1.0, size)

    def expectation(self):
        return self.scale / (self.shape - 1.0) if self.shape > 1 else math.inf


@dataclass(frozen=True)
class Beta(Dist):
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (special.xlogy(self.a - 1.0, x) + special.xlog1py(self.b - 1.0, -x)
                   - special.betaln(self.a, self.b))
            out = np.where((x >= 0) & (x <= 1), out, -np.inf)
        return _out(out)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return _out(special.betainc(self.a, self.b, x))

    def quantile(self, u):
        return _out(special.betaincinv(self.a, self.b, _check_unit(u)))

    def sample(self, rng, size=None):
        return rng.beta(self.a, self.b, size)

    def expectation(self):
        return self.a / (self.a + self.b)


@dataclass(frozen=True)
class Uniform(Dist):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ParameterError(f"need lo < hi, got ({self.lo}, {self.hi})")

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return _out(np.where(inside, -math.log(self.hi - self.lo), -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0))

    def quantile(self, u):
        return _out(self.lo + (self.hi - self.lo) * _check_unit(u))

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def expectation(self):
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class Lomax(Dist):
    """Lomax (Pareto type II) with density a/s * (1 + x/s)^-(a+1) on x >= 0."""

    scale: float = 1.0
    shape: float = 1.0

    def __post_init__(self):
        _positive("scale", self.scale)
        _positive("shape", self.shape)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            out = (math.log(self.shape) - math.log(self.scale)
                   - (self.shape + 1.0) * np.log1p(x / self.scale))
        return _out(np.where(x >= 0, out, -np.inf))

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(-np.expm1(-self.shape * np.log1p(x / self.scale)))

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(np.exp(-self.shape * np.log1p(x / self.scale)))

    def quantile(self, u):
        u = _check_unit(u)
        return _out(self.scale * np.expm1(-np.log1p(-u) / self.shape))

    def sample(self, rng, size=None):
        u = rng.random(size)
        return self.scale * np.expm1(-np.log1p(-u) / self.shape)

    def expectation(self):
        return self.scale / (self.shape - 1.0) if self.shape > 1 else math.inf


# --------------------------------------------------------------------------
# discrete families
# --------------------------------------------------------------------------

class _Discrete(Dist):
    discrete = True

    def _frozen(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def quantile(self, u):
        return _out(self._frozen().ppf(_check_unit(u)).astype(np.int64))

    def support_upper(self, tail=1e-12):
        """Smallest integer whose upper tail mass is below ``tail``."""
        return int(self._frozen().isf(tail)) + 1


def _is_integer(x):
    return np.equal(np.floor(x), x)


@dataclass(frozen=True)
class Poisson(_Discrete):
    rate: float = 1.0

    def __post_init__(self):
        _positive("rate", self.rate)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        ok = (x >= 0) & _is_integer(x)
        xs = np.where(ok, x, 0.0)
        out = xs * math.log(self.rate) - self.rate - special.gammaln(xs + 1.0)
        return _out(np.where(ok, out, -np.inf))

    def cdf(self, x):
        k = np.floor(np.asarray(x, dtype=float))
        return _out(np.where(k >= 0, special.pdtr(np.maximum(k, 0), self.rate), 0.0))

    def _frozen(self):
        return stats.poisson(self.rate)

    def sample(self, rng, size=None):
        return rng.poisson(self.rate, size)

    def expectation(self):
        return self.rate


@dataclass(frozen=True)
class Binomial(_Discrete):
    trials: int = 1
    prob: float = 0.5

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 0:
            raise ParameterError(f"trials must be a nonnegative integer, got {self.trials!r}")
        _probability("prob", self.prob, closed=True)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        n, p = float(self.trials), self.prob
        ok = (x >= 0) & (x <= n) & _is_integer(x)
        xs = np.where(ok, x, 0.0)
        out = (special.gammaln(n + 1.0) - special.gammaln(xs + 1.0) - special.gammaln(n - xs + 1.0)
               + special.xlogy(xs, p) + special.xlog1py(n - xs, -p))
        return _out(np.where(ok, out, -np.inf))

    def cdf(self, x):
        k = np.floor(np.asarray(x, dtype=float))
        kc = np.clip(k, 0, self.trials)
        out = np.where(k < 0, 0.0, np.where(k >= self.trials, 1.0, special.bdtr(kc, self.trials, self.prob)))
        return _out(out)

    def _frozen(self):
        return stats.binom(self.trials, self.prob)

    def support_upper(self, tail=1e-12):
        return int(self.trials)

    def sample(self, rng, size=None):
        return rng.binomial(self.trials, self.prob, size)

    def expectation(self):
        return self.trials * self.prob


@dataclass(frozen=True)
class NegBinomial(_Discrete):
    """Number of failures before ``successes`` successes, success prob ``prob``."""

    successes: float = 1.0
    prob: float = 0.5

    def __post_init__(self):
        _positive("successes", self.successes)
        _probability("prob", self.prob)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        r, p = self.successes, self.prob
        ok = (x >= 0) & _is_integer(x)
        xs = np.where(ok, x, 0.0)
        out = (special.gammaln(xs + r) - special.gammaln(r) - special.gammaln(xs + 1.0)
               + r * math.log(p) + xs * math.log1p(-p))
        return _out(np.where(ok, out, -np.inf))

    def cdf(self, x):
        k = np.floor(np.asarray(x, dtype=float))
        out = np.where(k >= 0, special.betainc(self.successes, np.maximum(k, 0) + 1.0, self.prob), 0.0)
        return _out(out)

    def _frozen(self):
        return stats.nbinom(self.successes, self.prob)

    def sample(self, rng, size=None):
        return rng.negative_binomial(self.successes, self.prob, size)

    def expectation(self):
        return self.successes * (1.0 - self.prob) / self.prob


@dataclass(frozen=True)
class Bernoulli(_Discrete):
    prob: float = 0.5

    def __post_init__(self):
        _probability("prob", self.prob, closed=True)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(x == 1, np.log(self.prob), np.where(x == 0, np.log1p(-self.prob), -np.inf))
        return _out(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x < 0, 0.0, np.where(x < 1, 1.0 - self.prob, 1.0)))

    def quantile(self, u):
        u = _check_unit(u)
        return _out((u > 1.0 - self.prob).astype(np.int64))

    def support_upper(self, tail=1e-12):
        return 1

    def sample(self, rng, size=None):
        return _out(np.asarray(rng.random(size) < self.prob).astype(np.int64))

    def expectation(self):
        return self.prob


# --------------------------------------------------------------------------
# multivariate helper
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Dirichlet(Dist):
    shape: tuple = field(default=(1.0,))

    def __post_init__(self):
        shape = tuple(float(a) for a in np.atleast_1d(self.shape))
        for a in shape:
            _positive("Dirichlet shape entry", a)
        object.__setattr__(self, "shape", shape)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        a = np.asarray(self.shape)
        if x.shape[-1] != a.size:
            raise DomainError("Dirichlet point has the wrong dimension")
        on_simplex = np.all(x >= 0, axis=-1) & np.isclose(x.sum(axis=-1), 1.0, atol=1e-10)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (special.gammaln(a.sum()) - special.gammaln(a).sum()
                   + special.xlogy(a - 1.0, x).sum(axis=-1))
        return _out(np.where(on_simplex, out, -np.inf))

    def cdf(self, x):
        raise UnsupportedOperation("Dirichlet has no univariate cdf")

    def quantile(self, u):
        raise UnsupportedOperation("Dirichlet has no univariate quantile")

    def sample(self, rng, size=None):
        return rng.dirichlet(self.shape, size)

    def expectation(self):
        a = np.asarray(self.shape)
        return a / a.sum()


# --------------------------------------------------------------------------
# functional aliases
# --------------------------------------------------------------------------

def pdf(d: Dist, x):
    return d.pdf(x)


def log_pdf(d: Dist, x):
    return d.logpdf(x)


def cdf(d: Dist, x):
    return d.cdf(x)


def quantile(d: Dist, u):
    return d.quantile(u)


def sample(d: Dist, rng, size=None):
    return d.sample(rng, size)
