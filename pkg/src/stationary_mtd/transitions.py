"""Stationary transition components.

Each family describes the conditional law of ``U`` given ``V = y`` for an
exchangeable pair ``(U, V)`` whose two marginals coincide. Mixing such
components over lags therefore leaves the common marginal invariant.

All evaluators broadcast over numpy arrays: ``logpdf(x, y)`` evaluates the
transition density of ``x`` given lagged value ``y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from . import dists
from .errors import DomainError, NumericalFailure, ParameterError

__all__ = [
    "TransitionFamily", "GaussianT", "StudentTT", "PoissonT", "NegBinT",
    "BernoulliT", "BinomialT", "LomaxT", "GammaT", "InvarianceResult",
    "FAMILY_TAGS", "trans_pdf", "trans_logpdf", "trans_cdf", "trans_sample",
    "marginal_pdf", "cond_mean", "linear_coeffs", "check_invariance",
]

DISCRETE_TAIL = 1e-12
_GRID_SIGMA = 6.0


def _out(values):
    values = np.asarray(values)
    return values.item() if values.ndim == 0 else values


def _binom_logpmf(k, n, p):
    """Binomial log pmf with array-valued trials; -inf off support."""
    k, n = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(n, dtype=float))
    ok = (k >= 0) & (k <= n)
    ks = np.where(ok, k, 0.0)
    ns = np.where(ok, n, 0.0)
    out = (special.gammaln(ns + 1.0) - special.gammaln(ks + 1.0) - special.gammaln(ns - ks + 1.0)
           + special.xlogy(ks, p) + special.xlog1py(ns - ks, -p))
    return np.where(ok, out, -np.inf)


def _negbin_logpmf(k, r, p):
    k, r = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(r, dtype=float))
    ok = k >= 0
    ks = np.where(ok, k, 0.0)
    out = (special.gammaln(ks + r) - special.gammaln(r) - special.gammaln(ks + 1.0)
           + r * math.log(p) + ks * math.log1p(-p))
    return np.where(ok, out, -np.inf)


def _conv_log(x, y, log_first, log_second):
    """log sum_z exp(log_first(z, y) + log_second(x - z, y)), z = 0..min(x, y)."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if x.size == 0:
        return np.zeros(x.shape)
    zmax = int(max(np.max(np.minimum(x, y)), 0))
    z = np.arange(zmax + 1, dtype=float).reshape((-1,) + (1,) * x.ndim)
    valid = z <= np.minimum(x, y)
    with np.errstate(invalid="ignore"):
        terms = np.where(valid, log_first(z, y) + log_second(x - z, y), -np.inf)
    out = special.logsumexp(terms, axis=0)
    return np.where(x >= 0, out, -np.inf)


def _conv_cdf(x, y, log_first, second_cdf):
    x, y = np.broadcast_arrays(np.floor(np.asarray(x, dtype=float)), np.asarray(y, dtype=float))
    if x.size == 0:
        return np.zeros(x.shape)
    zmax = int(max(np.max(np.minimum(x, y)), 0))
    z = np.arange(zmax + 1, dtype=float).reshape((-1,) + (1,) * x.ndim)
    valid = z <= np.minimum(x, y)
    with np.errstate(invalid="ignore"):
        terms = np.where(valid, np.exp(log_first(z, y)) * second_cdf(x - z, y), 0.0)
    return np.where(x >= 0, np.clip(terms.sum(axis=0), 0.0, 1.0), 0.0)


@dataclass(frozen=True)
class InvarianceResult:
    residual: float
    tol: float
    n_points: int
    truncation: int | None = None

    @property
    def passed(self):
        return self.residual < self.tol

    def __float__(self):
        return float(self.residual)


class TransitionFamily:
    """Interface shared by all transition components."""

    tag = ""
    discrete = False
    lower = -math.inf

    # -- state space -------------------------------------------------------
    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        ok = np.isfinite(x) & (x >= self.lower)
        if self.discrete:
            ok &= np.floor(x) == x
        return ok

    def _check(self, x, what):
        if not np.all(self.in_support(x)):
            raise DomainError(f"{what} outside the state space of the {self.tag} family")

    # -- transition --------------------------------------------------------
    def logpdf(self, x, y):
        raise NotImplementedError

    def pdf(self, x, y):
        return _out(np.exp(self.logpdf(x, y)))

    def cdf(self, x, y):
        raise NotImplementedError

    def sample(self, y, rng):
        raise NotImplementedError

    def cond_mean(self, y):
        raise NotImplementedError

    def linear_coeffs(self):
        return None

    # -- invariant marginal -------------------------------------------------
    def marginal(self):
        """Closed-form marginal as a :class:`dists.Dist`, or None."""
        return None

    def marginal_logpdf(self, x):
        return self.marginal().logpdf(x)

    def marginal_pdf(self, x):
        return _out(np.exp(self.marginal_logpdf(x)))

    def marginal_cdf(self, x):
        return self.marginal().cdf(x)

    def marginal_quantile(self, u):
        return self.marginal().quantile(u)

    def marginal_sample(self, rng, size=None):
        return self.marginal().sample(rng, size)

    def marginal_moments(self):
        """First and second raw moments of the invariant marginal."""
        raise NotImplementedError

    def truncation(self, tail=DISCRETE_TAIL):
        """Upper truncation point of the marginal (discrete families)."""
        return self.marginal().support_upper(tail)

    def integration_points(self):
        return ()


# ==========================================================================
# bivariate distribution method
# ==========================================================================

def _open_unit(name, value):
    if not -1.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (-1, 1), got {value!r}")


def _pos(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class GaussianT(TransitionFamily):
    """Conditional of a bivariate normal with common N(mu, sigma2) marginals."""

    mu: float
    sigma2: float
    rho: float

    tag = "gaussian"

    def __post_init__(self):
        _pos("sigma2", self.sigma2)
        _open_unit("rho", self.rho)

    def _loc_sd(self, y):
        loc = (1.0 - self.rho) * self.mu + self.rho * np.asarray(y, dtype=float)
        return loc, math.sqrt(self.sigma2 * (1.0 - self.rho ** 2))

    def logpdf(self, x, y):
        loc, sd = self._loc_sd(y)
        z = (np.asarray(x, dtype=float) - loc) / sd
        return _out(-0.5 * z * z - math.log(sd) - 0.5 * math.log(2 * math.pi))

    def cdf(self, x, y):
        loc, sd = self._loc_sd(y)
        return _out(special.ndtr((np.asarray(x, dtype=float) - loc) / sd))

    def sample(self, y, rng):
        loc, sd = self._loc_sd(y)
        return rng.normal(loc, sd)

    def cond_mean(self, y):
        return _out(self._loc_sd(y)[0])

    def linear_coeffs(self):
        return (1.0 - self.rho) * self.mu, self.rho

    def marginal(self):
        return dists.Normal(self.mu, math.sqrt(self.sigma2))

    def marginal_moments(self):
        return self.mu, self.sigma2 + self.mu ** 2

    def integration_points(self):
        return (self.mu,)


@dataclass(frozen=True)
class StudentTT(TransitionFamily):
    """Conditional of a bivariate t built as a normal scale mixture.

    ``sigma`` is the marginal scale. The conditional scale squared is
    sigma^2 (1 - rho^2) (nu + d) / (nu + 1) with d = ((y - mu) / sigma)^2,
    and the conditional has nu + 1 degrees of freedom.
    """

    mu: float
    sigma: float
    nu: float
    rho: float

    tag = "student_t"

    def __post_init__(self):
        _pos("sigma", self.sigma)
        _pos("nu", self.nu)
        _open_unit("rho", self.rho)

    def _params(self, y):
        y = np.asarray(y, dtype=float)
        d = ((y - self.mu) / self.sigma) ** 2
        loc = (1.0 - self.rho) * self.mu + self.rho * y
        scale = self.sigma * np.sqrt((1.0 - self.rho ** 2) * (self.nu + d) / (self.nu + 1.0))
        return loc, scale, self.nu + 1.0

    def logpdf(self, x, y):
        loc, scale, df = self._params(y)
        z = (np.asarray(x, dtype=float) - loc) / scale
        const = (special.gammaln(0.5 * (df + 1.0)) - special.gammaln(0.5 * df)
                 - 0.5 * math.log(df * math.pi))
        return _out(const - np.log(scale) - 0.5 * (df + 1.0) * np.log1p(z * z / df))

    def cdf(self, x, y):
        loc, scale, df = self._params(y)
        return _out(special.stdtr(df, (np.asarray(x, dtype=float) - loc) / scale))

    def sample(self, y, rng):
        loc, scale, df = self._params(y)
        return loc + scale * rng.standard_t(df, np.shape(loc) or None)

    def cond_mean(self, y):
        return _out(self._params(y)[0])

    def linear_coeffs(self):
        return (1.0 - self.rho) * self.mu, self.rho

    def marginal(self):
        return dists.StudentT(self.mu, self.sigma, self.nu)

    def marginal_moments(self):
        if self.nu <= 2:
            raise NumericalFailure("Student-t marginal has no finite second moment (nu <= 2)")
        return self.mu, self.sigma ** 2 * self.nu / (self.nu - 2.0) + self.mu ** 2

    def integration_points(self):
        return (self.mu,)


@dataclass(frozen=True)
class PoissonT(TransitionFamily):
    """Binomial thinning of the lagged count plus a Poisson(lam) innovation."""

    lam: float
    gamma: float

    tag = "poisson"
    discrete = True
    lower = 0.0

    def __post_init__(self):
        _pos("lam", self.lam)
        _pos("gamma", self.gamma)

    @property
    def phi(self):
        return self.lam + self.gamma

    @property
    def thin_prob(self):
        return self.gamma / (self.lam + self.gamma)

    def _first(self, z, y):
        return _binom_logpmf(z, y, self.thin_prob)

    def _second(self, m, y):
        m = np.asarray(m, dtype=float)
        ms = np.where(m >= 0, m, 0.0)
        out = ms * math.log(self.lam) - self.lam - special.gammaln(ms + 1.0)
        return np.where(m >= 0, out, -np.inf)

    def logpdf(self, x, y):
        return _out(_conv_log(x, y, self._first, self._second))

    def cdf(self, x, y):
        def second_cdf(m, _y):
            return np.where(m >= 0, special.pdtr(np.maximum(m, 0), self.lam), 0.0)
        return _out(_conv_cdf(x, y, self._first, second_cdf))

    def sample(self, y, rng):
        y = np.asarray(y, dtype=np.int64)
        q = rng.poisson(self.lam, y.shape or None)
        return q + rng.binomial(y, self.thin_prob)

    def cond_mean(self, y):
        return _out(self.lam + self.thin_prob * np.asarray(y, dtype=float))

    def linear_coeffs(self):
        return self.lam, self.thin_prob

    def marginal(self):
        return dists.Poisson(self.phi)

    def marginal_moments(self):
        return self.phi, self.phi + self.phi ** 2


@dataclass(frozen=True)
class NegBinT(TransitionFamily):
    """Gamma-mixed bivariate Poisson; negative binomial marginal."""

    lam: float
    gamma: float
    k: float
    eta: float

    tag = "negbin"
    discrete = True
    lower = 0.0

    def __post_init__(self):
        for name in ("lam", "gamma", "k", "eta"):
            _pos(name, getattr(self, name))

    @property
    def thin_prob(self):
        return self.gamma / (self.lam + self.gamma)

    @property
    def innov_prob(self):
        return 1.0 - self.lam / (2.0 * self.lam + self.gamma + self.eta)

    def _first(self, z, y):
        return _binom_logpmf(z, y, self.thin_prob)

    def _second(self, m, y):
        return _negbin_logpmf(m, self.k + np.asarray(y, dtype=float), self.innov_prob)

    def logpdf(self, x, y):
        return _out(_conv_log(x, y, self._first, self._second))

    def cdf(self, x, y):
        def second_cdf(m, yy):
            m = np.asarray(m, dtype=float)
            r = self.k + np.asarray(yy, dtype=float)
            return np.where(m >= 0, special.betainc(r, np.maximum(m, 0) + 1.0, self.innov_prob), 0.0)
        return _out(_conv_cdf(x, y, self._first, second_cdf))

    def sample(self, y, rng):
        y = np.asarray(y, dtype=np.int64)
        return rng.binomial(y, self.thin_prob) + rng.negative_binomial(self.k + y, self.innov_prob)

    def cond_mean(self, y):
        a, b = self.linear_coeffs()
        return _out(a + b * np.asarray(y, dtype=float))

    def linear_coeffs(self):
        p = self.innov_prob
        odds = (1.0 - p) / p
        return self.k * odds, self.thin_prob + odds

    def marginal(self):
        return dists.NegBinomial(self.k, self.eta / (self.lam + self.gamma + self.eta))

    def marginal_moments(self):
        d = self.marginal()
        mean = d.expectation()
        var = d.successes * (1.0 - d.prob) / d.prob ** 2
        return mean, var + mean ** 2


def _check_bivariate_bernoulli(p1, p2):
    _pos("p1", p1)
    _pos("p2", p2)
    if not p1 + 2.0 * p2 < 1.0:
        raise ParameterError(f"need p1 + 2 p2 < 1, got p1={p1}, p2={p2}")


@dataclass(frozen=True)
class BernoulliT(TransitionFamily):
    p1: float
    p2: float

    tag = "bernoulli"
    discrete = True
    lower = 0.0

    def __post_init__(self):
        _check_bivariate_bernoulli(self.p1, self.p2)
        p00 = 1.0 - self.p1 - 2.0 * self.p2
        # cell[u, v]
        object.__setattr__(self, "_cells", np.array([[p00, self.p2], [self.p2, self.p1]]))

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        return (x == 0) | (x == 1)

    def success_prob(self, y):
        y = np.asarray(y, dtype=np.int64)
        cells = self._cells
        return _out(cells[1, y] / (cells[1, y] + cells[0, y]))

    def logpdf(self, x, y):
        x = np.asarray(x, dtype=float)
        p = np.asarray(self.success_prob(np.clip(np.asarray(y), 0, 1)))
        with np.errstate(divide="ignore"):
            out = np.where(x == 1, np.log(p), np.where(x == 0, np.log1p(-p), -np.inf))
        return _out(out)

    def cdf(self, x, y):
        x = np.asarray(x, dtype=float)
        p = np.asarray(self.success_prob(np.clip(np.asarray(y), 0, 1)))
        return _out(np.where(x < 0, 0.0, np.where(x < 1, 1.0 - p, 1.0)))

    def sample(self, y, rng):
        p = np.asarray(self.success_prob(y))
        return (rng.random(p.shape or None) < p).astype(np.int64)

    def cond_mean(self, y):
        return self.success_prob(y)

    def marginal(self):
        return dists.Bernoulli(self.p1 + self.p2)

    def truncation(self, tail=DISCRETE_TAIL):
        return 1

    def marginal_moments(self):
        p = self.p1 + self.p2
        return p, p


@dataclass(frozen=True)
class BinomialT(TransitionFamily):
    """Sum of ``n`` i.i.d. bivariate Bernoulli pairs."""

    n: int
    p1: float
    p2: float

    tag = "binomial"
    discrete = True
    lower = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        _check_bivariate_bernoulli(self.p1, self.p2)

    def in_support(self, x):
        return super().in_support(x) & (np.asarray(x, dtype=float) <= self.n)

    @property
    def keep_prob(self):
        return self.p1 / (self.p1 + self.p2)

    @property
    def birth_prob(self):
        return self.p2 / (1.0 - self.p1 - self.p2)

    def _first(self, z, y):
        return _binom_logpmf(z, y, self.keep_prob)

    def _second(self, m, y):
        return _binom_logpmf(m, self.n - np.asarray(y, dtype=float), self.birth_prob)

    def logpdf(self, x, y):
        return _out(_conv_log(x, y, self._first, self._second))

    def cdf(self, x, y):
        def second_cdf(m, yy):
            m = np.asarray(m, dtype=float)
            trials = self.n - np.asarray(yy, dtype=float)
            m, trials = np.broadcast_arrays(m, trials)
            inside = special.bdtr(np.floor(np.clip(m, 0, trials)).astype(np.int64),
                                  trials.astype(np.int64), self.birth_prob)
            return np.where(m < 0, 0.0, np.where(m >= trials, 1.0, inside))
        return _out(_conv_cdf(x, y, self._first, second_cdf))

    def sample(self, y, rng):
        y = np.asarray(y, dtype=np.int64)
        return rng.binomial(y, self.keep_prob) + rng.binomial(self.n - y, self.birth_prob)

    def cond_mean(self, y):
        a, b = self.linear_coeffs()
        return _out(a + b * np.asarray(y, dtype=float))

    def linear_coeffs(self):
        return self.n * self.birth_prob, self.keep_prob - self.birth_prob

    def marginal(self):
        return dists.Binomial(self.n, self.p1 + self.p2)

    def truncation(self, tail=DISCRETE_TAIL):
        return int(self.n)

    def marginal_moments(self):
        p = self.p1 + self.p2
        mean = self.n * p
        return mean, self.n * p * (1.0 - p) + mean ** 2


# ==========================================================================
# conditional distribution method
# ==========================================================================

class _NumericMarginal:
    """Normalized marginal on [0, inf) from an unnormalized log density."""

    def __init__(self, log_unnorm, scale):
        self.log_unnorm = log_unnorm
        self.scale = scale
        f = lambda t: math.exp(log_unnorm(t))
        pieces = []
        for a, b in ((0.0, scale), (scale, math.inf)):
            val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=400)
            pieces.append((val, err))
        total = sum(v for v, _ in pieces)
        err = sum(e for _, e in pieces)
        if not (np.isfinite(total) and total > 0) or err > 1e-9 * total:
            raise NumericalFailure(
                f"marginal normalizer did not converge (value={total!r}, error={err!r})")
        self.log_norm = math.log(total)
        # cumulative table on a geometric grid; cdf(x) = table + short quad
        self.nodes = np.concatenate([[0.0], scale * np.geomspace(1e-6, 1e6, 97)])
        masses = [0.0]
        for a, b in zip(self.nodes[:-1], self.nodes[1:]):
            masses.append(integrate.quad(self._density, a, b, epsabs=1e-15, epsrel=1e-12, limit=200)[0])
        self.table = np.cumsum(masses)

    def _density(self, t):
        return math.exp(self.log_unnorm(t) - self.log_norm)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.vectorize(self.log_unnorm, otypes=[float])(np.where(x >= 0, x, 1.0))
        return _out(np.where(x >= 0, vals - self.log_norm, -np.inf))

    def _cdf_scalar(self, x):
        if x <= 0:
            return 0.0
        if x >= self.nodes[-1]:
            # t = 1/s maps the upper tail onto a finite interval
            g = lambda s: self._density(1.0 / s) / (s * s) if s > 0 else 0.0
            tail = integrate.quad(g, 0.0, 1.0 / x, epsabs=1e-18, epsrel=1e-10, limit=200)[0]
            return 1.0 - tail
        k = int(np.searchsorted(self.nodes, x, side="right")) - 1
        extra = integrate.quad(self._density, self.nodes[k], x, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
        return min(1.0, self.table[k] + extra)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.vectorize(self._cdf_scalar, otypes=[float])(x))

    def _quantile_scalar(self, u):
        k = int(np.searchsorted(self.table, u, side="left"))
        k = min(max(k, 1), len(self.nodes) - 1)
        lo, hi = self.nodes[k - 1], self.nodes[k]
        if self._cdf_scalar(hi) < u:
            lo, hi = hi, 2.0 * hi
            while self._cdf_scalar(hi) < u:
                lo, hi = hi, 2.0 * hi
                if hi > 1e300:
                    raise NumericalFailure("marginal quantile bracketing failed")
        return optimize.brentq(lambda t: self._cdf_scalar(t) - u, lo, hi, xtol=1e-14, rtol=1e-13)

    def quantile(self, u):
        u = dists._check_unit(u)
        return _out(np.vectorize(self._quantile_scalar, otypes=[float])(u))

    def moment(self, order):
        f = lambda t: t ** order * self._density(t)
        val = 0.0
        for a, b in ((0.0, self.scale), (self.scale, math.inf)):
            part, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-11, limit=400)
            if not np.isfinite(part) or err > 1e-7 * max(abs(part), 1e-300):
                raise NumericalFailure(f"marginal moment of order {order} did not converge")
            val += part
        return val


@lru_cache(maxsize=256)
def _lomax_marginal(lam0, lam1, lam2, alpha):
    def log_unnorm(t):
        return -math.log(lam1 + lam2 * t) - alpha * math.log(lam0 + lam1 * t)
    scale = lam0 / lam1 if lam0 > 0 else 1.0 / lam1
    return _NumericMarginal(log_unnorm, scale)


@lru_cache(maxsize=256)
def _gamma_marginal(m0, m1, m2):
    def log_unnorm(t):
        if t == 0.0:
            return (0.0 if m0 == 1.0 else (math.inf if m0 < 1.0 else -math.inf)) - m0 * math.log(m1)
        return (m0 - 1.0) * math.log(t) - m1 * t - m0 * math.log(m1 + m2 * t)
    return _NumericMarginal(log_unnorm, m0 / (m1 + m2 * m0 / m1))


@dataclass(frozen=True)
class LomaxT(TransitionFamily):
    """Lomax conditional with scale (lam0 + lam1 y) / (lam1 + lam2 y).

    ``lam2 == 0`` is the special case where the marginal is again Lomax,
    with scale ``phi = lam0 / lam1`` and shape ``alpha - 1``.
    """

    lam0: float
    lam1: float
    lam2: float
    alpha: float

    tag = "lomax"
    lower = 0.0

    def __post_init__(self):
        a, l0, l1, l2 = self.alpha, self.lam0, self.lam1, self.lam2
        _pos("alpha", a)
        if a == 1.0:
            ok = l0 > 0 and l1 > 0 and l2 > 0
            rule = "lam0, lam1, lam2 > 0 when alpha = 1"
        elif a < 1.0:
            ok = l0 >= 0 and l1 > 0 and l2 > 0
            rule = "lam0 >= 0 and lam1, lam2 > 0 when alpha < 1"
        else:
            ok = l0 > 0 and l1 > 0 and l2 >= 0
            rule = "lam0, lam1 > 0 and lam2 >= 0 when alpha > 1"
        if not ok or not all(np.isfinite([l0, l1, l2])):
            raise ParameterError(f"Lomax parameters violate {rule}: {self}")

    @classmethod
    def special(cls, phi, alpha):
        """The lam2 = 0 case: transition scale phi + y, shape alpha."""
        return cls(float(phi), 1.0, 0.0, float(alpha))

    @property
    def is_special(self):
        return self.lam2 == 0.0

    @property
    def phi(self):
        return self.lam0 / self.lam1

    def scale_at(self, y):
        y = np.asarray(y, dtype=float)
        return (self.lam0 + self.lam1 * y) / (self.lam1 + self.lam2 * y)

    def logpdf(self, x, y):
        s = self.scale_at(y)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = math.log(self.alpha) - np.log(s) - (self.alpha + 1.0) * np.log1p(x / s)
        return _out(np.where(x >= 0, out, -np.inf))

    def cdf(self, x, y):
        s = self.scale_at(y)
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(-np.expm1(-self.alpha * np.log1p(x / s)))

    def sample(self, y, rng):
        s = self.scale_at(y)
        u = rng.random(np.shape(s) or None)
        return s * np.expm1(-np.log1p(-u) / self.alpha)

    def cond_mean(self, y):
        if self.alpha <= 1.0:
            return _out(np.full(np.shape(y), math.inf))
        return _out(self.scale_at(y) / (self.alpha - 1.0))

    def linear_coeffs(self):
        if not self.is_special:
            return None
        return self.phi / (self.alpha - 1.0), 1.0 / (self.alpha - 1.0)

    def _numeric(self):
        return _lomax_marginal(float(self.lam0), float(self.lam1), float(self.lam2), float(self.alpha))

    def marginal(self):
        if self.is_special:
            return dists.Lomax(self.phi, self.alpha - 1.0)
        return None

    def marginal_logpdf(self, x):
        if self.is_special:
            return self.marginal().logpdf(x)
        return self._numeric().logpdf(x)

    def marginal_cdf(self, x):
        if self.is_special:
            return self.marginal().cdf(x)
        return self._numeric().cdf(x)

    def marginal_quantile(self, u):
        if self.is_special:
            return self.marginal().quantile(u)
        return self._numeric().quantile(u)

    def marginal_sample(self, rng, size=None):
        if self.is_special:
            return self.marginal().sample(rng, size)
        return self._numeric().quantile(rng.random(size))

    def marginal_moments(self):
        if self.is_special:
            s, a = self.phi, self.alpha - 1.0
            if a <= 2.0:
                raise NumericalFailure("Lomax marginal has no finite second moment (alpha <= 3)")
            return s / (a - 1.0), 2.0 * s ** 2 / ((a - 1.0) * (a - 2.0))
        num = self._numeric()
        return num.moment(1), num.moment(2)

    def integration_points(self):
        return (self.scale_at(0.0),)


@dataclass(frozen=True)
class GammaT(TransitionFamily):
    """Gamma conditional with shape m0 and rate m1 + m2 y."""

    m0: float
    m1: float
    m2: float

    tag = "gamma"
    lower = 0.0

    def __post_init__(self):
        for name in ("m0", "m1", "m2"):
            _pos(name, getattr(self, name))

    def _rate(self, y):
        return self.m1 + self.m2 * np.asarray(y, dtype=float)

    def logpdf(self, x, y):
        b = self._rate(y)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.m0 * np.log(b) - special.gammaln(self.m0)
                   + special.xlogy(self.m0 - 1.0, x) - b * x)
        return _out(np.where(x >= 0, out, -np.inf))

    def cdf(self, x, y):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(special.gammainc(self.m0, self._rate(y) * x))

    def sample(self, y, rng):
        b = self._rate(y)
        return rng.gamma(self.m0, 1.0, np.shape(b) or None) / b

    def cond_mean(self, y):
        return _out(self.m0 / self._rate(y))

    def _numeric(self):
        return _gamma_marginal(float(self.m0), float(self.m1), float(self.m2))

    def marginal_logpdf(self, x):
        return self._numeric().logpdf(x)

    def marginal_cdf(self, x):
        return self._numeric().cdf(x)

    def marginal_quantile(self, u):
        return self._numeric().quantile(u)

    def marginal_sample(self, rng, size=None):
        return self._numeric().quantile(rng.random(size))

    def marginal_moments(self):
        num = self._numeric()
        return num.moment(1), num.moment(2)

    def integration_points(self):
        return (self.m0 / self.m1,)


FAMILY_TAGS = {
    cls.tag: cls
    for cls in (GaussianT, StudentTT, PoissonT, NegBinT, BernoulliT, BinomialT, LomaxT, GammaT)
}


# ==========================================================================
# functional interface
# ==========================================================================

def trans_logpdf(f: TransitionFamily, x_t, x_lag):
    f._check(x_t, "x_t")
    f._check(x_lag, "x_lag")
    return f.logpdf(x_t, x_lag)


def trans_pdf(f: TransitionFamily, x_t, x_lag):
    return _out(np.exp(trans_logpdf(f, x_t, x_lag)))


def trans_cdf(f: TransitionFamily, x_t, x_lag):
    f._check(x_lag, "x_lag")
    return f.cdf(x_t, x_lag)


def trans_sample(f: TransitionFamily, x_lag, rng):
    f._check(x_lag, "x_lag")
    return f.sample(x_lag, rng)


def marginal_pdf(f: TransitionFamily, x):
    return f.marginal_pdf(x)


def cond_mean(f: TransitionFamily, y):
    return f.cond_mean(y)


def linear_coeffs(f: TransitionFamily):
    return f.linear_coeffs()


def invariance_grid(f: TransitionFamily, n_points=200):
    """Evaluation points used by :func:`check_invariance`.

    Continuous families: Gauss-Legendre nodes on (-6, 6) pushed through the
    normal cdf and the marginal quantile. Discrete families: 0..truncation.
    """
    if f.discrete:
        return np.arange(f.truncation() + 1, dtype=float)
    nodes, _ = np.polynomial.legendre.leggauss(n_points)
    levels = special.ndtr(_GRID_SIGMA * nodes)
    levels = np.clip(levels, 1e-300, 1.0 - 1e-16)
    return np.asarray(f.marginal_quantile(levels), dtype=float)


def _integral_over_lag(f, u):
    """int f(u | v) f_X(v) dv for a vector of u values (continuous families)."""
    lo = f.lower
    pts = sorted(set(float(p) for p in f.integration_points() if np.isfinite(p) and p > lo))

    def integrand(v):
        return np.exp(f.logpdf(u, v) + f.marginal_logpdf(v))

    total = np.zeros_like(u)
    edges = [lo] + pts + [math.inf]
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad_vec(integrand, a, b, epsabs=1e-13, epsrel=1e-11, norm="max", limit=2000)
        if not np.all(np.isfinite(val)) or err > 1e-8:
            raise NumericalFailure(f"invariance quadrature failed on [{a}, {b}] (error {err:.2e})")
        total += val
    return total


def check_invariance(f: TransitionFamily, tol=1e-6, n_points=200) -> InvarianceResult:
    """Largest absolute gap between the one-step-propagated marginal and the marginal.

    Quadrature breakdown raises :class:`NumericalFailure`; an invariance
    failure is a result with ``passed`` False.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    u = invariance_grid(f, n_points)
    if f.discrete:
        top = f.truncation()
        v = np.arange(top + 1, dtype=float)
        weights = np.exp(f.marginal_logpdf(v))
        propagated = np.array([np.dot(np.exp(f.logpdf(ui, v)), weights) for ui in u])
        residual = np.max(np.abs(propagated - np.exp(f.marginal_logpdf(u))))
        return InvarianceResult(float(residual), tol, u.size, truncation=top)
    propagated = _integral_over_lag(f, u)
    residual = np.max(np.abs(propagated - np.exp(f.marginal_logpdf(u))))
    return InvarianceResult(float(residual), tol, u.size)
