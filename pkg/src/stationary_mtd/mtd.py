"""Mixture transition distribution processes.

An :class:`MtdModel` mixes ``L`` first-order transition components, one per
lag. Histories are always passed most-recent-first: ``history[0]`` is
``x_{t-1}``, ``history[L-1]`` is ``x_{t-L}``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ContractError, DomainError, ParameterError, UnsupportedOperation
from .transitions import TransitionFamily, check_invariance

log = logging.getLogger(__name__)

__all__ = [
    "MtdModel", "FromMarginal", "Fixed", "AcfResult", "StationarityReport",
    "transition_pdf", "transition_logpdf", "transition_cdf", "simulate",
    "log_cond_likelihood", "acf", "acf_closed_form", "weak_stationarity_check",
    "empirical_acf", "lag_matrix",
]


@dataclass(frozen=True)
class FromMarginal:
    """Start with x_1 drawn from the invariant marginal."""


@dataclass(frozen=True)
class Fixed:
    """Start from user-supplied x_1..x_L (oldest first)."""

    values: tuple

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(float(v) for v in values))


@dataclass(frozen=True)
class MtdModel:
    weights: tuple
    components: tuple
    debug: bool = field(default=False, compare=False)

    def __init__(self, weights, components, debug=False):
        w = np.asarray(weights, dtype=float).ravel()
        if isinstance(components, TransitionFamily):
            comps = (components,) * w.size
        else:
            comps = tuple(components)
        if w.size < 1:
            raise ParameterError("model order L must be at least 1")
        if len(comps) != w.size:
            raise ContractError(f"{w.size} weights but {len(comps)} components")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ParameterError(f"weights must be nonnegative and sum to 1, got sum {w.sum()!r}")
        tags = {c.tag for c in comps}
        if len(tags) != 1:
            raise ParameterError(f"components must share one family, got {sorted(tags)}")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "debug", debug)
        if debug:
            self._check_common_marginal()

    @property
    def order(self):
        return len(self.weights)

    @property
    def w(self):
        return np.asarray(self.weights)

    @property
    def family(self):
        return self.components[0].tag

    @property
    def discrete(self):
        return self.components[0].discrete

    def _check_common_marginal(self, tol=1e-6):
        """Each component keeps the shared marginal invariant; marginals agree."""
        first = self.components[0]
        for comp in self.components:
            res = check_invariance(comp, tol if not comp.discrete else 1e-10)
            if not res.passed:
                raise ParameterError(f"component {comp} fails invariance (residual {res.residual:.3g})")
            if comp is not first:
                grid = np.linspace(0.05, 0.95, 19)
                a = np.asarray(first.marginal_quantile(grid), dtype=float)
                b = np.asarray(comp.marginal_quantile(grid), dtype=float)
                if not np.allclose(a, b, rtol=1e-8, atol=1e-10):
                    raise ParameterError("components do not share one invariant marginal")

    def _history(self, history):
        h = np.asarray(history, dtype=float)
        if h.shape[0] != self.order:
            raise ContractError(f"history must hold exactly L={self.order} values, got {h.shape[0]}")
        return h


def lag_matrix(x, L):
    """Rows t = L+1..n (0-based L..n-1); column l-1 holds x_{t-l}."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n <= L:
        raise ContractError(f"series of length {n} is too short for order {L}")
    idx = np.arange(L, n)[:, None] - np.arange(1, L + 1)[None, :]
    return x[idx]


# --------------------------------------------------------------------------
# transition evaluators
# --------------------------------------------------------------------------

def transition_logpdf(m: MtdModel, x_t, history):
    h = m._history(history)
    logs = np.stack([comp.logpdf(x_t, h[l]) for l, comp in enumerate(m.components)])
    with np.errstate(divide="ignore"):
        logw = np.log(m.w).reshape((-1,) + (1,) * (logs.ndim - 1))
    out = logsumexp(logs + logw, axis=0)
    return out.item() if np.ndim(out) == 0 else out


def transition_pdf(m: MtdModel, x_t, history):
    """Mixture density sum_l w_l f_l(x_t | history[l])."""
    h = m._history(history)
    dens = [w * np.exp(comp.logpdf(x_t, h[l])) for l, (w, comp) in enumerate(zip(m.weights, m.components))]
    out = np.sum(dens, axis=0)
    return out.item() if np.ndim(out) == 0 else out


def transition_cdf(m: MtdModel, x_t, history):
    h = m._history(history)
    vals = [w * np.asarray(comp.cdf(x_t, h[l])) for l, (w, comp) in enumerate(zip(m.weights, m.components))]
    out = np.clip(np.sum(vals, axis=0), 0.0, 1.0)
    return out.item() if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------

def _startup_weights(w, t):
    """Mixing weights over lags 1..t-1 for time 2 <= t <= L (1-based).

    Lags 1..t-2 keep their weights; the leftover mass goes to lag t-1,
    which conditions on x_1.
    """
    head = w[: t - 2]
    return np.append(head, max(0.0, 1.0 - head.sum()))


def simulate(m: MtdModel, n: int, rng, init=FromMarginal()):
    """Simulate ``n`` values; returns ``(series, metadata)``.

    With :class:`FromMarginal`, x_1 is an exact marginal draw and times
    2..L follow the start-up mixture, so every x_t has the invariant
    marginal. :class:`Fixed` supplies x_1..x_L and skips that guarantee.
    """
    L = m.order
    w = m.w
    x = np.empty(max(n, 0), dtype=np.int64 if m.discrete else float)
    meta = {"family": m.family, "order": L, "n": int(n), "init": "marginal"}
    if n <= 0:
        return x, meta
    comps = m.components
    if isinstance(init, Fixed):
        if len(init.values) != L:
            raise ContractError(f"Fixed init needs {L} values, got {len(init.values)}")
        if not np.all(comps[0].in_support(np.asarray(init.values))):
            raise DomainError("Fixed initial values lie outside the state space")
        start = min(L, n)
        x[:start] = np.asarray(init.values[:start])
        meta["init"] = "fixed"
        meta["stationary_start"] = False
    else:
        x[0] = comps[0].marginal_sample(rng)
        for t in range(2, min(L, n) + 1):
            probs = _startup_weights(w, t)
            lag = int(rng.choice(t - 1, p=probs / probs.sum())) + 1
            x[t - 1] = comps[lag - 1].sample(x[t - 1 - lag], rng)
        start = min(L, n)
        meta["stationary_start"] = True
    if n > L:
        cw = np.cumsum(w)
        cw[-1] = 1.0
        lags = np.searchsorted(cw, rng.random(n - L), side="right") + 1
        lags = np.minimum(lags, L)
        for i, t in enumerate(range(L, n)):
            lag = lags[i]
            x[t] = comps[lag - 1].sample(x[t - lag], rng)
    return x, meta


# --------------------------------------------------------------------------
# likelihood
# --------------------------------------------------------------------------

def log_cond_likelihood(m: MtdModel, data) -> float:
    """Log likelihood of x_{L+1..n} given x_1..x_L."""
    x = np.asarray(getattr(data, "values", data), dtype=float)
    L = m.order
    if x.size <= L:
        raise ContractError(f"need more than L={L} observations, got {x.size}")
    if not np.all(m.components[0].in_support(x)):
        bad = np.flatnonzero(~m.components[0].in_support(x))
        log.warning("data outside the %s state space at indices %s", m.family, bad[:10].tolist())
        return -math.inf
    lagged = lag_matrix(x, L)
    logs = np.column_stack([comp.logpdf(x[L:], lagged[:, l]) for l, comp in enumerate(m.components)])
    with np.errstate(divide="ignore"):
        logw = np.log(m.w)
    return float(np.sum(logsumexp(logs + logw, axis=1)))


# --------------------------------------------------------------------------
# second-order structure
# --------------------------------------------------------------------------

@dataclass
class AcfResult:
    r: np.ndarray
    phi_const: float
    mean: float
    second_moment: float
    coeffs: tuple
    init_method: str
    init_se: np.ndarray | None = None

    def recursion_residual(self):
        """max |r(h) - phi - sum_l w_l b_l r(h-l)| over h >= L."""
        wb = np.asarray(self.coeffs)
        L = wb.size
        r = self.r
        if r.size <= L:
            return 0.0
        res = [r[h] - self.phi_const - np.dot(wb, r[h - 1::-1][:L]) for h in range(L, r.size)]
        return float(np.max(np.abs(res)))


@dataclass
class StationarityReport:
    roots: np.ndarray
    all_inside: bool
    phi_const: float

    @property
    def max_modulus(self):
        return float(np.max(np.abs(self.roots)))


def _linear_parts(m: MtdModel):
    coeffs = [c.linear_coeffs() for c in m.components]
    if any(c is None for c in coeffs):
        raise UnsupportedOperation(f"the {m.family} MTD is not linear in the lagged value")
    a = np.array([c[0] for c in coeffs])
    b = np.array([c[1] for c in coeffs])
    return a, b


def _phi_const(w, a, b, mu, mu2):
    var = mu2 - mu * mu
    if not var > 0:
        raise ParameterError("marginal variance must be positive")
    return (np.dot(w, a) * mu - (1.0 - np.dot(w, b)) * mu * mu) / var


def empirical_acf(x, max_lag):
    x = np.asarray(x, dtype=float)
    xc = x - x.mean()
    denom = np.dot(xc, xc)
    return np.array([1.0] + [np.dot(xc[h:], xc[:-h]) / denom for h in range(1, max_lag + 1)])


def acf(m: MtdModel, H: int, init="monte_carlo", mc_length=1_000_000, seed=20240531):
    """Autocorrelations r(0..H) of a linear MTD.

    r(h) for h >= L follows r(h) = phi + sum_l w_l b_l r(h - l). The
    starting values r(1..L-1) come either from a long simulation
    (``init="monte_carlo"``, standard errors in ``init_se``) or from the
    same recursion applied for 1 <= h < L with r(-k) = r(k), which is a
    linear system (``init="linear"``).
    """
    a, b = _linear_parts(m)
    w = m.w
    L = m.order
    mu, mu2 = m.components[0].marginal_moments()
    phi = _phi_const(w, a, b, mu, mu2)
    wb = w * b
    r = np.zeros(max(H, L - 1) + 1)
    r[0] = 1.0
    se = None
    if L > 1:
        if init == "monte_carlo":
            x, _ = simulate(m, mc_length, np.random.default_rng(seed))
            emp = empirical_acf(x, L - 1)
            r[1:L] = emp[1:L]
            # Bartlett standard errors
            se = np.array([math.sqrt((1.0 + 2.0 * np.sum(emp[1:h] ** 2)) / mc_length) for h in range(1, L)])
        elif init == "linear":
            r[1:L] = _linear_initial(wb, phi, L)
        else:
            raise ParameterError(f"unknown ACF initialisation {init!r}")
    for h in range(L, r.size):
        r[h] = phi + np.dot(wb, r[h - 1::-1][:L])
    return AcfResult(r[: H + 1], float(phi), float(mu), float(mu2), tuple(wb), init, se)


def _linear_initial(wb, phi, L):
    """Solve r(h) = phi + sum_l wb_l r(|h - l|), h = 1..L-1, with r(0) = 1."""
    k = L - 1
    A = np.eye(k)
    rhs = np.full(k, phi)
    for h in range(1, L):
        for l in range(1, L + 1):
            j = abs(h - l)
            if j == 0:
                rhs[h - 1] += wb[l - 1]
            elif j <= k:
                A[h - 1, j - 1] -= wb[l - 1]
    return np.linalg.solve(A, rhs)


def companion_roots(wb):
    wb = np.asarray(wb, dtype=float)
    L = wb.size
    C = np.zeros((L, L))
    C[0, :] = wb
    if L > 1:
        C[1:, :-1] = np.eye(L - 1)
    return np.linalg.eigvals(C)


def acf_closed_form(result: AcfResult, H: int):
    """Evaluate r(h) = sum_i c_i z_i^h + phi / prod(1 - z_i) (distinct roots).

    The constants c_i are fitted to r(0..L-1) of ``result``.
    """
    z = companion_roots(result.coeffs)
    L = z.size
    if np.min(np.abs(z[:, None] - z[None, :]) + np.eye(L)) < 1e-10:
        raise UnsupportedOperation("closed form requires distinct roots")
    steady = result.phi_const / np.prod(1.0 - z)
    V = np.vander(z, L, increasing=True).T
    c = np.linalg.solve(V, result.r[:L] - steady)
    h = np.arange(H + 1)
    vals = (c[None, :] * z[None, :] ** h[:, None]).sum(axis=1) + steady
    return np.real_if_close(vals, tol=1e6).real


def weak_stationarity_check(m: MtdModel) -> StationarityReport:
    """Roots of z^L - w_1 b_1 z^{L-1} - ... - w_L b_L via companion eigenvalues."""
    a, b = _linear_parts(m)
    try:
        mu, mu2 = m.components[0].marginal_moments()
        phi = float(_phi_const(m.w, a, b, mu, mu2))
    except (ArithmeticError, ParameterError):
        phi = math.nan
    return stationarity_from_coeffs(m.w, b, phi)


def stationarity_from_coeffs(w, b, phi_const=math.nan) -> StationarityReport:
    """Root check straight from weights and slopes; covers (w, b) pairs no valid model produces."""
    roots = companion_roots(np.asarray(w, dtype=float) * np.asarray(b, dtype=float))
    return StationarityReport(roots, bool(np.max(np.abs(roots)) < 1.0 - 1e-12), phi_const)
