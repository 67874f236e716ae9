"""Poisson MTD with the thinning representation x_t = q_t + (x_t - q_t).

Given the allocation z_t = l, q_t ~ Pois(lam) is the innovation and
x_t - q_t ~ Bin(x_{t-l}, gamma / (lam + gamma)) the thinned survivor count.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from ..errors import DomainError
from ..priors import PoissonPrior
from ..transitions import PoissonT
from .base import FitFamily
from .kernels import rw_log_scale


class _ConvolutionTable:
    """Data-only coefficients for the Poisson-binomial convolution pmf.

    f(x | y) = (1-p)^y lam^x e^-lam * sum_z C(y, z) / (x - z)! * r^z with
    r = p / ((1 - p) lam) = gamma / lam^2.
    """

    def __init__(self, x, Y):
        x = np.asarray(x, dtype=float)[:, None]
        self.top = np.minimum(x, Y)
        zmax = int(np.max(self.top)) if x.size else 0
        self.z = np.arange(zmax + 1, dtype=float)[:, None, None]
        ok = self.z <= self.top[None]
        with np.errstate(invalid="ignore"):
            logc = (special.gammaln(Y + 1.0) - special.gammaln(self.z + 1.0)
                    - special.gammaln(Y - self.z + 1.0) - special.gammaln(x - self.z + 1.0))
        self.logc = np.where(ok, logc, -np.inf)
        self.shift = np.max(self.logc, axis=0)
        self.x = x
        self.Y = Y

    def log_poly(self, logr):
        """log sum_z C_z r^z for every (t, l) cell."""
        # upper bound on the largest term, so every exponent is <= 0
        bound = self.shift + np.maximum(0.0, self.top * logr)
        total = np.exp(self.logc + self.z * logr - bound).sum(axis=0)
        if np.all(total > 0):
            return bound + np.log(total)
        return special.logsumexp(self.logc + self.z * logr, axis=0)

    def log_pmf(self, lam, gam):
        poly = self.log_poly(math.log(gam) - 2.0 * math.log(lam))
        return self.Y * math.log(lam / (lam + gam)) + self.x * math.log(lam) - lam + poly


class PoissonFamily(FitFamily):
    name = "poisson"
    discrete = True
    blocks = ("lam", "gamma")

    def __init__(self):
        self._tables = {}

    def check_data(self, data):
        x = data.values
        if np.any(x < 0) or np.any(np.floor(x) != x):
            raise DomainError("Poisson MTD needs nonnegative integer counts")

    def _table(self, data):
        tab = self._tables.get(id(data))
        if tab is None or tab[0] is not data:
            logfact = special.gammaln(np.arange(int(data.values.max()) + 2) + 1.0)
            tab = (data, _ConvolutionTable(data.target, data.lagged), logfact)
            self._tables = {id(data): tab}
        return tab

    def init_theta(self, prior: PoissonPrior, data, rng, mode="prior_mean"):
        if mode == "prior_sample":
            return prior.sample(data.order, rng)
        return prior.mean(data.order)

    def init_latents(self, state, data, rng):
        state.latents["q"] = data.target.astype(np.int64).copy()

    def log_trans_matrix(self, state, data):
        return self._table(data)[1].log_pmf(state.theta["lam"], state.theta["gamma"])

    # -- latent innovations -------------------------------------------------
    def q_bounds(self, state, data):
        rows = np.arange(data.n_cond)
        x = data.target.astype(np.int64)
        y = data.lagged[rows, state.z - 1].astype(np.int64)
        return np.maximum(0, x - y), x, y

    @staticmethod
    def q_log_target(q, x, y, lam, gam, logfact):
        """log p(q_t | z_t, lam, gamma) up to a constant, elementwise (integer arrays)."""
        p = gam / (lam + gam)
        k = x - q
        return (q * math.log(lam) - logfact[q] + logfact[y] - logfact[k] - logfact[y - k]
                + k * math.log(p) + (y - k) * math.log1p(-p))

    def draw_q_exact(self, state, data, rng):
        """Exact draw of every q_t from its finite-support conditional."""
        lo, x, y = self.q_bounds(state, data)
        logfact = self._table(data)[2]
        lam, gam = state.theta["lam"], state.theta["gamma"]
        width = int(np.max(x - lo)) + 1 if x.size else 1
        grid = lo[:, None] + np.arange(width)[None, :]
        ok = grid <= x[:, None]
        lt = self.q_log_target(np.where(ok, grid, lo[:, None]), x[:, None], y[:, None], lam, gam, logfact)
        lt = np.where(ok, lt, -np.inf)
        lt -= lt.max(axis=1, keepdims=True)
        cum = np.cumsum(np.exp(lt), axis=1)
        u = rng.random(x.size) * cum[:, -1]
        pick = (cum < u[:, None]).sum(axis=1)
        state.latents["q"] = lo + np.minimum(pick, x - lo)

    def after_allocations(self, state, data, rng):
        # z was drawn with q integrated out, so q must be redrawn from p(q | z)
        self.draw_q_exact(state, data, rng)

    def update_latents(self, state, data, rng, tuner):
        """Independence Metropolis for each q_t with a uniform proposal on its support."""
        lo, x, y = self.q_bounds(state, data)
        lam, gam = state.theta["lam"], state.theta["gamma"]
        logfact = self._table(data)[2]
        q = state.latents["q"]
        prop = lo + np.floor(rng.random(x.size) * (x - lo + 1)).astype(np.int64)
        cur = self.q_log_target(q, x, y, lam, gam, logfact)
        new = self.q_log_target(prop, x, y, lam, gam, logfact)
        accept = np.log(rng.random(x.size)) < new - cur
        state.latents["q"] = np.where(accept, prop, q)
        tuner.record("q", int(accept.sum()), x.size)

    # -- rates ----------------------------------------------------------------
    def suff_stats(self, state, data):
        lo, x, y = self.q_bounds(state, data)
        q = state.latents["q"]
        return float(q.sum()), float((x - q).sum()), float(y.sum()), data.n_cond

    @staticmethod
    def log_rates_target(lam, gam, stats, prior):
        if lam <= 0 or gam <= 0:
            return -math.inf
        Q, K, Y, T = stats
        p = gam / (lam + gam)
        return ((prior.u_lam - 1.0) * math.log(lam) - prior.v_lam * lam
                + (prior.u_gam - 1.0) * math.log(gam) - prior.v_gam * gam
                + Q * math.log(lam) - T * lam + K * math.log(p) + (Y - K) * math.log1p(-p))

    def update_lam(self, state, data, prior, rng, tuner, stats=None):
        stats = stats or self.suff_stats(state, data)
        gam = state.theta["gamma"]
        f = lambda v: self.log_rates_target(v, gam, stats, prior)
        state.theta["lam"], _, acc = rw_log_scale(state.theta["lam"], f, rng, tuner.step("lam"))
        tuner.record("lam", acc)

    def update_gamma(self, state, data, prior, rng, tuner, stats=None):
        stats = stats or self.suff_stats(state, data)
        lam = state.theta["lam"]
        f = lambda v: self.log_rates_target(lam, v, stats, prior)
        state.theta["gamma"], _, acc = rw_log_scale(state.theta["gamma"], f, rng, tuner.step("gamma"))
        tuner.record("gamma", acc)

    def update_params(self, state, data, prior, rng, tuner):
        stats = self.suff_stats(state, data)
        if "lam" not in self.fixed:
            self.update_lam(state, data, prior, rng, tuner, stats)
        if "gamma" not in self.fixed:
            self.update_gamma(state, data, prior, rng, tuner, stats)

    def record(self, state):
        th = state.theta
        return {"lam": float(th["lam"]), "gamma": float(th["gamma"]),
                "phi": float(th["lam"] + th["gamma"])}

    def components(self, theta, L):
        return [PoissonT(float(theta["lam"]), float(theta["gamma"]))] * L

    def prior_sample(self, prior, L, rng, data):
        return prior.sample(L, rng)

    def simulate_given(self, state, data, rng):
        L = data.order
        w = state.w
        lam, gam = state.theta["lam"], state.theta["gamma"]
        p = gam / (lam + gam)
        z = rng.choice(L, size=data.n_cond, p=w / w.sum()) + 1
        q = rng.poisson(lam, data.n_cond)
        x = data.values.astype(np.int64).copy()
        for i, t in enumerate(range(L, data.n)):
            x[t] = q[i] + rng.binomial(x[t - z[i]], p)
        state.z = z
        state.latents["q"] = q.astype(np.int64)
        return data.with_values(x)
