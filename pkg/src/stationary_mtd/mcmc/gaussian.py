"""Gaussian MTD: conjugate updates for mu and sigma2, slice sampling for each rho_l."""
from __future__ import annotations

import math

import numpy as np

from ..priors import GaussianPrior
from ..transitions import GaussianT
from .base import FitFamily
from .kernels import slice_sample


def rho_log_density(rho, m, saa, sab, sbb, sigma2):
    """Log full conditional of rho_l up to a constant.

    m, saa, sab, sbb summarise the observations allocated to lag l with
    a_t = x_t - mu and b_t = x_{t-l} - mu.
    """
    if not -1.0 < rho < 1.0:
        return -math.inf
    one_m = 1.0 - rho * rho
    quad = saa - 2.0 * rho * sab + rho * rho * sbb
    return -0.5 * m * math.log(one_m) - quad / (2.0 * sigma2 * one_m)


class GaussianFamily(FitFamily):
    name = "gaussian"
    blocks = ()

    def __init__(self, slice_width=0.5, max_steps=50):
        self.slice_width = slice_width
        self.max_steps = max_steps

    def init_theta(self, prior: GaussianPrior, data, rng, mode="prior_mean"):
        if mode == "prior_sample":
            return prior.sample(data.order, rng)
        return prior.mean(data.order)

    def log_trans_matrix(self, state, data):
        th = state.theta
        rho = np.asarray(th["rho"])
        var = th["sigma2"] * (1.0 - rho * rho)
        loc = (1.0 - rho) * th["mu"] + rho * data.lagged
        resid = data.target[:, None] - loc
        return -0.5 * resid * resid / var - 0.5 * np.log(2.0 * math.pi * var)

    # -- parameter block ----------------------------------------------------
    def _selected(self, state, data):
        rows = np.arange(data.n_cond)
        rho_t = np.asarray(state.theta["rho"])[state.z - 1]
        lag_t = data.lagged[rows, state.z - 1]
        return rho_t, lag_t

    def update_mu(self, state, data, prior, rng):
        rho_t, lag_t = self._selected(state, data)
        x = data.target
        s2 = state.theta["sigma2"]
        b = np.sum((1.0 - rho_t) / (1.0 + rho_t))
        c = np.sum((1.0 - rho_t) * (x - rho_t * lag_t) / (1.0 - rho_t * rho_t))
        var1 = 1.0 / (1.0 / prior.s0sq + b / s2)
        mean1 = var1 * (prior.mu0 / prior.s0sq + c / s2)
        state.theta["mu"] = rng.normal(mean1, math.sqrt(var1))

    def update_sigma2(self, state, data, prior, rng):
        rho_t, lag_t = self._selected(state, data)
        mu = state.theta["mu"]
        resid = data.target - rho_t * lag_t - (1.0 - rho_t) * mu
        shape = prior.u0 + 0.5 * data.n_cond
        scale = prior.v0 + np.sum(resid * resid / (2.0 * (1.0 - rho_t * rho_t)))
        state.theta["sigma2"] = scale / rng.gamma(shape)

    def rho_stats(self, state, data):
        L = data.order
        rows = np.arange(data.n_cond)
        a = data.target - state.theta["mu"]
        b = data.lagged[rows, state.z - 1] - state.theta["mu"]
        idx = state.z - 1
        m = np.bincount(idx, minlength=L)
        saa = np.bincount(idx, a * a, minlength=L)
        sab = np.bincount(idx, a * b, minlength=L)
        sbb = np.bincount(idx, b * b, minlength=L)
        return m, saa, sab, sbb

    def update_rho(self, state, data, prior, rng):
        m, saa, sab, sbb = self.rho_stats(state, data)
        s2 = state.theta["sigma2"]
        rho = np.array(state.theta["rho"], dtype=float)
        for l in range(data.order):
            args = (m[l], saa[l], sab[l], sbb[l], s2)
            logf = lambda r, args=args: rho_log_density(r, *args)
            rho[l], _ = slice_sample(rho[l], logf, rng, self.slice_width, self.max_steps, -1.0, 1.0)
        state.theta["rho"] = rho

    def update_params(self, state, data, prior, rng, tuner):
        if "mu" not in self.fixed:
            self.update_mu(state, data, prior, rng)
        if "sigma2" not in self.fixed:
            self.update_sigma2(state, data, prior, rng)
        if "rho" not in self.fixed:
            self.update_rho(state, data, prior, rng)

    # -- draws ------------------------------------------------------------------
    def components(self, theta, L):
        rho = np.atleast_1d(theta["rho"])
        return [GaussianT(float(theta["mu"]), float(theta["sigma2"]), float(r)) for r in rho]

    def prior_sample(self, prior, L, rng, data):
        return prior.sample(L, rng)

    def simulate_given(self, state, data, rng):
        L = data.order
        w = state.w
        th = state.theta
        rho = np.asarray(th["rho"])
        sd = np.sqrt(th["sigma2"] * (1.0 - rho * rho))
        z = rng.choice(L, size=data.n_cond, p=w / w.sum()) + 1
        x = data.values.copy()
        eps = rng.standard_normal(data.n_cond)
        for i, t in enumerate(range(L, data.n)):
            l = z[i]
            r = rho[l - 1]
            x[t] = (1.0 - r) * th["mu"] + r * x[t - l] + sd[l - 1] * eps[i]
        state.z = z
        return data.with_values(x)
