"""Lomax MTD (lam2 = 0 case) with an optional multiplicative regression.

With covariates, y_t = eps_t * exp(x_t' beta) and the MTD acts on eps:
eps_t | eps_{t-l} ~ Lomax(phi + eps_{t-l}, alpha).
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError
from ..priors import LomaxPrior
from ..transitions import LomaxT
from .base import FitFamily
from .kernels import rw_log_scale, rw_vector


class LomaxFamily(FitFamily):
    name = "lomax"
    blocks = ("phi", "beta")

    def __init__(self, collapse_alpha=True):
        # collapse_alpha: update phi from p(phi | z, eps) with alpha integrated out
        self.collapse_alpha = collapse_alpha

    def check_data(self, data):
        y = data.values
        if data.covariates is not None:
            if np.any(y <= 0):
                raise DomainError("the multiplicative Lomax model needs strictly positive observations")
            data.check_covariates()
        elif np.any(y < 0):
            raise DomainError("Lomax MTD needs nonnegative observations")

    def _d(self, data):
        return 0 if data.covariates is None else data.covariates.shape[1]

    def init_theta(self, prior: LomaxPrior, data, rng, mode="prior_mean"):
        d = self._d(data)
        if mode == "prior_sample" and (d == 0 or prior.beta_sd is not None):
            return prior.sample(data.order, rng, d)
        th = prior.mean(data.order, d)
        if mode == "prior_sample":
            th.update({k: v for k, v in prior.sample(data.order, rng, 0).items() if k != "beta"})
        return th

    # -- transformed series ---------------------------------------------------
    def transformed(self, values, theta, data):
        values = np.asarray(values, dtype=float)
        beta = np.asarray(theta.get("beta", ()), dtype=float)
        if data.covariates is None or beta.size == 0:
            return values
        return values * np.exp(-(data.covariates[: values.size] @ beta))

    def jacobian_sum(self, theta, data):
        beta = np.asarray(theta.get("beta", ()), dtype=float)
        if data.covariates is None or beta.size == 0:
            return 0.0
        return -float(np.sum(data.covariates[data.order:] @ beta))

    def back_transform(self, sims, theta, future_covariates):
        beta = np.asarray(theta.get("beta", ()), dtype=float)
        if future_covariates is None or beta.size == 0:
            return sims
        return sims * np.exp(future_covariates @ beta)

    def _eps(self, theta, data):
        eps = self.transformed(data.values, theta, data)
        L = data.order
        return eps[L:], eps[data.lag_index()]

    @staticmethod
    def _log_kernel(target, lag, alpha, phi):
        s = phi + lag
        return math.log(alpha) - np.log(s) - (alpha + 1.0) * np.log1p(target / s)

    def log_trans_matrix(self, state, data):
        target, lagged = self._eps(state.theta, data)
        return self._log_kernel(target[:, None], lagged, state.theta["alpha"], state.theta["phi"])

    def _selected_eps(self, theta, data, z):
        target, lagged = self._eps(theta, data)
        return target, lagged[np.arange(data.n_cond), z - 1]

    # -- parameter block --------------------------------------------------------
    def alpha_conditional(self, target, lag, phi, prior):
        """(shape, rate) of the Gamma full conditional of alpha."""
        S = float(np.sum(np.log1p(target / (phi + lag))))
        return prior.u_alpha + target.size, prior.v_alpha + S

    def log_phi_collapsed(self, phi, target, lag, prior):
        if phi <= 0:
            return -math.inf
        S = float(np.sum(np.log1p(target / (phi + lag))))
        return (-(prior.u_phi + 1.0) * math.log(phi) - prior.v_phi / phi
                - float(np.sum(np.log(phi + lag + target)))
                - (prior.u_alpha + target.size) * math.log(prior.v_alpha + S))

    def log_phi_conditional(self, phi, alpha, target, lag, prior):
        if phi <= 0:
            return -math.inf
        s = phi + lag
        return (-(prior.u_phi + 1.0) * math.log(phi) - prior.v_phi / phi
                + float(np.sum(-np.log(s) - (alpha + 1.0) * np.log1p(target / s))))

    def update_phi(self, state, data, prior, rng, tuner, collapse=None):
        target, lag = self._selected_eps(state.theta, data, state.z)
        if self.collapse_alpha if collapse is None else collapse:
            f = lambda v: self.log_phi_collapsed(v, target, lag, prior)
        else:
            alpha = state.theta["alpha"]
            f = lambda v: self.log_phi_conditional(v, alpha, target, lag, prior)
        state.theta["phi"], _, acc = rw_log_scale(state.theta["phi"], f, rng, tuner.step("phi"))
        tuner.record("phi", acc)

    def update_alpha(self, state, data, prior, rng):
        target, lag = self._selected_eps(state.theta, data, state.z)
        shape, rate = self.alpha_conditional(target, lag, state.theta["phi"], prior)
        state.theta["alpha"] = rng.gamma(shape) / rate

    def log_beta_target(self, beta, state, data, prior):
        th = dict(state.theta, beta=beta)
        target, lag = self._selected_eps(th, data, state.z)
        ll = self._log_kernel(target, lag, th["alpha"], th["phi"])
        return float(np.sum(ll)) + self.jacobian_sum(th, data) + prior.log_beta(beta)

    def update_beta(self, state, data, prior, rng, tuner):
        beta = np.asarray(state.theta.get("beta", ()), dtype=float)
        if beta.size == 0:
            return
        f = lambda b: self.log_beta_target(b, state, data, prior)
        step = tuner.scale.setdefault("beta", tuner.default / math.sqrt(beta.size))
        state.theta["beta"], _, acc = rw_vector(beta, f, rng, step)
        tuner.record("beta", acc)

    def update_params(self, state, data, prior, rng, tuner):
        fx = self.fixed
        if self.collapse_alpha and not fx & {"alpha", "phi"}:
            # phi from its alpha-marginal, then alpha | phi: a joint draw of the pair
            self.update_phi(state, data, prior, rng, tuner)
            self.update_alpha(state, data, prior, rng)
        else:
            if "alpha" not in fx:
                self.update_alpha(state, data, prior, rng)
            if "phi" not in fx:
                self.update_phi(state, data, prior, rng, tuner, collapse=False)
        if "beta" not in fx:
            self.update_beta(state, data, prior, rng, tuner)

    def record(self, state):
        th = state.theta
        out = {"alpha": float(th["alpha"]), "phi": float(th["phi"])}
        beta = np.asarray(th.get("beta", ()), dtype=float)
        if beta.size:
            out["beta"] = beta.copy()
        return out

    def components(self, theta, L):
        return [LomaxT.special(float(theta["phi"]), float(theta["alpha"]))] * L

    def prior_sample(self, prior, L, rng, data):
        return prior.sample(L, rng, self._d(data))

    def simulate_given(self, state, data, rng):
        L = data.order
        w = state.w
        alpha, phi = state.theta["alpha"], state.theta["phi"]
        eps = self.transformed(data.values, state.theta, data).copy()
        z = rng.choice(L, size=data.n_cond, p=w / w.sum()) + 1
        u = rng.random(data.n_cond)
        for i, t in enumerate(range(L, data.n)):
            s = phi + eps[t - z[i]]
            eps[t] = s * math.expm1(-math.log1p(-u[i]) / alpha)
        beta = np.asarray(state.theta.get("beta", ()), dtype=float)
        y = eps if beta.size == 0 or data.covariates is None else eps * np.exp(data.covariates @ beta)
        y[:L] = data.values[:L]
        state.z = z
        return data.with_values(y)
