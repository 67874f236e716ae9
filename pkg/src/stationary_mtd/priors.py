"""Priors on mixture weights and on family parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from . import dists
from .errors import ParameterError

__all__ = [
    "WeightPrior", "DirichletW", "StickBreaking", "CdfBased",
    "GaussianPrior", "PoissonPrior", "LomaxPrior",
    "prior_sample_w", "prior_mean_w", "posterior_sample_w", "log_prior_params",
    "default_weight_prior", "weight_prior_from_config",
]


def _pos(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be > 0, got {value!r}")


def _stick(fractions):
    """Map L-1 stick fractions to an L-vector on the simplex."""
    fractions = np.asarray(fractions, dtype=float)
    L = fractions.shape[-1] + 1
    w = np.empty(fractions.shape[:-1] + (L,))
    remaining = np.ones(fractions.shape[:-1])
    for l in range(L - 1):
        w[..., l] = fractions[..., l] * remaining
        remaining = remaining * (1.0 - fractions[..., l])
    w[..., L - 1] = remaining
    return w


class WeightPrior:
    def sample(self, L, rng, size=None):
        raise NotImplementedError

    def mean(self, L):
        raise NotImplementedError

    def posterior_sample(self, counts, rng):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class DirichletW(WeightPrior):
    """Dirichlet prior; ``shape=None`` means 1_L / L for whatever L is used."""

    shape: Optional[tuple] = None

    def __post_init__(self):
        if self.shape is not None:
            shape = tuple(float(a) for a in self.shape)
            for a in shape:
                _pos("Dirichlet shape entry", a)
            object.__setattr__(self, "shape", shape)

    def shape_for(self, L):
        if self.shape is None:
            return np.full(L, 1.0 / L)
        if len(self.shape) != L:
            raise ParameterError(f"Dirichlet shape has length {len(self.shape)}, model order is {L}")
        return np.asarray(self.shape)

    def sample(self, L, rng, size=None):
        return rng.dirichlet(self.shape_for(L), size)

    def mean(self, L):
        a = self.shape_for(L)
        return a / a.sum()

    def posterior_sample(self, counts, rng):
        counts = np.asarray(counts, dtype=float)
        return _dirichlet(self.shape_for(counts.size) + counts, rng)

    def to_config(self):
        cfg = {"type": "dir"}
        if self.shape is not None:
            cfg["shape"] = list(self.shape)
        return cfg


@dataclass(frozen=True)
class StickBreaking(WeightPrior):
    """Truncated stick-breaking with Beta(1, alpha_s) fractions."""

    alpha_s: float = 1.0

    def __post_init__(self):
        _pos("alpha_s", self.alpha_s)

    def sample(self, L, rng, size=None):
        shape = (() if size is None else np.atleast_1d(size).tolist())
        zeta = rng.beta(1.0, self.alpha_s, tuple(shape) + (L - 1,))
        return _stick(zeta)

    def mean(self, L):
        p = 1.0 / (1.0 + self.alpha_s)
        m = p * (1.0 - p) ** np.arange(L)
        m[-1] = (1.0 - p) ** (L - 1)
        return m

    def posterior_sample(self, counts, rng):
        counts = np.asarray(counts, dtype=float)
        L = counts.size
        if L == 1:
            return np.ones(1)
        tail = np.cumsum(counts[::-1])[::-1]  # tail[l] = sum_{r >= l} M_r
        a = 1.0 + counts[:-1]
        b = self.alpha_s + tail[1:]
        return _stick(rng.beta(a, b))

    def to_config(self):
        return {"type": "sb", "alpha_s": self.alpha_s}


@dataclass(frozen=True)
class CdfBased(WeightPrior):
    """Weights are increments of G ~ DP(alpha0, Beta(a0, b0)) over a uniform grid."""

    alpha0: float = 5.0
    a0: float = 1.0
    b0: float = 1.0

    def __post_init__(self):
        _pos("alpha0", self.alpha0)
        _pos("a0", self.a0)
        _pos("b0", self.b0)

    def bin_masses(self, L):
        edges = special.betainc(self.a0, self.b0, np.arange(L + 1) / L)
        edges[0], edges[-1] = 0.0, 1.0
        return np.diff(edges)

    def sample(self, L, rng, size=None):
        return _dirichlet(self.alpha0 * self.bin_masses(L), rng, size)

    def mean(self, L):
        return self.bin_masses(L)

    def posterior_sample(self, counts, rng):
        counts = np.asarray(counts, dtype=float)
        return _dirichlet(self.alpha0 * self.bin_masses(counts.size) + counts, rng)

    def to_config(self):
        return {"type": "cdp", "alpha0": self.alpha0, "a0": self.a0, "b0": self.b0}


def _dirichlet(shape, rng, size=None):
    # bin masses can underflow to exactly 0 far in a Beta tail
    shape = np.maximum(np.asarray(shape, dtype=float), 1e-300)
    if size is None:
        g = rng.gamma(shape)
    else:
        g = rng.gamma(shape, 1.0, tuple(np.atleast_1d(size)) + shape.shape)
    total = g.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        # all shapes tiny: put the whole mass on the largest draw
        g = np.where(total > 0, g, (g == g.max(axis=-1, keepdims=True)).astype(float))
        total = g.sum(axis=-1, keepdims=True)
    return g / total


def prior_sample_w(p: WeightPrior, L, rng, size=None):
    return p.sample(L, rng, size)


def prior_mean_w(p: WeightPrior, L):
    return p.mean(L)


def posterior_sample_w(p: WeightPrior, counts, rng):
    return p.posterior_sample(counts, rng)


# paper-default ladders keyed by model order
_SB_DEFAULT = {5: 1.0, 15: 2.0, 25: 3.0}
_CDP_B0_DEFAULT = {5: 3.0, 15: 6.0, 25: 7.0}


def default_weight_prior(kind, L):
    """Simulation-study defaults: SB(1|2|3) and CDP(5, 1, 3|6|7) for L = 5|15|25."""
    if kind == "dir":
        return DirichletW()
    key = min(_SB_DEFAULT, key=lambda k: abs(k - L))
    if kind == "sb":
        return StickBreaking(_SB_DEFAULT[key])
    if kind == "cdp":
        return CdfBased(5.0, 1.0, _CDP_B0_DEFAULT[key])
    raise ParameterError(f"unknown weight prior {kind!r}")


def weight_prior_from_config(cfg):
    kind = cfg["type"]
    if kind == "dir":
        return DirichletW(cfg.get("shape"))
    if kind == "sb":
        return StickBreaking(cfg["alpha_s"])
    if kind == "cdp":
        return CdfBased(cfg["alpha0"], cfg["a0"], cfg["b0"])
    raise ParameterError(f"unknown weight prior type {kind!r}")


# --------------------------------------------------------------------------
# parameter priors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPrior:
    """N(mu0, s0sq) on mu, IG(u0, v0) on sigma2, Uniform(-1, 1) on each rho."""

    mu0: float = 0.0
    s0sq: float = 100.0
    u0: float = 2.0
    v0: float = 0.1

    def __post_init__(self):
        _pos("s0sq", self.s0sq)
        _pos("u0", self.u0)
        _pos("v0", self.v0)

    def log_density(self, theta):
        rho = np.atleast_1d(np.asarray(theta["rho"], dtype=float))
        if np.any(np.abs(rho) >= 1.0):
            return -math.inf
        return (dists.Normal(self.mu0, math.sqrt(self.s0sq)).logpdf(theta["mu"])
                + dists.InverseGamma(self.u0, self.v0).logpdf(theta["sigma2"])
                - rho.size * math.log(2.0))

    def mean(self, L):
        sigma2 = self.v0 / (self.u0 - 1.0) if self.u0 > 1 else self.v0
        return {"mu": self.mu0, "sigma2": sigma2, "rho": np.zeros(L)}

    def sample(self, L, rng):
        return {
            "mu": rng.normal(self.mu0, math.sqrt(self.s0sq)),
            "sigma2": self.v0 / rng.gamma(self.u0),
            "rho": rng.uniform(-1.0, 1.0, L),
        }


@dataclass(frozen=True)
class PoissonPrior:
    """Independent Gamma (shape, rate) priors on lam and gamma."""

    u_lam: float = 2.0
    v_lam: float = 1.0
    u_gam: float = 2.0
    v_gam: float = 1.0

    def __post_init__(self):
        for name in ("u_lam", "v_lam", "u_gam", "v_gam"):
            _pos(name, getattr(self, name))

    def log_density(self, theta):
        return (dists.Gamma(self.u_lam, self.v_lam).logpdf(theta["lam"])
                + dists.Gamma(self.u_gam, self.v_gam).logpdf(theta["gamma"]))

    def mean(self, L):
        return {"lam": self.u_lam / self.v_lam, "gamma": self.u_gam / self.v_gam}

    def sample(self, L, rng):
        return {"lam": rng.gamma(self.u_lam) / self.v_lam, "gamma": rng.gamma(self.u_gam) / self.v_gam}


@dataclass(frozen=True)
class LomaxPrior:
    """Ga(u_alpha, v_alpha) on alpha, IG(u_phi, v_phi) on phi.

    ``beta_sd=None`` puts a flat prior on regression coefficients (log
    density 0); a number gives independent N(0, beta_sd^2) priors.
    """

    u_alpha: float = 6.0
    v_alpha: float = 1.0
    u_phi: float = 3.0
    v_phi: float = 20.0
    beta_sd: Optional[float] = None

    def __post_init__(self):
        for name in ("u_alpha", "v_alpha", "u_phi", "v_phi"):
            _pos(name, getattr(self, name))
        if self.beta_sd is not None:
            _pos("beta_sd", self.beta_sd)

    def log_beta(self, beta):
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        if self.beta_sd is None or beta.size == 0:
            return 0.0
        return float(np.sum(dists.Normal(0.0, self.beta_sd).logpdf(beta)))

    def log_density(self, theta):
        out = (dists.Gamma(self.u_alpha, self.v_alpha).logpdf(theta["alpha"])
               + dists.InverseGamma(self.u_phi, self.v_phi).logpdf(theta["phi"]))
        if "beta" in theta:
            out += self.log_beta(theta["beta"])
        return out

    def mean(self, L, d=0):
        phi = self.v_phi / (self.u_phi - 1.0) if self.u_phi > 1 else self.v_phi
        return {"alpha": self.u_alpha / self.v_alpha, "phi": phi, "beta": np.zeros(d)}

    def sample(self, L, rng, d=0):
        if d and self.beta_sd is None:
            raise ParameterError("cannot sample regression coefficients from a flat prior")
        return {
            "alpha": rng.gamma(self.u_alpha) / self.v_alpha,
            "phi": self.v_phi / rng.gamma(self.u_phi),
            "beta": rng.normal(0.0, self.beta_sd or 1.0, d),
        }


def log_prior_params(pp, theta) -> float:
    return float(pp.log_density(theta))
