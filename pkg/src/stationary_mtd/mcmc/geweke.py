"""Joint-distribution test: marginal-conditional vs successive-conditional simulators.

The first L observations are held fixed (the likelihood conditions on them),
so the joint law tested is p(w, theta, z, latents, x_{L+1..n} | x_{1..L}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import get_family, sweep
from .kernels import Tuner
from .state import ChainState, SeriesData


@dataclass
class GewekeResult:
    names: list
    prior_mean: np.ndarray
    prior_se: np.ndarray
    chain_mean: np.ndarray
    chain_se: np.ndarray

    @property
    def z(self):
        return (self.chain_mean - self.prior_mean) / np.sqrt(self.prior_se ** 2 + self.chain_se ** 2)

    def passed(self, bound=3.0):
        return bool(np.all(np.abs(self.z) < bound))

    def worst(self):
        i = int(np.argmax(np.abs(self.z)))
        return self.names[i], float(self.z[i])


def batch_se(x, n_batches=50):
    """Batch-means standard error of the mean of a correlated sequence."""
    x = np.asarray(x, dtype=float)
    m = x.size // n_batches
    means = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def _scalars(family, state):
    rec = family.record(state)
    out = {}
    for k, v in rec.items():
        v = np.atleast_1d(v)
        if v.size == 1:
            out[k] = float(v[0])
        else:
            for j, vj in enumerate(v):
                out[f"{k}_{j + 1}"] = float(vj)
    for j, wj in enumerate(state.w):
        out[f"w_{j + 1}"] = float(wj)
    return out


def _with_squares(rows):
    names = list(rows[0])
    vals = np.array([[r[n] for n in names] for r in rows])
    return names + [f"{n}^2" for n in names], np.hstack([vals, vals ** 2])


def _fresh_state(family, weight_prior, param_prior, data, rng):
    L = data.order
    w = weight_prior.sample(L, rng)
    theta = family.prior_sample(param_prior, L, rng, data)
    state = ChainState(np.asarray(w, float), theta, np.ones(data.n_cond, dtype=np.int64))
    new = family.simulate_given(state, data, rng)
    return state, new


def geweke_test(family, data: SeriesData, weight_prior, param_prior, n_prior=4000, n_chain=20000,
                seed=0, step_sizes=None, family_options=None) -> GewekeResult:
    """Compare the first two moments of every scalar under both simulators.

    ``data`` only supplies n, L, the first L values and any covariates.
    """
    fam = get_family(family, **(family_options or {}))
    rng = np.random.default_rng(seed)

    rows = []
    for _ in range(n_prior):
        state, _ = _fresh_state(fam, weight_prior, param_prior, data, rng)
        rows.append(_scalars(fam, state))
    names, a = _with_squares(rows)

    state, cur = _fresh_state(fam, weight_prior, param_prior, data, rng)
    tuner = Tuner(step_sizes)
    rows = []
    for it in range(n_chain):
        sweep(state, cur, fam, weight_prior, param_prior, rng, tuner, it)
        cur = fam.simulate_given(state, cur, rng)
        rows.append(_scalars(fam, state))
    _, b = _with_squares(rows)

    return GewekeResult(
        names,
        a.mean(axis=0), a.std(axis=0, ddof=1) / math.sqrt(a.shape[0]),
        b.mean(axis=0), np.array([batch_se(col) for col in b.T]),
    )
