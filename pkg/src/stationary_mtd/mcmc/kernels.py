"""Generic Markov kernels: slice sampling, random-walk Metropolis, categorical draws."""
from __future__ import annotations

import math

import numpy as np

from ..errors import NumericalFailure


def slice_sample(x0, logf, rng, width=0.5, max_steps=50, lower=-math.inf, upper=math.inf, logf0=None):
    """One univariate slice-sampling update with stepping out and shrinkage.

    ``logf`` must return -inf outside (lower, upper). Returns (x, logf(x)).
    """
    if logf0 is None:
        logf0 = logf(x0)
    if not math.isfinite(logf0):
        raise NumericalFailure(f"slice sampler started at a point of zero density (x={x0!r})")
    level = logf0 + math.log(rng.random())
    left = x0 - width * rng.random()
    right = left + width
    j = int(math.floor(max_steps * rng.random()))
    k = max_steps - 1 - j
    while j > 0 and left > lower and logf(left) > level:
        left -= width
        j -= 1
    while k > 0 and right < upper and logf(right) > level:
        right += width
        k -= 1
    left = max(left, lower)
    right = min(right, upper)
    for _ in range(200):
        x1 = left + (right - left) * rng.random()
        lf = logf(x1)
        if lf > level:
            return x1, lf
        if x1 < x0:
            left = x1
        else:
            right = x1
    raise NumericalFailure("slice sampler shrinkage did not terminate")


class Tuner:
    """Per-block random-walk scales with burn-in-only Robbins-Monro adaptation."""

    def __init__(self, step_sizes=None, adapt=False, target=0.35, default=0.2):
        self.scale = dict(step_sizes or {})
        self.default = default
        self.adapt = adapt
        self.target = target
        self.accepted = {}
        self.proposed = {}
        self.frozen = not adapt
        self._it = 1

    def step(self, block):
        return self.scale.setdefault(block, self.default)

    def record(self, block, accepted, n=1):
        self.accepted[block] = self.accepted.get(block, 0) + int(accepted)
        self.proposed[block] = self.proposed.get(block, 0) + int(n)
        if not self.frozen and n == 1:
            gain = self._it ** -0.6
            s = self.scale.setdefault(block, self.default)
            self.scale[block] = float(np.clip(s * math.exp(gain * (float(accepted) - self.target)), 1e-4, 50.0))

    def tick(self):
        self._it += 1

    def freeze(self):
        self.frozen = True

    def reset_counts(self):
        self.accepted.clear()
        self.proposed.clear()

    def rates(self):
        return {b: self.accepted[b] / self.proposed[b] for b in self.proposed if self.proposed[b]}


def rw_log_scale(x, log_target, rng, step, lt0=None):
    """Random-walk Metropolis on log(x) for x > 0; includes the log Jacobian.

    Returns (x_new, log_target(x_new), accepted).
    """
    if lt0 is None:
        lt0 = log_target(x)
    y = x * math.exp(step * rng.standard_normal())
    lt1 = log_target(y)
    log_ratio = lt1 - lt0 + math.log(y) - math.log(x)
    if math.log(rng.random()) < log_ratio:
        return y, lt1, True
    return x, lt0, False


def rw_vector(x, log_target, rng, step, lt0=None):
    """Isotropic Gaussian random-walk Metropolis for a real vector."""
    if lt0 is None:
        lt0 = log_target(x)
    y = x + step * rng.standard_normal(x.shape)
    lt1 = log_target(y)
    if math.log(rng.random()) < lt1 - lt0:
        return y, lt1, True
    return x, lt0, False


def sample_categorical_log(logp, rng):
    """Row-wise categorical draws (1-based) from unnormalized log probabilities.

    Returns (draws, bad_rows) where bad_rows flags rows with no finite entry.
    """
    m = np.max(logp, axis=1, keepdims=True)
    bad = ~np.isfinite(m[:, 0])
    p = np.exp(logp - np.where(np.isfinite(m), m, 0.0))
    p[bad] = 0.0
    cum = np.cumsum(p, axis=1)
    u = rng.random(logp.shape[0]) * cum[:, -1]
    draws = (cum < u[:, None]).sum(axis=1) + 1
    return np.minimum(draws, logp.shape[1]), bad
