"""Containers for data, chain state, run configuration and stored draws."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from ..errors import ContractError, DomainError, ParameterError


@dataclass(frozen=True)
class HarmonicDesign:
    """Seasonal design rows (cos wt, sin wt, cos 2wt, sin 2wt, ...), w = 2 pi / period."""

    period: float = 52.0
    n_harmonics: int = 3

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        omega = 2.0 * math.pi / self.period
        cols = []
        for k in range(1, self.n_harmonics + 1):
            cols += [np.cos(k * omega * t), np.sin(k * omega * t)]
        return np.column_stack(cols)

    @property
    def dim(self):
        return 2 * self.n_harmonics


@dataclass
class SeriesData:
    """Observed series x_1..x_n, split at ``order`` for the conditional likelihood.

    ``covariates`` (n x d) is optional; when a ``design`` is given the
    covariates are generated from it for t = 1..n.
    """

    values: np.ndarray
    order: int
    covariates: Optional[np.ndarray] = None
    design: Optional[HarmonicDesign] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.order < 1:
            raise ContractError("order must be at least 1")
        if self.values.size <= self.order:
            raise ContractError(f"need n > L, got n={self.values.size}, L={self.order}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("series contains non-finite values")
        if self.design is not None and self.covariates is None:
            self.covariates = self.design.matrix(np.arange(1, self.n + 1))
        if self.covariates is not None:
            X = np.asarray(self.covariates, dtype=float)
            if X.ndim == 1:
                X = X[:, None]
            if X.shape[0] != self.n:
                raise ContractError(f"covariates have {X.shape[0]} rows, series has {self.n}")
            self.covariates = X

    @property
    def n(self):
        return self.values.size

    @property
    def n_cond(self):
        """Number of terms in the conditional likelihood, n - L."""
        return self.n - self.order

    @property
    def target(self):
        return self.values[self.order:]

    @cached_property
    def lagged(self):
        """(n - L) x L matrix; column l-1 holds x_{t-l}. Treat as read-only."""
        return self.values[self.lag_index()]

    def lag_index(self):
        L = self.order
        return np.arange(L, self.n)[:, None] - np.arange(1, L + 1)[None, :]

    def check_covariates(self):
        if self.covariates is None:
            return
        if np.linalg.matrix_rank(self.covariates) < self.covariates.shape[1]:
            raise ContractError("covariate matrix does not have full column rank")

    def future_covariates(self, k):
        if self.covariates is None:
            return None
        if self.design is None:
            raise ContractError("forecasting with covariates needs a design to extend them")
        return self.design.matrix(np.arange(self.n + 1, self.n + k + 1))

    def with_values(self, values):
        return SeriesData(values, self.order, self.covariates, self.design)


@dataclass
class ChainState:
    w: np.ndarray
    theta: dict
    z: np.ndarray  # allocations in 1..L for t = L+1..n
    latents: dict = field(default_factory=dict)

    def counts(self, L):
        return np.bincount(self.z - 1, minlength=L)

    def copy(self):
        return ChainState(
            self.w.copy(),
            {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.theta.items()},
            self.z.copy(),
            {k: v.copy() for k, v in self.latents.items()},
        )


@dataclass
class FitConfig:
    iters: int = 1000
    burnin: int = 0
    thin: int = 1
    seed: int = 0
    chains: int = 1
    step_sizes: dict = field(default_factory=dict)
    adapt: bool = False
    target_accept: float = 0.35
    init: str = "prior_mean"
    store_z: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.iters < 1:
            raise ParameterError("iters must be positive")
        if not 0 <= self.burnin < self.iters:
            raise ParameterError("need 0 <= burnin < iters")
        if self.thin < 1:
            raise ParameterError("thin must be at least 1")
        if self.chains < 1:
            raise ParameterError("chains must be at least 1")
        if self.init not in ("prior_mean", "prior_sample"):
            raise ParameterError(f"unknown init mode {self.init!r}")

    @property
    def n_draws(self):
        return -(-(self.iters - self.burnin) // self.thin)

    def stored(self, it):
        return it >= self.burnin and (it - self.burnin) % self.thin == 0


PRESETS = {
    # simulation study runs
    "sim": dict(iters=165_000, burnin=5_000, thin=20),
    # real-data runs
    "real": dict(iters=85_000, burnin=5_000, thin=10),
    "desk": dict(iters=20_000, burnin=2_000, thin=10),
}


def config_preset(name, **overrides):
    if name not in PRESETS:
        raise ParameterError(f"unknown fit preset {name!r}; choose from {sorted(PRESETS)}")
    return FitConfig(**{**PRESETS[name], **overrides})


@dataclass
class PosteriorSamples:
    """Thinned draws of (w, theta), stacked over chains."""

    family: str
    order: int
    draws: dict
    chain: np.ndarray
    iteration: np.ndarray
    acceptance: dict = field(default_factory=dict)
    z: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_draws(self):
        return int(self.chain.size)

    @property
    def w(self):
        return self.draws["w"]

    def theta(self, i):
        return {k: v[i] for k, v in self.draws.items() if k != "w"}

    def columns(self):
        """Flat name -> 1-d array mapping, vectors expanded as name_1..name_k."""
        out = {}
        for name, arr in self.draws.items():
            arr = np.asarray(arr)
            if arr.ndim == 1:
                out[name] = arr
            else:
                for j in range(arr.shape[1]):
                    out[f"{name}_{j + 1}"] = arr[:, j]
        return out

    def subset(self, idx):
        idx = np.asarray(idx)
        return PosteriorSamples(
            self.family, self.order, {k: np.asarray(v)[idx] for k, v in self.draws.items()},
            self.chain[idx], self.iteration[idx], self.acceptance,
            None if self.z is None else self.z[idx], dict(self.meta),
        )

    def to_csv(self, path):
        cols = self.columns()
        names = list(cols)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chain", "iter"] + names)
            for i in range(self.n_draws):
                writer.writerow([int(self.chain[i]), int(self.iteration[i])]
                                + [repr(float(cols[n][i])) for n in names])

    @classmethod
    def from_csv(cls, path, family, order, meta=None):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ContractError(f"{path} is empty")
        header, body = rows[0], rows[1:]
        if header[:2] != ["chain", "iter"]:
            raise ContractError(f"{path} is not a draws file (expected chain, iter columns)")
        table = np.array(body, dtype=float).reshape(len(body), len(header))
        chain = table[:, 0].astype(int)
        iteration = table[:, 1].astype(int)
        draws = {}
        groups = {}
        for j, name in enumerate(header[2:], start=2):
            base, _, idx = name.rpartition("_")
            if base and idx.isdigit():
                groups.setdefault(base, []).append((int(idx), j))
            else:
                draws[name] = table[:, j]
        for base, items in groups.items():
            items.sort()
            draws[base] = table[:, [j for _, j in items]]
        if "w" not in draws or draws["w"].shape[1] != order:
            raise ContractError(f"draws file does not hold {order} weight columns")
        return cls(family, order, draws, chain, iteration, meta=dict(meta or {}))

    def metadata(self):
        return {"family": self.family, "order": self.order, "n_draws": self.n_draws,
                "acceptance": self.acceptance, **self.meta}

    def write_metadata(self, path):
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj))
