"""Randomized quantile residuals, posterior predictive forecasts and posterior summaries."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import ContractError, ParameterError
from .mcmc.engine import get_family
from .mcmc.state import PosteriorSamples, SeriesData
from .mtd import MtdModel, lag_matrix

log = logging.getLogger(__name__)

CLAMP = 1e-12


@dataclass
class ResidualDraws:
    """One residual vector r_{L+1..n} per posterior draw (rows)."""

    r: np.ndarray
    discrete: bool
    n_clamped: int = 0
    order: int = 1

    @property
    def pooled(self):
        return self.r.ravel()

    def ks(self):
        return stats.kstest(self.pooled, "norm")

    def pooled_ks(self, alpha=0.01):
        """KS statistic of the pooled residuals against N(0, 1).

        Rows are residuals of one series under different draws, so they are
        strongly dependent; the critical value uses the series length n - L
        rather than the pooled count. Returns (statistic, critical, passed).
        """
        d = float(stats.kstest(self.pooled, "norm").statistic)
        crit = float(stats.kstwo.ppf(1.0 - alpha, self.r.shape[1]))
        return d, crit, d < crit


def _mixture_cdf(components, w, target, lagged):
    out = np.zeros(target.shape)
    for l, comp in enumerate(components):
        if w[l] > 0:
            out += w[l] * np.asarray(comp.cdf(target, lagged[:, l]), dtype=float)
    return out


def _residuals_from(components, w, x, L, discrete, rng):
    lagged = lag_matrix(x, L)
    target = np.asarray(x, dtype=float)[L:]
    upper = _mixture_cdf(components, w, target, lagged)
    if discrete:
        lower = _mixture_cdf(components, w, target - 1.0, lagged)
        u = lower + (upper - lower) * rng.random(target.size)
    else:
        u = upper
    bad = (u < CLAMP) | (u > 1.0 - CLAMP)
    u = np.clip(u, CLAMP, 1.0 - CLAMP)
    return special.ndtri(u), int(bad.sum())


def model_residuals(m: MtdModel, x, rng) -> ResidualDraws:
    """Residuals of a series under fixed, known model parameters."""
    r, n_bad = _residuals_from(m.components, m.w, np.asarray(x, dtype=float), m.order, m.discrete, rng)
    if n_bad:
        log.warning("%d conditional cdf values clamped to [%g, 1 - %g]", n_bad, CLAMP, CLAMP)
    return ResidualDraws(r[None, :], m.discrete, n_bad, m.order)


def quantile_residuals(samples: PosteriorSamples, data: SeriesData, rng, draws=None) -> ResidualDraws:
    """r_t = Phi^-1(F(x_t | history)) for each stored draw; randomized between cdf jumps
    for count data. ``draws`` selects a subset of draw indices (default: all)."""
    if samples.order != data.order:
        raise ContractError(f"samples have order {samples.order}, data order {data.order}")
    fam = get_family(samples.family)
    idx = range(samples.n_draws) if draws is None else draws
    rows, n_bad = [], 0
    for i in idx:
        theta = samples.theta(i)
        comps = fam.components(theta, data.order)
        x = fam.transformed(data.values, theta, data)
        r, bad = _residuals_from(comps, samples.w[i], x, data.order, fam.discrete, rng)
        rows.append(r)
        n_bad += bad
    if n_bad:
        log.warning("%d conditional cdf values clamped to [%g, 1 - %g]", n_bad, CLAMP, CLAMP)
    return ResidualDraws(np.vstack(rows), fam.discrete, n_bad, data.order)


def qq_table(res: ResidualDraws, level=0.95):
    """Theoretical Normal quantiles against the posterior mean and band of sorted residuals."""
    srt = np.sort(res.r, axis=1)
    m = srt.shape[1]
    theo = special.ndtri((np.arange(1, m + 1) - 0.5) / m)
    a = (1.0 - level) / 2.0
    return {
        "theoretical": theo,
        "mean": srt.mean(axis=0),
        "lower": np.quantile(srt, a, axis=0),
        "upper": np.quantile(srt, 1.0 - a, axis=0),
    }


# --------------------------------------------------------------------------
# forecasting
# --------------------------------------------------------------------------

@dataclass
class Forecast:
    k: int
    draws: np.ndarray  # (n_draws, k)
    levels: tuple = (0.5, 0.8, 0.9, 0.95)
    intervals: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.intervals:
            self.intervals = {lv: self.interval(lv) for lv in self.levels}

    def interval(self, level):
        if not 0.0 < level < 1.0:
            raise ParameterError(f"interval level must be in (0, 1), got {level}")
        a = (1.0 - level) / 2.0
        lo, med, hi = np.quantile(self.draws, [a, 0.5, 1.0 - a], axis=0)
        return {"lower": lo, "median": med, "upper": hi}

    def summary(self):
        return {
            "k": self.k,
            "n_draws": int(self.draws.shape[0]),
            "mean": self.draws.mean(axis=0).tolist(),
            "intervals": {str(lv): {k: v.tolist() for k, v in iv.items()} for lv, iv in self.intervals.items()},
        }


def _forecast_path(components, w, history, k, rng):
    L = len(components)
    hist = list(history[-L:])
    cw = np.cumsum(w)
    cw[-1] = 1.0
    out = np.empty(k)
    for j in range(k):
        lag = min(int(np.searchsorted(cw, rng.random(), side="right")) + 1, L)
        val = components[lag - 1].sample(hist[-lag], rng)
        out[j] = val
        hist.append(val)
    return out


def model_forecast(m: MtdModel, x, k, seed=0, n_paths=1000, levels=(0.5, 0.8, 0.9, 0.95)) -> Forecast:
    """Predictive draws under fixed parameters; path i uses the substream (seed, i)."""
    x = np.asarray(x, dtype=float)
    if x.size < m.order:
        raise ContractError(f"need at least L={m.order} observations to forecast")
    sims = np.array([_forecast_path(m.components, m.w, x, k, np.random.default_rng([seed, i]))
                     for i in range(n_paths)])
    return Forecast(k, sims, tuple(levels))


def predict(samples: PosteriorSamples, data: SeriesData, k, seed=0, levels=(0.5, 0.8, 0.9, 0.95)) -> Forecast:
    """Composition sampling from the k-step posterior predictive, one path per stored draw."""
    if k < 1:
        raise ParameterError("forecast horizon k must be at least 1")
    if samples.order != data.order:
        raise ContractError(f"samples have order {samples.order}, data order {data.order}")
    fam = get_family(samples.family)
    fut = data.future_covariates(k)
    sims = np.empty((samples.n_draws, k))
    for i in range(samples.n_draws):
        theta = samples.theta(i)
        comps = fam.components(theta, data.order)
        x = fam.transformed(data.values, theta, data)
        path = _forecast_path(comps, samples.w[i], x, k, np.random.default_rng([seed, i]))
        sims[i] = fam.back_transform(path, theta, fut)
    return Forecast(k, sims, tuple(levels))


# --------------------------------------------------------------------------
# posterior summaries
# --------------------------------------------------------------------------

def _autocorr(x):
    n = x.size
    xc = x - x.mean()
    f = np.fft.rfft(xc, 2 * n)
    acov = np.fft.irfft(f * np.conj(f))[:n] / n
    return acov / acov[0]


def effective_sample_size(x):
    """ESS with the initial positive sequence truncation of the autocorrelations."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4 or np.ptp(x) == 0:
        return float(n)
    rho = _autocorr(x)
    total = 0.0
    for m in range(0, n // 2):
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0:
            break
        total += pair
    tau = max(2.0 * total - 1.0, 1.0 / n)
    return float(n / tau)


def summarize_array(x, chain=None, levels=(0.95,)):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ParameterError("cannot summarise an empty sample")
    probs = sorted({0.5} | {p for lv in levels for p in ((1 - lv) / 2, 1 - (1 - lv) / 2)})
    qs = np.quantile(x, probs)
    if chain is None:
        ess = effective_sample_size(x)
    else:
        ess = sum(effective_sample_size(x[chain == c]) for c in np.unique(chain))
    return {
        "mean": float(x.mean()),
        "sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
        "quantiles": {f"{p:g}": float(q) for p, q in zip(probs, qs)},
        "ess": float(ess),
    }


def summarize(samples, levels=(0.95,)):
    """Per-scalar mean, sd, quantiles and ESS. Accepts PosteriorSamples or a name -> array dict."""
    if isinstance(samples, PosteriorSamples):
        cols, chain = samples.columns(), samples.chain
    else:
        cols, chain = {k: np.asarray(v) for k, v in samples.items()}, None
    return {name: summarize_array(v, chain, levels) for name, v in cols.items()}


# --------------------------------------------------------------------------
# table output
# --------------------------------------------------------------------------

def write_residuals_csv(path, res: ResidualDraws):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["draw", "t", "r"])
        for d, row in enumerate(res.r):
            for j, v in enumerate(row):
                wr.writerow([d, res.order + j + 1, repr(float(v))])


def write_qq_csv(path, table):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        names = list(table)
        wr.writerow(names)
        for row in zip(*(table[n] for n in names)):
            wr.writerow([repr(float(v)) for v in row])


def write_forecast(path_csv, path_json, fc: Forecast):
    with open(path_csv, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["draw", "step", "value"])
        for d, row in enumerate(fc.draws):
            for j, v in enumerate(row):
                wr.writerow([d, j + 1, repr(float(v))])
    with open(path_json, "w") as fh:
        json.dump(fc.summary(), fh, indent=2)
