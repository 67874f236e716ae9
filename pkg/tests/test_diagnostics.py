import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from stationary_mtd.diagnostics import (
    Forecast, ResidualDraws, _residuals_from, effective_sample_size, model_forecast, model_residuals, predict,
    qq_table, quantile_residuals, summarize, write_forecast, write_qq_csv, write_residuals_csv,
)
from stationary_mtd.errors import ContractError, ParameterError
from stationary_mtd.mcmc import FitConfig, PosteriorSamples, SeriesData, run_fit
from stationary_mtd.mtd import MtdModel, simulate, transition_pdf
from stationary_mtd.priors import GaussianPrior, StickBreaking
from stationary_mtd.transitions import GaussianT, LomaxT, PoissonT


def _scenario_gauss(mu=0.0):
    return MtdModel((0.5, 0.3, 0.2), [GaussianT(mu, 4.0, r) for r in (0.7, 0.2, -0.3)])


SELF_MODELS = {
    "gaussian": _scenario_gauss(),
    "poisson": MtdModel((0.5, 0.3, 0.2), PoissonT(2.0, 3.0)),
    "lomax": MtdModel((0.5, 0.3, 0.2), LomaxT.special(20.0, 5.0)),
}


# -- residuals ------------------------------------------------------------------------------

@pytest.mark.parametrize("name", list(SELF_MODELS))
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_residuals_at_true_parameters_are_normal(name, seed):
    m = SELF_MODELS[name]
    x, _ = simulate(m, 3000, np.random.default_rng(seed))
    res = model_residuals(m, x, np.random.default_rng(seed + 100))
    assert res.r.shape == (1, 2997)
    assert np.all(np.isfinite(res.r))
    assert res.ks().pvalue > 0.01


def test_misspecified_mean_fails():
    x, _ = simulate(_scenario_gauss(), 2000, np.random.default_rng(4))
    res = model_residuals(_scenario_gauss(mu=5 * 2.0), x, np.random.default_rng(5))
    assert res.ks().pvalue < 0.01


class _PointMass:
    """Transition that puts all mass on 3."""

    def cdf(self, x, y):
        return np.where(np.asarray(x) >= 3, 1.0, 0.0)


def test_point_mass_residuals_are_standard_normal():
    x = np.full(5001, 3.0)
    r, n_bad = _residuals_from([_PointMass()], np.array([1.0]), x, 1, True, np.random.default_rng(6))
    assert stats.kstest(r, "norm").pvalue > 0.01
    assert n_bad == 0


def test_extreme_values_are_clamped_and_counted():
    m = MtdModel((1.0,), GaussianT(0.0, 1.0, 0.0))
    res = model_residuals(m, np.array([0.0, 50.0, -50.0, 0.1]), np.random.default_rng(0))
    assert res.n_clamped == 2
    assert np.all(np.isfinite(res.r))
    assert np.max(np.abs(res.r)) == pytest.approx(abs(stats.norm.ppf(1e-12)), rel=1e-5)


def _gauss_fit(n=300, seed=0, iters=600, L=3):
    m = _scenario_gauss()
    x, _ = simulate(m, n, np.random.default_rng(seed))
    data = SeriesData(x, L)
    s = run_fit(data, "gaussian", StickBreaking(1.0), GaussianPrior(), FitConfig(iters=iters, burnin=200, thin=4,
                                                                               seed=seed))
    return data, s


def test_posterior_residuals_shape_and_pooled_check():
    data, s = _gauss_fit()
    res = quantile_residuals(s, data, np.random.default_rng(1))
    assert res.r.shape == (s.n_draws, data.n_cond)
    d, crit, ok = res.pooled_ks()
    assert ok, (d, crit)
    sub = quantile_residuals(s, data, np.random.default_rng(1), draws=[0, 5])
    assert sub.r.shape == (2, data.n_cond)
    with pytest.raises(ContractError):
        quantile_residuals(s, SeriesData(data.values, 2), np.random.default_rng(1))


def test_posterior_residuals_discrete():
    m = SELF_MODELS["poisson"]
    x, _ = simulate(m, 400, np.random.default_rng(8))
    data = SeriesData(x, 3)
    from stationary_mtd.priors import PoissonPrior
    s = run_fit(data, "poisson", StickBreaking(1.0), PoissonPrior(), FitConfig(iters=600, burnin=200, thin=4))
    res = quantile_residuals(s, data, np.random.default_rng(2))
    assert res.discrete
    assert res.pooled_ks()[2]


def test_qq_table_ordering():
    data, s = _gauss_fit()
    table = qq_table(quantile_residuals(s, data, np.random.default_rng(3)))
    assert np.all(np.diff(table["theoretical"]) > 0)
    assert np.allclose(table["theoretical"], -table["theoretical"][::-1])
    assert np.all(table["lower"] <= table["mean"] + 1e-12)
    assert np.all(table["mean"] <= table["upper"] + 1e-12)


# -- forecasting -------------------------------------------------------------------------------

def _single_draw_samples(theta, w, family="gaussian", repeat=1):
    draws = {k: np.repeat(np.atleast_1d(np.asarray(v, float))[None, :] if np.ndim(v) else np.array([v], float),
                          repeat, axis=0) for k, v in theta.items()}
    draws = {k: (v[:, 0] if v.ndim == 2 and k not in ("rho", "beta") else v) for k, v in draws.items()}
    draws["w"] = np.repeat(np.asarray(w, float)[None, :], repeat, axis=0)
    n = repeat
    return PosteriorSamples(family, len(w), draws, np.zeros(n, int), np.arange(n))


def test_degenerate_posterior_gives_marginal_forecast():
    s = _single_draw_samples({"mu": 3.0, "sigma2": 4.0, "rho": np.array([0.0])}, [1.0], repeat=4000)
    data = SeriesData(np.array([10.0, -5.0, 7.0]), 1)
    fc = predict(s, data, 3, seed=1)
    assert fc.draws.shape == (4000, 3)
    for j in range(3):
        assert stats.kstest(fc.draws[:, j], stats.norm(3.0, 2.0).cdf).pvalue > 0.01


def test_one_step_predictive_matches_mixture_average():
    data, s = _gauss_fit(iters=600)
    rep = 40
    big = s.subset(np.repeat(np.arange(s.n_draws), rep))
    fc = predict(big, data, 1, seed=2)
    edges = np.quantile(fc.draws[:, 0], np.linspace(0, 1, 11))
    edges[0], edges[-1] = -np.inf, np.inf
    hist = np.histogram(fc.draws[:, 0], edges)[0] / fc.draws.shape[0]
    # direct evaluation of the predictive: average over draws of the mixture cdf
    hist_ref = np.zeros(10)
    from stationary_mtd.mcmc import get_family
    fam = get_family("gaussian")
    h = data.values[::-1][:data.order]
    for i in range(s.n_draws):
        comps = fam.components(s.theta(i), data.order)
        cdf = sum(wl * c.cdf(edges, h[l]) for l, (wl, c) in enumerate(zip(s.w[i], comps)))
        hist_ref += np.diff(cdf)
    hist_ref /= s.n_draws
    se = np.sqrt(hist_ref * (1 - hist_ref) / fc.draws.shape[0])
    assert np.all(np.abs(hist - hist_ref) < 3 * se)


def test_poisson_one_step_pmf_by_enumeration():
    m = MtdModel((0.5, 0.3, 0.2), PoissonT(2.0, 3.0))
    x = np.array([1, 4, 0, 6, 2])
    fc = model_forecast(m, x, 1, seed=3, n_paths=20_000)
    k = np.arange(0, 40)
    pmf = transition_pdf(m, k, x[::-1][:3])
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    # enumerate the convolution independently: Poisson(lam) + Binomial(y, gamma / (lam + gamma))
    p = 3.0 / 5.0
    direct = np.zeros(k.size)
    for wl, y in zip((0.5, 0.3, 0.2), (2, 6, 0)):
        comp = np.convolve(stats.poisson.pmf(k, 2.0), stats.binom.pmf(np.arange(y + 1), y, p))[: k.size]
        direct += wl * comp
    assert np.allclose(pmf, direct, atol=1e-14)
    top = 12
    obs = np.bincount(np.minimum(fc.draws[:, 0].astype(int), top), minlength=top + 1)
    expected = np.append(direct[:top], 1 - direct[:top].sum()) * fc.draws.shape[0]
    assert stats.chisquare(obs, expected).pvalue > 0.01


def test_forecast_paths_use_per_draw_substreams():
    data, s = _gauss_fit()
    a = predict(s, data, 4, seed=9)
    b = predict(s, data, 4, seed=9)
    assert np.array_equal(a.draws, b.draws)
    # the path of draw i does not depend on which other draws are present
    sub = predict(s.subset([0, 1, 2]), data, 4, seed=9)
    assert np.array_equal(sub.draws, a.draws[:3])


def test_forecast_contract_errors():
    data, s = _gauss_fit()
    with pytest.raises(ParameterError):
        predict(s, data, 0)
    with pytest.raises(ContractError):
        predict(s, SeriesData(data.values, 2), 1)
    with pytest.raises(ContractError):
        model_forecast(_scenario_gauss(), np.array([1.0, 2.0]), 1)


def test_lomax_regression_forecast_needs_design():
    X = np.column_stack([np.cos(np.arange(30)), np.sin(np.arange(30))])
    data = SeriesData(np.exp(np.random.default_rng(0).normal(size=30)), 2, covariates=X)
    s = _single_draw_samples({"alpha": 5.0, "phi": 3.0, "beta": np.array([0.1, 0.2])}, [0.5, 0.5], "lomax")
    with pytest.raises(ContractError):
        predict(s, data, 2)


@settings(max_examples=25, deadline=None)
@given(lo=st.floats(0.05, 0.9), gap=st.floats(0.01, 0.09), seed=st.integers(0, 1000))
def test_wider_level_never_shrinks_interval(lo, gap, seed):
    draws = np.random.default_rng(seed).standard_t(3, size=(500, 3))
    fc = Forecast(3, draws, ())
    a, b = fc.interval(lo), fc.interval(min(lo + gap, 0.99))
    assert np.all(b["lower"] <= a["lower"]) and np.all(b["upper"] >= a["upper"])
    assert np.all(a["lower"] <= a["median"]) and np.all(a["median"] <= a["upper"])


# -- summaries ------------------------------------------------------------------------------------

def test_constant_chain_summary():
    out = summarize({"c": np.full(100, 2.5)})["c"]
    assert out["sd"] == 0.0
    assert len(set(out["quantiles"].values())) == 1


def test_iid_chain_ess():
    x = np.random.default_rng(0).standard_normal(10_000)
    out = summarize({"x": x})["x"]
    assert abs(out["mean"]) < 0.04
    assert abs(out["ess"] / 1e4 - 1) < 0.15


def test_ar1_chain_ess():
    n = 100_000
    rng = np.random.default_rng(1)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / math.sqrt(1 - 0.81)
    for t in range(1, n):
        x[t] = 0.9 * x[t - 1] + e[t]
    expected = n * 0.1 / 1.9
    assert abs(effective_sample_size(x) / expected - 1) < 0.2


def test_summary_of_posterior_samples():
    data, s = _gauss_fit()
    out = summarize(s, levels=(0.9, 0.95))
    assert {"mu", "sigma2", "rho_1", "w_1", "w_3"} <= set(out)
    q = out["mu"]["quantiles"]
    assert q["0.025"] <= q["0.05"] <= q["0.5"] <= q["0.95"] <= q["0.975"]
    assert np.quantile(s.draws["mu"], 0.05) == pytest.approx(q["0.05"])


def test_table_writers(tmp_path):
    data, s = _gauss_fit()
    res = quantile_residuals(s, data, np.random.default_rng(0), draws=[0, 1])
    write_residuals_csv(tmp_path / "r.csv", res)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "draw,t,r" and len(lines) == 1 + 2 * data.n_cond
    assert lines[1].startswith("0,4,")
    write_qq_csv(tmp_path / "qq.csv", qq_table(res))
    assert (tmp_path / "qq.csv").read_text().splitlines()[0] == "theoretical,mean,lower,upper"
    fc = predict(s, data, 2, seed=0)
    write_forecast(tmp_path / "f.csv", tmp_path / "f.json", fc)
    summary = json.loads((tmp_path / "f.json").read_text())
    assert summary["k"] == 2 and "0.9" in summary["intervals"]
