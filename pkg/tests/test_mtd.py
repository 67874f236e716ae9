import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from stationary_mtd import dists
from stationary_mtd.diagnostics import model_forecast
from stationary_mtd.errors import ContractError, DomainError, UnsupportedOperation
from stationary_mtd.experiments import scenario_model
from stationary_mtd.mtd import (
    Fixed, MtdModel, _startup_weights, acf, acf_closed_form, companion_roots, empirical_acf,
    lag_matrix, log_cond_likelihood, simulate, transition_cdf, transition_logpdf, transition_pdf,
    weak_stationarity_check,
)
from stationary_mtd.transitions import BernoulliT, GaussianT, LomaxT, PoissonT, trans_pdf

from conftest import ALL_TAGS, example_family


def gaussian_model(w, rho, mu=10.0, sigma2=100.0):
    return MtdModel(w, [GaussianT(mu, sigma2, r) for r in rho])


# -- construction ----------------------------------------------------------------

def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        gaussian_model((0.5, 0.4), (0.1, 0.2))
    with pytest.raises(ValueError):
        gaussian_model((1.2, -0.2), (0.1, 0.2))


def test_mixed_families_rejected():
    with pytest.raises(ValueError):
        MtdModel((0.5, 0.5), [GaussianT(0, 1, 0.1), PoissonT(1, 1)])


def test_debug_mode_rejects_incompatible_marginals():
    with pytest.raises(ValueError):
        MtdModel((0.5, 0.5), [GaussianT(0, 1, 0.1), GaussianT(1, 1, 0.1)], debug=True)
    MtdModel((0.5, 0.5), [GaussianT(0, 1, 0.1), GaussianT(0, 1, 0.8)], debug=True)


def test_shared_component_broadcast():
    m = MtdModel((0.3, 0.7), PoissonT(2.0, 3.0))
    assert m.order == 2 and m.family == "poisson" and m.discrete


def test_lag_matrix_layout():
    x = np.arange(1.0, 7.0)
    M = lag_matrix(x, 2)
    assert np.array_equal(M, [[2, 1], [3, 2], [4, 3], [5, 4]])
    with pytest.raises(ContractError):
        lag_matrix(x[:2], 2)


# -- transition evaluators ----------------------------------------------------------

def test_order_one_reduces_to_component():
    f = GaussianT(1.0, 2.0, 0.4)
    m = MtdModel((1.0,), [f])
    assert transition_pdf(m, 0.3, [1.5]) == pytest.approx(trans_pdf(f, 0.3, 1.5), rel=1e-14)


def test_unit_first_weight_ignores_older_history():
    m = gaussian_model((1.0, 0.0, 0.0), (0.5, 0.2, 0.9))
    a = transition_pdf(m, 12.0, [11.0, -50.0, 80.0])
    b = transition_pdf(m, 12.0, [11.0, 3.0, 0.0])
    assert a == b == pytest.approx(trans_pdf(GaussianT(10, 100, 0.5), 12.0, 11.0), rel=1e-14)


def test_scenario_one_hand_evaluation():
    m = scenario_model(1)
    w = np.exp(-np.arange(1, 6))
    w /= w.sum()
    rho = np.array([0.7, 0.3, 0.1, 0.05, 0.05])
    hand = sum(wi / math.sqrt(2 * math.pi * 100 * (1 - r * r)) for wi, r in zip(w, rho))
    assert transition_pdf(m, 10.0, [10.0] * 5) == pytest.approx(hand, rel=1e-13)
    assert transition_logpdf(m, 10.0, [10.0] * 5) == pytest.approx(math.log(hand), rel=1e-13)


def test_history_length_is_enforced():
    m = gaussian_model((0.5, 0.5), (0.1, 0.2))
    with pytest.raises(ContractError):
        transition_pdf(m, 1.0, [1.0])
    with pytest.raises(ContractError):
        transition_cdf(m, 1.0, [1.0, 2.0, 3.0])


def test_cdf_limits():
    m = gaussian_model((0.5, 0.5), (0.1, 0.2))
    assert transition_cdf(m, -1e6, [1.0, 2.0]) == 0.0
    assert transition_cdf(m, 1e6, [1.0, 2.0]) == 1.0
    lm = MtdModel((0.5, 0.5), LomaxT.special(10.0, 3.0))
    assert transition_cdf(lm, -1.0, [1.0, 2.0]) == 0.0


def test_poisson_cdf_at_zero_convolution_oracle():
    lam, gam = 2.0, 3.0
    w = np.array([0.2, 0.5, 0.3])
    m = MtdModel(w, PoissonT(lam, gam))
    hist = [4, 0, 7]
    oracle = sum(wl * math.exp(-lam) * (lam / (lam + gam)) ** y for wl, y in zip(w, hist))
    assert transition_cdf(m, 0, hist) == pytest.approx(oracle, rel=1e-13)


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_mixture_normalises(tag):
    f = example_family(tag)
    m = MtdModel((0.6, 0.4), f)
    hist = [1, 0] if f.discrete else list(np.asarray(f.marginal_quantile(np.array([0.3, 0.8]))))
    if f.discrete:
        k = np.arange(f.truncation() + 200 if tag not in ("bernoulli", "binomial") else f.truncation() + 1)
        assert np.sum(transition_pdf(m, k, hist)) == pytest.approx(1.0, abs=1e-12)
    else:
        assert transition_cdf(m, 1e12, hist) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("tag", [t for t in ALL_TAGS if t in ("gaussian", "student_t", "lomax", "gamma")])
def test_cdf_monotone_and_derivative_is_pdf(tag):
    f = example_family(tag)
    m = MtdModel((0.7, 0.3), f)
    hist = list(np.asarray(f.marginal_quantile(np.array([0.2, 0.6]))))
    x = np.asarray(f.marginal_quantile(np.linspace(0.05, 0.95, 30)))
    c = transition_cdf(m, x, hist)
    assert np.all(np.diff(c) >= 0)
    h = 1e-5 * np.maximum(np.abs(x), 1e-2)
    fd = (transition_cdf(m, x + h, hist) - transition_cdf(m, x - h, hist)) / (2 * h)
    assert np.max(np.abs(fd - transition_pdf(m, x, hist))) < 1e-5


# -- simulation -----------------------------------------------------------------------

def test_startup_weights():
    w = np.array([0.4, 0.3, 0.2, 0.1])
    assert np.array_equal(_startup_weights(w, 2), [1.0])
    assert np.allclose(_startup_weights(w, 3), [0.4, 0.6])
    assert np.allclose(_startup_weights(w, 4), [0.4, 0.3, 0.3])


def test_startup_segment_has_invariant_marginal():
    """x_2..x_L are marginally f_X under the start-up rule, not just x_1."""
    m = scenario_model(2)
    rng = np.random.default_rng(5)
    X = np.array([simulate(m, 5, rng)[0] for _ in range(4000)])
    marg = dists.Normal(10.0, 10.0)
    for j in range(5):
        assert stats.kstest(X[:, j], marg.cdf).pvalue > 0.001


def test_scenario_one_sample_mean():
    x, meta = simulate(scenario_model(1), 2000, np.random.default_rng(2024))
    # crude s.e. inflation from the recursion-based ACF
    r = acf(scenario_model(1), 200, init="linear").r
    se = math.sqrt(100.0 / 2000 * (1 + 2 * np.sum(r[1:])))
    assert abs(x.mean() - 10.0) < 3 * se
    assert meta["init"] == "marginal" and meta["stationary_start"]


def test_order_one_gaussian_is_ar1():
    m = gaussian_model((1.0,), (0.8,), mu=0.0, sigma2=1.0)
    x, _ = simulate(m, 200_000, np.random.default_rng(3))
    assert empirical_acf(x, 1)[1] == pytest.approx(0.8, abs=0.01)


def test_poisson_simulation_marginal_chi_square():
    m = MtdModel((0.5, 0.3, 0.2), PoissonT(2.0, 3.0))
    x, _ = simulate(m, 50_000, np.random.default_rng(17))
    top = 12
    obs = np.bincount(np.minimum(x, top), minlength=top + 1)
    p = dists.Poisson(5.0).pdf(np.arange(top))
    p = np.append(p, 1 - p.sum())
    # dependence inflates the variance of counts; test at the nominal level on a thinned series
    xt = x[::10]
    obs = np.bincount(np.minimum(xt, top), minlength=top + 1)
    assert stats.chisquare(obs, p * xt.size).pvalue > 0.01


def test_fixed_init():
    m = gaussian_model((0.5, 0.5), (0.1, 0.2))
    x, meta = simulate(m, 10, np.random.default_rng(0), init=Fixed((1.0, 2.0)))
    assert x[:2].tolist() == [1.0, 2.0]
    assert meta["init"] == "fixed" and meta["stationary_start"] is False
    with pytest.raises(ContractError):
        simulate(m, 10, np.random.default_rng(0), init=Fixed((1.0,)))
    with pytest.raises(DomainError):
        simulate(MtdModel((1.0,), PoissonT(1, 1)), 5, np.random.default_rng(0), init=Fixed((-1,)))


def test_zero_length_and_determinism():
    m = scenario_model(1)
    assert simulate(m, 0, np.random.default_rng(0))[0].size == 0
    a, _ = simulate(m, 300, np.random.default_rng(8))
    b, _ = simulate(m, 300, np.random.default_rng(8))
    assert np.array_equal(a, b)


def test_forecasts_depend_only_on_last_L_values():
    m = gaussian_model((0.6, 0.4), (0.5, 0.2))
    x = np.array([3.0, 50.0, -7.0, 12.0, 9.0, 11.0])
    y = x.copy()
    y[:4] = y[:4][::-1]  # permute everything older than lag 2
    a = model_forecast(m, x, 3, seed=4, n_paths=200).draws
    b = model_forecast(m, y, 3, seed=4, n_paths=200).draws
    assert np.array_equal(a, b)


# -- likelihood ----------------------------------------------------------------------

def test_likelihood_single_term():
    m = gaussian_model((0.5, 0.5), (0.1, 0.2))
    x = np.array([9.0, 11.0, 10.5])
    assert log_cond_likelihood(m, x) == pytest.approx(transition_logpdf(m, 10.5, [11.0, 9.0]), rel=1e-14)


@pytest.mark.parametrize("tag", ["gaussian", "poisson", "lomax", "bernoulli"])
def test_likelihood_matches_product_of_transitions(tag):
    f = example_family(tag)
    w = np.array([0.5, 0.3, 0.2])
    m = MtdModel(w, f)
    x, _ = simulate(m, 20, np.random.default_rng(31))
    prod = 1.0
    for t in range(3, 20):
        prod *= transition_pdf(m, x[t], x[t - 1::-1][:3] if t >= 3 else None)
    assert math.exp(log_cond_likelihood(m, x)) == pytest.approx(prod, rel=1e-10)


def test_likelihood_with_unit_first_weight():
    comps = [GaussianT(0.0, 1.0, r) for r in (0.4, 0.9)]
    m = MtdModel((1.0, 0.0), comps)
    x, _ = simulate(m, 40, np.random.default_rng(1))
    direct = sum(comps[0].logpdf(x[t], x[t - 1]) for t in range(2, 40))
    assert log_cond_likelihood(m, x) == pytest.approx(direct, rel=1e-12)


def test_likelihood_out_of_support_is_minus_inf():
    m = MtdModel((1.0,), PoissonT(1.0, 1.0))
    assert log_cond_likelihood(m, [1, 2, -1, 3]) == -math.inf
    with pytest.raises(ContractError):
        log_cond_likelihood(m, [1])


# -- autocorrelation and stationarity -------------------------------------------------

def test_acf_order_one_is_geometric():
    res = acf(gaussian_model((1.0,), (0.7,)), 30)
    assert res.phi_const == pytest.approx(0.0, abs=1e-14)
    assert np.max(np.abs(res.r - 0.7 ** np.arange(31))) < 1e-12


def test_acf_common_rho_reduces_to_weighted_sum():
    w = np.array([0.5, 0.3, 0.2])
    res = acf(gaussian_model(w, (0.6, 0.6, 0.6)), 25, init="linear")
    r = res.r
    for h in range(3, 26):
        assert r[h] == pytest.approx(0.6 * np.dot(w, r[h - 1::-1][:3]), abs=1e-14)


@pytest.mark.parametrize("k", [1, 2])
def test_acf_recursion_residual(k):
    assert acf(scenario_model(k), 60, init="linear").recursion_residual() < 1e-12
    assert acf(scenario_model(k), 60, mc_length=20_000).recursion_residual() < 1e-12


def test_acf_linear_and_monte_carlo_inits_agree():
    m = scenario_model(2)
    lin = acf(m, 10, init="linear")
    mc = acf(m, 10, mc_length=200_000, seed=3)
    assert np.all(np.abs(lin.r[1:5] - mc.r[1:5]) < 4 * mc.init_se + 1e-3)


def test_acf_closed_form_matches_recursion():
    res = acf(scenario_model(2), 40, init="linear")
    assert np.max(np.abs(acf_closed_form(res, 40) - res.r)) < 1e-9


def test_acf_poisson_model():
    m = MtdModel((0.7, 0.3), PoissonT(2.0, 3.0))
    res = acf(m, 5, init="linear")
    assert res.phi_const == pytest.approx(0.0, abs=1e-12)
    assert res.r[1] > 0


def test_acf_rejects_nonlinear_family():
    with pytest.raises(UnsupportedOperation):
        acf(MtdModel((1.0,), BernoulliT(0.3, 0.2)), 5)
    with pytest.raises(UnsupportedOperation):
        weak_stationarity_check(MtdModel((1.0,), LomaxT(1.0, 1.0, 0.5, 3.0)))


def test_roots_examples():
    rep = weak_stationarity_check(gaussian_model((1.0,), (0.4,)))
    assert rep.roots[0] == pytest.approx(0.4)
    assert rep.all_inside
    boundary = np.sort(companion_roots([0.5, 0.5]).real)
    assert np.allclose(boundary, [-0.5, 1.0])
    for k in (1, 2):
        rep = weak_stationarity_check(scenario_model(k))
        assert rep.all_inside and rep.max_modulus < 1


@settings(max_examples=40, deadline=None)
@given(wb=st.lists(st.floats(-1, 1), min_size=1, max_size=6))
def test_companion_roots_solve_characteristic_polynomial(wb):
    z = companion_roots(wb)
    L = len(wb)
    poly = np.concatenate([[1.0], -np.asarray(wb)])
    scale = np.maximum(1.0, np.abs(z)) ** L
    assert np.all(np.abs(np.polyval(poly, z)) / scale < 1e-8)
