"""Independent reference computations for the sampler checks.

Every grid posterior below is written from the model definition with
scipy.stats densities on the raw data, not from the sufficient statistics
the samplers use.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from stationary_mtd.mcmc import run_fit
from stationary_mtd.mcmc.engine import get_family
from stationary_mtd.mcmc.geweke import batch_se, geweke_test
from stationary_mtd.mcmc.kernels import Tuner
from stationary_mtd.mcmc.state import ChainState, FitConfig, HarmonicDesign, SeriesData
from stationary_mtd.mtd import MtdModel, simulate
from stationary_mtd.priors import GaussianPrior, LomaxPrior, PoissonPrior, StickBreaking
from stationary_mtd.transitions import GaussianT, LomaxT


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


class Grid:
    """Riemann-normalised density on a uniform grid."""

    def __init__(self, logf, lo, hi, n=20001):
        self.x = np.linspace(lo, hi, n)
        lp = np.array([logf(v) for v in self.x])
        lp -= lp.max()
        p = np.exp(lp)
        self.dx = self.x[1] - self.x[0]
        self.p = p / (p.sum() * self.dx)
        self.mean = float(np.sum(self.x * self.p) * self.dx)
        self.sd = float(math.sqrt(np.sum((self.x - self.mean) ** 2 * self.p) * self.dx))
        c = np.cumsum(self.p) * self.dx
        self.c = c / c[-1]

    def cdf(self, v):
        return np.interp(v, self.x, self.c, left=0.0, right=1.0)

    def sample(self, rng, size):
        # inverse-cdf draws from the discretised density
        return np.interp(rng.random(size), self.c, self.x)


def _iid_moment_check(name, draws, grid, k=2.0):
    n = draws.size
    m, s = draws.mean(), draws.std(ddof=1)
    se_m = s / math.sqrt(n)
    m4 = np.mean((draws - m) ** 4)
    se_s = math.sqrt(max(m4 - s ** 4, 0.0) / (4 * s * s * n))
    ok = abs(m - grid.mean) < k * se_m and abs(s - grid.sd) < k * se_s
    return Check(name, ok, f"mean {m:.5g} vs grid {grid.mean:.5g} (se {se_m:.2g}); "
                           f"sd {s:.5g} vs grid {grid.sd:.5g} (se {se_s:.2g})")


# -- toy problems ---------------------------------------------------------------------

def gaussian_toy(seed=0, n=30):
    m = MtdModel((0.6, 0.4), [GaussianT(2.0, 1.5, 0.7), GaussianT(2.0, 1.5, -0.3)])
    x, _ = simulate(m, n, np.random.default_rng(seed))
    data = SeriesData(x, 2)
    z = np.random.default_rng(seed + 1).integers(1, 3, data.n_cond)
    theta = {"mu": 2.0, "sigma2": 1.5, "rho": np.array([0.7, -0.3])}
    return data, ChainState(np.array([0.6, 0.4]), theta, z)


def _gauss_loglik(data, z, mu, sigma2, rho):
    rows = np.arange(data.n_cond)
    r = np.asarray(rho)[z - 1]
    y = data.lagged[rows, z - 1]
    return float(np.sum(stats.norm.logpdf(data.target, (1 - r) * mu + r * y, np.sqrt(sigma2 * (1 - r * r)))))


def check_mu(seed=0, n_draws=100_000):
    data, state = gaussian_toy(seed)
    pp = GaussianPrior(0.0, 100.0, 2.0, 0.1)
    th = state.theta
    grid = Grid(lambda mu: _gauss_loglik(data, state.z, mu, th["sigma2"], th["rho"])
                + stats.norm.logpdf(mu, 0, 10), -10, 14)
    fam = get_family("gaussian")
    rng = np.random.default_rng(seed + 2)
    draws = np.empty(n_draws)
    for i in range(n_draws):
        fam.update_mu(state, data, pp, rng)
        draws[i] = state.theta["mu"]
    return _iid_moment_check("mu", draws, grid)


def check_sigma2(seed=0, n_draws=100_000):
    data, state = gaussian_toy(seed)
    pp = GaussianPrior(0.0, 100.0, 2.0, 0.1)
    th = state.theta
    grid = Grid(lambda s2: _gauss_loglik(data, state.z, th["mu"], s2, th["rho"])
                + stats.invgamma.logpdf(s2, 2.0, scale=0.1), 1e-3, 12.0, 40001)
    fam = get_family("gaussian")
    rng = np.random.default_rng(seed + 3)
    draws = np.empty(n_draws)
    for i in range(n_draws):
        fam.update_sigma2(state, data, pp, rng)
        draws[i] = state.theta["sigma2"]
    return _iid_moment_check("sigma2", draws, grid)


def check_rho(seed=0, n_iter=40_000, thin=10, lag=1):
    data, state = gaussian_toy(seed)
    pp = GaussianPrior()
    th = state.theta
    l = lag - 1

    def logf(r):
        rho = np.array(th["rho"], dtype=float)
        rho[l] = r
        return _gauss_loglik(data, state.z, th["mu"], th["sigma2"], rho)

    grid = Grid(logf, -1 + 1e-9, 1 - 1e-9, 2000)
    fam = get_family("gaussian")
    rng = np.random.default_rng(seed + 4)
    draws = np.empty(n_iter)
    for i in range(n_iter):
        fam.update_rho(state, data, pp, rng)
        draws[i] = state.theta["rho"][l]
    kept = draws[::thin]
    ref = grid.sample(np.random.default_rng(seed + 5), kept.size)
    p = stats.ks_2samp(kept, ref).pvalue
    return Check(f"rho_{lag}", p > 0.01, f"KS p={p:.3f} vs 2000-point grid sampler, {kept.size} thinned draws")


def lomax_toy(seed=0, n=30):
    m = MtdModel((0.5, 0.5), LomaxT.special(20.0, 5.0))
    x, _ = simulate(m, n, np.random.default_rng(seed))
    data = SeriesData(x, 2)
    z = np.random.default_rng(seed + 1).integers(1, 3, data.n_cond)
    return data, ChainState(np.array([0.5, 0.5]), {"alpha": 5.0, "phi": 20.0, "beta": np.zeros(0)}, z)


def _lomax_loglik(data, z, alpha, phi):
    rows = np.arange(data.n_cond)
    y = data.lagged[rows, z - 1]
    return float(np.sum(stats.lomax.logpdf(data.target, alpha, scale=phi + y)))


def check_phi(seed=0, n_iter=60_000):
    data, state = lomax_toy(seed)
    pp = LomaxPrior(6.0, 1.0, 3.0, 20.0)
    grid = Grid(lambda v: _lomax_loglik(data, state.z, 5.0, v) + stats.invgamma.logpdf(v, 3.0, scale=20.0),
                1e-3, 400.0, 40001)
    fam = get_family("lomax")
    tuner = Tuner({"phi": 0.8})
    rng = np.random.default_rng(seed + 6)
    draws = np.empty(n_iter)
    for i in range(n_iter):
        fam.update_phi(state, data, pp, rng, tuner, collapse=False)
        draws[i] = state.theta["phi"]
    draws = draws[1000:]
    se = batch_se(draws)
    ok = abs(draws.mean() - grid.mean) < 2 * se
    return Check("phi", ok, f"mean {draws.mean():.4g} vs grid {grid.mean:.4g} (batch se {se:.2g}); "
                            f"acceptance {tuner.rates()['phi']:.2f}")


def check_alpha(seed=0, n_draws=100_000):
    data, state = lomax_toy(seed)
    pp = LomaxPrior(6.0, 1.0, 3.0, 20.0)
    grid = Grid(lambda a: _lomax_loglik(data, state.z, a, 20.0) + stats.gamma.logpdf(a, 6.0), 1e-3, 40.0, 40001)
    fam = get_family("lomax")
    rng = np.random.default_rng(seed + 7)
    draws = np.empty(n_draws)
    for i in range(n_draws):
        fam.update_alpha(state, data, pp, rng)
        draws[i] = state.theta["alpha"]
    return _iid_moment_check("alpha", draws, grid)


def check_poisson_gamma_limit(seed=0, n=60, L=2):
    """With gamma pinned near 0 the lam posterior is the Gamma-Poisson conjugate one."""
    x = np.random.default_rng(seed).poisson(3.0, n)
    data = SeriesData(x, L)
    pp = PoissonPrior()
    s = run_fit(data, "poisson", StickBreaking(1.0), pp, FitConfig(iters=30_000, burnin=1_000, seed=seed,
                                                                    step_sizes={"lam": 0.3}),
                fixed={"gamma": 1e-8})
    lam = s.draws["lam"]
    shape, rate = 2.0 + x[L:].sum(), 1.0 + (n - L)
    se = batch_se(lam)
    ok = abs(lam.mean() - shape / rate) < 2 * se
    return Check("poisson gamma->0", ok, f"lam mean {lam.mean():.4f} vs conjugate {shape / rate:.4f} (batch se {se:.2g}); "
                                         f"sd {lam.std():.4f} vs {math.sqrt(shape) / rate:.4f}")


# -- joint-distribution tests ------------------------------------------------------------

GEWEKE_CASES = {
    "gaussian": dict(data=lambda: SeriesData(np.array([0.5, -1.0, 2.0] + [0.0] * 47), 3),
                     prior=GaussianPrior(0.0, 4.0, 6.0, 5.0), options={}),
    "poisson": dict(data=lambda: SeriesData(np.array([2, 5, 3] + [0] * 47), 3),
                    prior=PoissonPrior(), options={}),
    "lomax": dict(data=lambda: SeriesData(np.ones(50), 3, design=HarmonicDesign(52, 1)),
                  prior=LomaxPrior(10.0, 1.0, 6.0, 50.0, beta_sd=0.5), options={}),
    "lomax-uncollapsed": dict(data=lambda: SeriesData(np.ones(50), 3),
                              prior=LomaxPrior(10.0, 1.0, 6.0, 50.0), options={"collapse_alpha": False}),
}


def check_geweke(name, seed=1, n_prior=4000, n_chain=20000, family=None, bound=3.0):
    case = GEWEKE_CASES[name]
    fam = family or name.split("-")[0]
    res = geweke_test(fam, case["data"](), StickBreaking(1.0), case["prior"], n_prior=n_prior, n_chain=n_chain,
                      seed=seed, family_options=None if family is not None else case["options"])
    worst, z = res.worst()
    return Check(f"geweke {name}", res.passed(bound), f"{len(res.names)} moments, worst {worst} z={z:.2f}"), res
