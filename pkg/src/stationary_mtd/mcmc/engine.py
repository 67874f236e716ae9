"""The Gibbs sweep shared by all fit pipelines, and the multi-chain driver."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..errors import NumericalFailure, UnsupportedOperation
from ..priors import posterior_sample_w
from ..transitions import FAMILY_TAGS
from .base import FitFamily
from .gaussian import GaussianFamily
from .kernels import Tuner, sample_categorical_log
from .lomax import LomaxFamily
from .poisson import PoissonFamily
from .state import ChainState, FitConfig, PosteriorSamples, SeriesData

log = logging.getLogger(__name__)

FIT_FAMILIES = {"gaussian": GaussianFamily, "poisson": PoissonFamily, "lomax": LomaxFamily}


def get_family(spec, **kwargs) -> FitFamily:
    if isinstance(spec, FitFamily):
        return spec
    if spec in FIT_FAMILIES:
        return FIT_FAMILIES[spec](**kwargs)
    if spec in FAMILY_TAGS:
        raise UnsupportedOperation(f"{spec!r} is a simulation-only family; fits exist for {sorted(FIT_FAMILIES)}")
    raise UnsupportedOperation(f"unknown family {spec!r}")


def update_allocations(state: ChainState, data: SeriesData, family: FitFamily, rng):
    """Draw every z_t with P(z_t = l) proportional to w_l f_l(x_t | x_{t-l})."""
    with np.errstate(divide="ignore"):
        logw = np.log(state.w)
    logp = family.log_trans_matrix(state, data) + logw[None, :]
    z, bad = sample_categorical_log(logp, rng)
    if bad.any():
        t = int(np.flatnonzero(bad)[0]) + data.order + 1
        raise NumericalFailure(f"all allocation probabilities vanish at t={t}")
    state.z = z
    return z


def update_weights(state: ChainState, prior, rng):
    counts = state.counts(state.w.size)
    state.w = posterior_sample_w(prior, counts, rng)
    return state.w


def _sweep_update(name, state, data, prior, rng, tuner=None):
    fam = FIT_FAMILIES[name]()
    fam.update_params(state, data, prior, rng, tuner or Tuner())
    if name == "poisson":
        fam.update_latents(state, data, rng, tuner or Tuner())
    return state.theta


def update_gaussian(state, data, prior, rng):
    return _sweep_update("gaussian", state, data, prior, rng)


def update_poisson(state, data, prior, rng, tuner=None):
    return _sweep_update("poisson", state, data, prior, rng, tuner)


def update_lomax(state, data, prior, rng, tuner=None):
    return _sweep_update("lomax", state, data, prior, rng, tuner)


def initial_state(family: FitFamily, data, weight_prior, param_prior, rng, mode="prior_mean", fixed=None):
    L = data.order
    if mode == "prior_sample":
        w = weight_prior.sample(L, rng)
    else:
        w = weight_prior.mean(L)
    theta = family.init_theta(param_prior, data, rng, mode)
    theta.update(fixed or {})
    state = ChainState(np.asarray(w, dtype=float), theta, rng.integers(1, L + 1, size=data.n_cond))
    family.init_latents(state, data, rng)
    return state


def sweep(state, data, family, weight_prior, param_prior, rng, tuner, it=None):
    """allocations -> weights -> parameters -> auxiliary latents."""
    block = "allocations"
    try:
        update_allocations(state, data, family, rng)
        family.after_allocations(state, data, rng)
        block = "weights"
        update_weights(state, weight_prior, rng)
        block = "parameters"
        family.update_params(state, data, param_prior, rng, tuner)
        block = "latents"
        family.update_latents(state, data, rng, tuner)
    except (NumericalFailure, FloatingPointError, ValueError) as exc:
        if isinstance(exc, NumericalFailure) and exc.block is not None:
            raise
        raise NumericalFailure(f"{block} update failed: {exc}", iteration=it, block=block) from exc


def _run_chain(args):
    data, family, weight_prior, param_prior, config, seed_seq, fixed = args
    rng = np.random.default_rng(seed_seq)
    state = initial_state(family, data, weight_prior, param_prior, rng, config.init, fixed)
    tuner = Tuner(config.step_sizes, config.adapt, config.target_accept)
    rows, its, zs = [], [], []
    for it in range(config.iters):
        if it == config.burnin and config.burnin > 0:
            tuner.freeze()
            tuner.reset_counts()
        sweep(state, data, family, weight_prior, param_prior, rng, tuner, it)
        tuner.tick()
        if config.stored(it):
            rec = family.record(state)
            rec["w"] = state.w.copy()
            rows.append(rec)
            its.append(it)
            if config.store_z:
                zs.append(state.z.copy())
    return rows, its, zs, tuner.rates(), dict(tuner.scale)


def run_fit(data: SeriesData, family, weight_prior, param_prior, config: FitConfig = None,
            fixed=None, family_options=None) -> PosteriorSamples:
    """Run ``config.chains`` independent chains and stack their stored draws.

    ``fixed`` maps parameter names to values held constant throughout.
    """
    config = config or FitConfig()
    fam = get_family(family, **(family_options or {}))
    if fixed:
        fam.fixed = frozenset(fixed)
    fam.check_data(data)
    seeds = np.random.SeedSequence(config.seed).spawn(config.chains)
    jobs = [(data, fam, weight_prior, param_prior, config, s, fixed) for s in seeds]
    if config.workers > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_chain, jobs))
    else:
        results = [_run_chain(j) for j in jobs]

    draws, chain, iteration, zs, acceptance = {}, [], [], [], {}
    for c, (rows, its, z, rates, scales) in enumerate(results):
        for rec in rows:
            for k, v in rec.items():
                draws.setdefault(k, []).append(v)
        chain += [c] * len(rows)
        iteration += its
        zs += z
        acceptance[f"chain_{c}"] = {"rates": rates, "step_sizes": scales}
    draws = {k: np.asarray(v, dtype=float) for k, v in draws.items()}
    meta = {
        "iters": config.iters, "burnin": config.burnin, "thin": config.thin, "seed": config.seed,
        "chains": config.chains, "init": config.init, "adapt": config.adapt,
        "weight_prior": weight_prior.to_config(), "fixed": {k: np.asarray(v).tolist() for k, v in (fixed or {}).items()},
    }
    return PosteriorSamples(fam.name, data.order, draws, np.asarray(chain), np.asarray(iteration),
                            acceptance, np.asarray(zs) if config.store_z else None, meta)
