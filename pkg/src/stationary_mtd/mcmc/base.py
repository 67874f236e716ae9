"""Interface every fittable family implements."""
from __future__ import annotations

import numpy as np

from ..errors import UnsupportedOperation
from .state import ChainState, SeriesData


class FitFamily:
    """Family-specific pieces of the Gibbs sweep.

    The engine owns allocation and weight updates; a family supplies the
    per-lag transition log densities, its parameter block, any auxiliary
    latents, and the generative model used by the joint-distribution test.
    """

    name = ""
    discrete = False
    blocks: tuple = ()
    # parameter names held at their initial values (used by conditional checks)
    fixed: frozenset = frozenset()

    def check_data(self, data: SeriesData):
        pass

    def init_theta(self, prior, data: SeriesData, rng, mode="prior_mean"):
        raise NotImplementedError

    def init_latents(self, state: ChainState, data: SeriesData, rng):
        pass

    def log_trans_matrix(self, state: ChainState, data: SeriesData):
        """(n - L) x L array of log f_l(x_t | x_{t-l})."""
        raise NotImplementedError

    def after_allocations(self, state: ChainState, data: SeriesData, rng):
        pass

    def update_params(self, state: ChainState, data: SeriesData, prior, rng, tuner):
        raise NotImplementedError

    def update_latents(self, state: ChainState, data: SeriesData, rng, tuner):
        pass

    # draws ---------------------------------------------------------------
    def record(self, state: ChainState):
        """theta as a dict of scalars / 1-d arrays for storage."""
        return {k: np.array(v, copy=True) if isinstance(v, np.ndarray) else float(v)
                for k, v in state.theta.items()}

    def components(self, theta, L):
        """Transition components for one posterior draw."""
        raise NotImplementedError

    def transformed(self, values, theta, data: SeriesData):
        """Series on the scale the MTD acts on (identity unless a regression is present)."""
        return np.asarray(values, dtype=float)

    def jacobian_sum(self, theta, data: SeriesData):
        return 0.0

    def back_transform(self, sims, theta, future_covariates):
        return sims

    # joint-distribution checks -------------------------------------------
    def prior_sample(self, prior, L, rng, data: SeriesData):
        raise UnsupportedOperation(f"{self.name} has no prior sampler")

    def simulate_given(self, state: ChainState, data: SeriesData, rng):
        """Redraw z, latents and x_{L+1..n} from the model given (w, theta)."""
        raise UnsupportedOperation(f"{self.name} has no data simulator")
