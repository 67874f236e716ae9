"""MCMC fitting for Gaussian, Poisson and Lomax MTD models."""
from .base import FitFamily
from .engine import (
    FIT_FAMILIES, get_family, initial_state, run_fit, sweep, update_allocations,
    update_gaussian, update_lomax, update_poisson, update_weights,
)
from .gaussian import GaussianFamily
from .geweke import GewekeResult, geweke_test
from .kernels import Tuner, rw_log_scale, slice_sample
from .lomax import LomaxFamily
from .poisson import PoissonFamily
from .state import (
    PRESETS, ChainState, FitConfig, HarmonicDesign, PosteriorSamples, SeriesData, config_preset,
)

__all__ = [
    "FitFamily", "FIT_FAMILIES", "get_family", "initial_state", "run_fit", "sweep",
    "update_allocations", "update_weights", "update_gaussian", "update_poisson", "update_lomax",
    "GaussianFamily", "PoissonFamily", "LomaxFamily", "GewekeResult", "geweke_test",
    "Tuner", "rw_log_scale", "slice_sample", "PRESETS", "ChainState", "FitConfig",
    "HarmonicDesign", "PosteriorSamples", "SeriesData", "config_preset",
]
