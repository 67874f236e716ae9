"""Stationary mixture transition distribution models: construction, simulation, MCMC fitting,
residual checks and forecasting."""
from . import dists, mtd, priors, transitions
from .errors import (
    ContractError, DomainError, MTDError, NumericalFailure, ParameterError, UnsupportedOperation,
)
from .mtd import Fixed, FromMarginal, MtdModel, acf, simulate, weak_stationarity_check
from .transitions import (
    BernoulliT, BinomialT, GammaT, GaussianT, LomaxT, NegBinT, PoissonT, StudentTT, check_invariance,
)

__version__ = "0.1.0"
