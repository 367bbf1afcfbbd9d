"""Exact and Monte Carlo tools for the log-density of beta random-matrix ensembles."""

__version__ = "0.1.0"

from .ensembles import Domain, EnsembleSpec, Kind, Potential, UnsupportedKindError
from .partition import (
    centering_constant,
    clt_variance,
    entropy_constant,
    exact_y_variance,
    expected_x_stat,
    ground_state_energy,
    log_z_asymptotic,
    log_z_exact,
)
from .sampler import Configuration, McmcParams, RngSeed, sample_hermite_tridiag, sample_mcmc
from .statistic import potential_energy, statistics

__all__ = [
    "__version__",
    "Domain",
    "EnsembleSpec",
    "Kind",
    "Potential",
    "UnsupportedKindError",
    "Configuration",
    "McmcParams",
    "RngSeed",
    "centering_constant",
    "clt_variance",
    "entropy_constant",
    "exact_y_variance",
    "expected_x_stat",
    "ground_state_energy",
    "log_z_asymptotic",
    "log_z_exact",
    "potential_energy",
    "sample_hermite_tridiag",
    "sample_mcmc",
    "statistics",
]
