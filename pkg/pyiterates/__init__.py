"""
pyiterates
==========
A toolkit for simulating and verifying stationary random iterates
X_n = h(eps_n, W_{n-1}), W_n = F(eps_n, W_{n-1}).

Provides reproducible Monte Carlo estimates of coupling coefficients and
meeting times, exact oracles for the discrete renewal chain, the quantile
calculus behind the moment-vs-mixing summability conditions, the block
construction of the long-run variance, and variance/CLT diagnostics.

Classes:
    RandomIterate: Base class of the model families (see `make_model`).
    CustomIterate: A model assembled from user callables.
    Coupling: Monte Carlo estimates under the shared-innovation coupling.
    RenewalOracle: Exact results for the discrete renewal chain.
    QuantileCalculus: Quantile tables and summability-condition reports.
    BlockScheme: Truncation levels and window widths of the block construction.
    BlockEstimator: Nested Monte Carlo estimates over windows.
    Diagnostics: Long-run variance, CLT and decay-fit diagnostics.
    ExperimentRunner: Config-driven experiment runner.

Modules:
    models: A module that contains all models for pyiterates.
    utils: A module that contains utilities for conversion, logging and random streams.
    errors: A module that contains the exceptions of pyiterates.
"""

__title__ = "pyiterates"
__author__ = "pyiterates developers"
__license__ = "MIT"
__copyright__ = "Copyright 2026-present pyiterates developers"
__version__ = "0.1.0"

from .iterates import CustomIterate, RandomIterate, make_model, lyapunov_estimate, log_moment_check
from .coupling import Coupling
from .oracles import RenewalOracle
from .quantile import QuantileCalculus
from .blocks import BlockScheme, BlockEstimator
from .diagnostics import Diagnostics
from .cli import ExperimentRunner

from . import errors
from . import models
from . import utils

__all__ = [
    "RandomIterate",
    "CustomIterate",
    "make_model",
    "lyapunov_estimate",
    "log_moment_check",
    "Coupling",
    "RenewalOracle",
    "QuantileCalculus",
    "BlockScheme",
    "BlockEstimator",
    "Diagnostics",
    "ExperimentRunner",
    "errors",
    "models",
    "utils",
]
