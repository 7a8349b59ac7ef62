"""
This module contains all models for pyiterates.

Classes:
    DiscreteRenewalSpec: The discrete renewal chain.
    StickyBetaSpec: The sticky chain on [0, 1].
    ARLipschitzSpec: The AR-Lipschitz model.
    IFSSpec: A contracting iterated random function system.
    MatrixWalkSpec: The left random walk on GL_d.
    CoupledPath: Two trajectories driven by shared innovations.
    DeltaTable: Coupling coefficients.
    SurvivalTable: Meeting-time or return-time survival.
    SlopeFit: A fitted decay slope.
    QuantileTable: Quantile function of |X_1|.
    GammaTables: gamma, gamma^{-1} and R.
    ConditionReport: Verdict on a summability condition.
    VarianceGrowth: Var(S_n)/n over a grid.
    CLTReport: KS check of standardized partial sums.
    LyapunovEstimate: Top Lyapunov exponent estimate.
    InequalityCheck: A tabulated inequality.
    TildeDistanceCheck: The window-conditioning inequality at one scale.
    MomentFlag: Hill-estimator moment check.
    BlockParams: Truncation levels and window widths.
    NuTable: Per-scale variance proxies.
    ExperimentConfig: A parsed experiment config.
    ReportBundle: Results of one experiment.
"""

from .specs import (
    DiscreteRenewalSpec,
    StickyBetaSpec,
    ARLipschitzSpec,
    IFSSpec,
    MatrixWalkSpec,
)
from .paths import CoupledPath
from .tables import DeltaTable, SurvivalTable, SlopeFit
from .quantile_table import QuantileTable, GammaTables
from .reports import (
    CONVERGENT,
    DIVERGENT,
    INCONCLUSIVE,
    ConditionReport,
    VarianceGrowth,
    CLTReport,
    LyapunovEstimate,
    InequalityCheck,
    TildeDistanceCheck,
    MomentFlag,
)
from .blocks import BlockParams, NuTable
from .experiment import ExperimentConfig, ReportBundle

__all__ = [
    "DiscreteRenewalSpec",
    "StickyBetaSpec",
    "ARLipschitzSpec",
    "IFSSpec",
    "MatrixWalkSpec",
    "CoupledPath",
    "DeltaTable",
    "SurvivalTable",
    "SlopeFit",
    "QuantileTable",
    "GammaTables",
    "CONVERGENT",
    "DIVERGENT",
    "INCONCLUSIVE",
    "ConditionReport",
    "VarianceGrowth",
    "CLTReport",
    "LyapunovEstimate",
    "InequalityCheck",
    "TildeDistanceCheck",
    "MomentFlag",
    "BlockParams",
    "NuTable",
    "ExperimentConfig",
    "ReportBundle",
]
