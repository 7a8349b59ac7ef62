"""
This module contains the report records produced by the estimators.
"""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np


CONVERGENT = "CONVERGENT"
DIVERGENT = "DIVERGENT"
INCONCLUSIVE = "INCONCLUSIVE"


class ConditionReport:
    """
    A class that represents the numerical verdict on one summability condition.

    Attributes:
        condition_id (str): Identifier, "C1".."C12", "B1" or "B2".
        description (str): Human-readable form of the condition.
        params (Dict[str, Any]): Parameters (p, r, ...).
        checkpoints (List[int]): Indices where partial sums are reported.
        partial_sums (List[float]): Partial sums S_N at the checkpoints.
        slope (Optional[float]): Term-decay slope.
        se (Optional[float]): Standard error of the slope.
        verdict (str): CONVERGENT, DIVERGENT or INCONCLUSIVE.
        extrapolation (str): Tail model used beyond the tabulated data.
        extra (Dict[str, Any]): Condition-specific values.
        notes (List[str]): Remarks and warnings.
    """

    condition_id: str
    description: str
    params: Dict[str, Any]
    checkpoints: List[int]
    partial_sums: List[float]
    slope: Optional[float]
    se: Optional[float]
    verdict: str
    extrapolation: str
    extra: Dict[str, Any]
    notes: List[str]

    def __init__(
        self,
        condition_id: str,
        description: str,
        params: Dict[str, Any],
        checkpoints: Sequence[int],
        partial_sums: Sequence[float],
        slope: Optional[float],
        se: Optional[float],
        verdict: str,
        extrapolation: str = "none",
        extra: Optional[Dict[str, Any]] = None,
        notes: Optional[List[str]] = None,
    ) -> None:
        self.condition_id = condition_id
        self.description = description
        self.params = params
        self.checkpoints = [int(n) for n in checkpoints]
        self.partial_sums = [float(s) for s in partial_sums]
        self.slope = slope
        self.se = se
        self.verdict = verdict
        self.extrapolation = extrapolation
        self.extra = extra or {}
        self.notes = notes or []

    def __str__(self):
        return f"{self.condition_id}: {self.verdict} (slope={self.slope})"

    @property
    def total(self) -> float:
        """
        The last reported partial sum.
        """
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def to_dict(self) -> dict:
        return self.__dict__


class VarianceGrowth:
    """
    A class that represents Var(S_n)/n over a grid of n.

    Attributes:
        n (np.ndarray): Grid of n.
        values (np.ndarray): Var(S_n)/n estimates.
        se (np.ndarray): Standard errors from the fourth moment.
        reps (int): Number of replications.
        sigma2_growth (float): Value at the largest n.
        sigma2_growth_se (float): Its standard error.
        sigma2_spectral (Optional[float]): Windowed covariance-sum estimate.
        sigma2_spectral_se (Optional[float]): Its standard error.
        lag_window (Optional[int]): Window of the spectral estimate.
    """

    n: np.ndarray
    values: np.ndarray
    se: np.ndarray
    reps: int
    sigma2_growth: float
    sigma2_growth_se: float
    sigma2_spectral: Optional[float]
    sigma2_spectral_se: Optional[float]
    lag_window: Optional[int]

    def __init__(
        self,
        n: Sequence[int],
        values: Sequence[float],
        se: Sequence[float],
        reps: int,
        sigma2_spectral: Optional[float] = None,
        sigma2_spectral_se: Optional[float] = None,
        lag_window: Optional[int] = None,
    ) -> None:
        self.n = np.asarray(n, dtype=int)
        self.values = np.asarray(values, dtype=float)
        self.se = np.asarray(se, dtype=float)
        self.reps = reps
        self.sigma2_growth = float(self.values[-1])
        self.sigma2_growth_se = float(self.se[-1])
        self.sigma2_spectral = sigma2_spectral
        self.sigma2_spectral_se = sigma2_spectral_se
        self.lag_window = lag_window

    def __str__(self):
        return f"VarianceGrowth(sigma2={self.sigma2_growth:.5g} +- {self.sigma2_growth_se:.2g})"

    def to_dict(self) -> dict:
        return self.__dict__


class CLTReport:
    """
    A class that represents a Kolmogorov-Smirnov check of standardized partial sums.

    Attributes:
        n (int): Path length.
        reps (int): Number of replications.
        ks_statistic (Optional[float]): KS distance to the standard normal law.
        p_value (Optional[float]): KS p-value.
        critical_1pct (float): 1% critical value of the KS statistic for `reps`.
        sigma2 (float): Long-run variance used for standardization.
        mean (float): Mean used for centering.
        degenerate (bool): True when sigma2 < 1e-12 (no KS computed).
    """

    n: int
    reps: int
    ks_statistic: Optional[float]
    p_value: Optional[float]
    critical_1pct: float
    sigma2: float
    mean: float
    degenerate: bool

    def __init__(
        self,
        n: int,
        reps: int,
        ks_statistic: Optional[float],
        p_value: Optional[float],
        critical_1pct: float,
        sigma2: float,
        mean: float,
        degenerate: bool,
    ) -> None:
        self.n = n
        self.reps = reps
        self.ks_statistic = ks_statistic
        self.p_value = p_value
        self.critical_1pct = critical_1pct
        self.sigma2 = sigma2
        self.mean = mean
        self.degenerate = degenerate

    def __str__(self):
        if self.degenerate:
            return f"CLTReport(n={self.n}, degenerate)"
        return f"CLTReport(n={self.n}, KS={self.ks_statistic:.4f})"

    def to_dict(self) -> dict:
        return self.__dict__


class LyapunovEstimate:
    """
    A class that represents a Monte Carlo estimate of the top Lyapunov exponent.

    Attributes:
        value (float): Average of n^{-1} log ||A_n x|| over the kept paths.
        se (float): Standard error across paths.
        n (int): Number of steps.
        reps (int): Number of paths requested.
        aborted (int): Paths dropped because the product became numerically singular.
    """

    value: float
    se: float
    n: int
    reps: int
    aborted: int

    def __init__(self, value: float, se: float, n: int, reps: int, aborted: int = 0) -> None:
        self.value = value
        self.se = se
        self.n = n
        self.reps = reps
        self.aborted = aborted

    def __str__(self):
        return f"lambda = {self.value:.5f} +- {self.se:.2g}"

    def to_dict(self) -> dict:
        return self.__dict__


class InequalityCheck:
    """
    A class that represents a checked inequality lhs <= rhs, tabulated over n.

    Attributes:
        name (str): Name of the inequality.
        n (np.ndarray): Grid of n.
        lhs (np.ndarray): Left-hand sides.
        rhs (np.ndarray): Right-hand sides.
        violations (List[int]): Grid points where lhs > rhs + tolerance.
        tolerance (float): Allowed slack.
    """

    name: str
    n: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    violations: List[int]
    tolerance: float

    def __init__(
        self,
        name: str,
        n: Sequence[int],
        lhs: Sequence[float],
        rhs: Sequence[float],
        tolerance: float = 0.0,
    ) -> None:
        self.name = name
        self.n = np.asarray(n, dtype=int)
        self.lhs = np.asarray(lhs, dtype=float)
        self.rhs = np.asarray(rhs, dtype=float)
        self.tolerance = tolerance
        self.violations = [int(k) for k in self.n[self.lhs > self.rhs + tolerance]]

    def __str__(self):
        return f"{self.name}: {len(self.violations)} violations"

    @property
    def holds(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return self.__dict__


class TildeDistanceCheck:
    """
    A class that represents the window-conditioning inequality at one scale k.

    lhs estimates E|phi_k(X_j) - E(phi_k(X_j) | eps_{j-m}, ..., eps_j)|^q and rhs
    the coupling moment E|X_{m+1,x} - X_{m+1,y}|^q with x, y independent from nu.

    Attributes:
        k (int): Scale index.
        m (int): Window width m_k.
        q (int): Moment order, 1 or 2.
        lhs (float): Left-hand side estimate.
        lhs_se (float): Its standard error.
        rhs (float): Right-hand side estimate.
        rhs_se (float): Its standard error.
        se (float): Standard error of rhs - lhs (paired draws).
        holds (bool): Whether lhs <= rhs + 3 se.
        flags (List[str]): Notes such as a burn-in fallback.
    """

    k: int
    m: int
    q: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    se: float
    holds: bool
    flags: List[str]

    def __init__(
        self,
        k: int,
        m: int,
        q: int,
        lhs: float,
        lhs_se: float,
        rhs: float,
        rhs_se: float,
        se: float,
        flags: Optional[List[str]] = None,
    ) -> None:
        self.k = k
        self.m = m
        self.q = q
        self.lhs = lhs
        self.lhs_se = lhs_se
        self.rhs = rhs
        self.rhs_se = rhs_se
        self.se = se
        self.holds = bool(lhs <= rhs + 3.0 * se)
        self.flags = flags or []

    def __str__(self):
        return f"k={self.k}, q={self.q}: {self.lhs:.4g} <= {self.rhs:.4g} ({'holds' if self.holds else 'violated'})"

    def to_dict(self) -> dict:
        return self.__dict__


class MomentFlag:
    """
    A class that represents a Hill-estimator check of a finite r-th moment.

    Attributes:
        r (float): Moment order.
        tail_index (float): Hill estimate of the tail index of |X|.
        tail_fraction (float): Fraction of the sample used by the estimator.
        flagged (bool): True when the estimated index does not exceed r.
    """

    r: float
    tail_index: float
    tail_fraction: float
    flagged: bool

    def __init__(self, r: float, tail_index: float, tail_fraction: float) -> None:
        self.r = r
        self.tail_index = tail_index
        self.tail_fraction = tail_fraction
        self.flagged = bool(tail_index <= r)

    def __str__(self):
        return f"MomentFlag(r={self.r}, alpha={self.tail_index:.3g}, flagged={self.flagged})"

    def to_dict(self) -> dict:
        return self.__dict__
