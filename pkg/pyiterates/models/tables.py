"""
This module contains the tabulated coupling quantities.

Classes:
    DeltaTable: Coupling coefficients delta(n) or delta_inf(n).
    SurvivalTable: Meeting-time or return-time survival P(T >= n).
    SlopeFit: A least-squares line through a table in log coordinates.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError


class DeltaTable:
    """
    A class that represents a table of coupling coefficients.

    Attributes:
        flavor (str): "L1" or "Linf".
        n (np.ndarray): Grid of n.
        values (np.ndarray): Estimates, nonnegative.
        se (np.ndarray): Standard errors.
        envelope_applied (bool): Whether values are the running-sup envelope.
        mean_abs_x (Optional[float]): Estimate of E|X_1|.
        count (Optional[np.ndarray]): Number of samples behind each value.
        design (Optional[str]): Description of the initial-pair design (Linf only).
    """

    flavor: str
    n: np.ndarray
    values: np.ndarray
    se: np.ndarray
    envelope_applied: bool
    mean_abs_x: Optional[float]
    count: Optional[np.ndarray]
    design: Optional[str]

    def __init__(
        self,
        flavor: str,
        n: Sequence[int],
        values: Sequence[float],
        se: Optional[Sequence[float]] = None,
        envelope_applied: bool = False,
        mean_abs_x: Optional[float] = None,
        count: Optional[Sequence[int]] = None,
        design: Optional[str] = None,
    ) -> None:
        self.flavor = flavor
        self.n = np.asarray(n, dtype=int)
        self.values = np.asarray(values, dtype=float)
        self.se = np.zeros_like(self.values) if se is None else np.asarray(se, dtype=float)
        self.envelope_applied = envelope_applied
        self.mean_abs_x = mean_abs_x
        self.count = None if count is None else np.asarray(count, dtype=int)
        self.design = design

    def __str__(self):
        return f"DeltaTable({self.flavor}, {self.n.size} points)"

    def dense(self) -> np.ndarray:
        """
        Returns the values indexed by n = 0..max(n), requiring a contiguous grid from 0.
        """
        if self.n.size == 0 or self.n[0] != 0 or np.any(np.diff(self.n) != 1):
            raise ValidationError("delta table grid must be 0, 1, 2, ...", "contiguous grid")
        return self.values

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def from_rows(cls, rows: List[dict], flavor: str = "L1") -> "DeltaTable":
        """
        Creates a DeltaTable from CSV rows with columns n, value, se, count.
        """
        n = [int(row["n"]) for row in rows]
        values = [float(row["value"]) for row in rows]
        se = [float(row.get("se") or 0.0) for row in rows]
        count = None
        if rows and rows[0].get("count") not in (None, ""):
            count = [int(row["count"]) for row in rows]
        mean_abs_x = values[0] if n and n[0] == 0 and flavor == "L1" else None
        return cls(flavor, n, values, se, envelope_applied=True, mean_abs_x=mean_abs_x, count=count)


class SurvivalTable:
    """
    A class that represents a survival table P(T >= n).

    Attributes:
        n (np.ndarray): Grid n = 0..cap.
        survival (np.ndarray): Estimated or exact P(T >= n).
        se (np.ndarray): Binomial standard errors (zero for exact tables).
        count (np.ndarray): Number of paths with T >= n (zero for exact tables).
        n_paths (int): Sample size (zero for exact tables).
        cap (int): Censoring cap, the last grid point.
        source (str): "monte_carlo" or "exact".
        beyond_cap (Tuple[float, float]): Interval holding P(T >= n) for every n > cap.
        notes (List[str]): Free-form remarks recorded with the table.
    """

    n: np.ndarray
    survival: np.ndarray
    se: np.ndarray
    count: np.ndarray
    n_paths: int
    cap: int
    source: str
    beyond_cap: Tuple[float, float]
    notes: List[str]

    def __init__(
        self,
        n: Sequence[int],
        survival: Sequence[float],
        se: Optional[Sequence[float]] = None,
        count: Optional[Sequence[int]] = None,
        n_paths: int = 0,
        source: str = "monte_carlo",
        notes: Optional[List[str]] = None,
    ) -> None:
        self.n = np.asarray(n, dtype=int)
        self.survival = np.asarray(survival, dtype=float)
        self.se = np.zeros_like(self.survival) if se is None else np.asarray(se, dtype=float)
        self.count = np.zeros(self.n.size, dtype=int) if count is None else np.asarray(count, dtype=int)
        self.n_paths = int(n_paths)
        self.cap = int(self.n[-1]) if self.n.size else 0
        self.source = source
        last = float(self.survival[-1]) if self.survival.size else 1.0
        self.beyond_cap = (0.0, last)
        self.notes = notes or []

    def __str__(self):
        return f"SurvivalTable({self.source}, cap={self.cap})"

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def from_rows(cls, rows: List[dict]) -> "SurvivalTable":
        """
        Creates a SurvivalTable from CSV rows with columns n, survival, se, count.
        """
        n = [int(row["n"]) for row in rows]
        survival = [float(row["survival"]) for row in rows]
        se = [float(row.get("se") or 0.0) for row in rows]
        count = [int(row.get("count") or 0) for row in rows]
        source = "exact" if all(value == 0.0 for value in se) else "monte_carlo"
        n_paths = count[0] if count else 0
        return cls(n, survival, se, count, n_paths=n_paths, source=source)


class SlopeFit:
    """
    A class that represents a least-squares fit of log(value) against log(n) or n.

    Attributes:
        slope (float): Fitted slope.
        intercept (float): Fitted intercept.
        se (float): Standard error of the slope.
        n_min (float): Left end of the fit window.
        n_max (float): Right end of the fit window.
        r2 (float): Coefficient of determination.
        model (str): "power" (log-log) or "exponential" (semilog).
        points (int): Number of points used.
    """

    slope: float
    intercept: float
    se: float
    n_min: float
    n_max: float
    r2: float
    model: str
    points: int

    def __init__(
        self,
        slope: float,
        intercept: float,
        se: float,
        n_min: float,
        n_max: float,
        r2: float,
        model: str = "power",
        points: int = 0,
    ) -> None:
        self.slope = slope
        self.intercept = intercept
        self.se = se
        self.n_min = n_min
        self.n_max = n_max
        self.r2 = r2
        self.model = model
        self.points = points

    def __str__(self):
        return f"SlopeFit({self.model}: {self.slope:.4f} +- {self.se:.4f} on [{self.n_min}, {self.n_max}])"

    def to_dict(self) -> dict:
        return self.__dict__
