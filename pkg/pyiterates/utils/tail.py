"""
This module extends tabulated tails beyond their last grid point.

Classes:
    TailExtrapolation: A fitted power-law, exponential or finite-support tail.
"""

from typing import Optional, Sequence

import numpy as np
from scipy import stats

from ..errors import ValidationError


POWER = "power"
EXPONENTIAL = "exponential"
FINITE = "finite-support"

KINDS = (POWER, EXPONENTIAL)


class TailExtrapolation:
    """
    A non-increasing extension of a table `values[n]`, n = 0..N.

    Beyond N the value is min(fit(n), values[N]), where the fit is done on the
    upper half of the positive part of the table. A table whose last value is
    exactly zero is extended by zeros.

    Attributes:
        kind (str): "power", "exponential" or "finite-support".
        slope (float): Fitted slope (log-log for power, semilog for exponential).
        intercept (float): Fitted intercept.
        last_n (int): Last tabulated index.
        last_value (float): Value at the last tabulated index.
    """

    kind: str
    slope: float
    intercept: float
    last_n: int
    last_value: float

    def __init__(
        self,
        kind: str,
        slope: float,
        intercept: float,
        last_n: int,
        last_value: float,
    ) -> None:
        self.kind = kind
        self.slope = slope
        self.intercept = intercept
        self.last_n = last_n
        self.last_value = last_value

    def __str__(self):
        if self.kind == FINITE:
            return FINITE
        return f"{self.kind}(slope={self.slope:.4g})"

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def fit(
        cls,
        values: Sequence[float],
        kind: str = POWER,
        start: Optional[int] = None,
    ) -> "TailExtrapolation":
        """
        Fits the tail of a table indexed by n = 0..len(values)-1.

        Args:
            values (Sequence[float]): Non-increasing tabulated values.
            kind (str): "power" or "exponential".
            start (Optional[int]): First index of the fit window (default: upper half).

        Returns:
            TailExtrapolation: The fitted extension.
        """
        if kind not in KINDS:
            raise ValidationError(f"unknown extrapolation '{kind}', expected one of {KINDS}", "extrapolation")
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValidationError("cannot extrapolate an empty table", "extrapolation")
        last_n = values.size - 1
        last_value = float(values[-1])
        if last_value <= 0.0:
            return cls(FINITE, 0.0, 0.0, last_n, 0.0)

        n = np.arange(values.size)
        if start is None:
            start = max(1, values.size // 2)
        mask = (n >= start) & (values > 0)
        if np.count_nonzero(mask) < 2:
            mask = (n >= 1) & (values > 0)
        if np.count_nonzero(mask) < 2:
            # a single positive point: flat continuation
            return cls(kind, 0.0, float(np.log(last_value)), last_n, last_value)

        x = np.log(n[mask]) if kind == POWER else n[mask].astype(float)
        fit = stats.linregress(x, np.log(values[mask]))
        return cls(kind, float(fit.slope), float(fit.intercept), last_n, last_value)

    def value(self, n) -> np.ndarray:
        """
        Evaluates the extension at indices n > last_n.
        """
        n = np.asarray(n, dtype=float)
        if self.kind == FINITE:
            return np.zeros_like(n)
        if self.kind == POWER:
            with np.errstate(divide="ignore"):
                fitted = np.exp(self.intercept + self.slope * np.log(n))
        else:
            fitted = np.exp(self.intercept + self.slope * n)
        return np.minimum(fitted, self.last_value)

    def count_above(self, u: float) -> float:
        """
        Returns #{n > last_n : extension(n) > u}, possibly infinite.
        """
        if self.kind == FINITE or u >= self.last_value:
            return 0.0
        if u <= 0.0 or self.slope >= 0.0:
            return float("inf")
        # fitted(n) > u  <=>  n < bound
        if self.kind == POWER:
            bound = np.exp((np.log(u) - self.intercept) / self.slope)
        else:
            bound = (np.log(u) - self.intercept) / self.slope
        if not np.isfinite(bound):
            return float("inf")
        largest = int(np.ceil(bound)) - 1
        return float(max(0, largest - self.last_n))


def extend(values: Sequence[float], length: int, tail: TailExtrapolation) -> np.ndarray:
    """
    Returns the table extended (or cut) to indices 0..length-1.
    """
    values = np.asarray(values, dtype=float)
    if length <= values.size:
        return values[:length].copy()
    extra = tail.value(np.arange(values.size, length))
    return np.concatenate([values, extra])


def count_above(values: Sequence[float], tail: TailExtrapolation, u) -> np.ndarray:
    """
    Returns #{n >= 0 : delta(n) > u} for the table extended by `tail`.

    Args:
        values (Sequence[float]): Tabulated delta(0..N).
        tail (TailExtrapolation): Extension beyond N.
        u: Level or array of levels.

    Returns:
        np.ndarray: Counts as floats (inf when the extension never drops below u).
    """
    values = np.asarray(values, dtype=float)
    levels = np.atleast_1d(np.asarray(u, dtype=float))
    if np.all(np.diff(values) <= 0):
        tabulated = np.searchsorted(-values, -levels, side="left").astype(float)
    else:
        tabulated = np.array([np.count_nonzero(values > level) for level in levels], dtype=float)
    extra = np.array([tail.count_above(level) for level in levels], dtype=float)
    counts = tabulated + extra
    return counts if np.ndim(u) else counts[:1].reshape(())
