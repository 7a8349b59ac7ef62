"""
This module contains the quantile calculus tables.

Classes:
    QuantileTable: Q, H and H^{-1} of |X_1| under the stationary law.
    GammaTables: gamma, gamma^{-1} and R built from a delta table and a quantile table.
"""

from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import special

from ..errors import ValidationError
from ..utils.tail import TailExtrapolation, count_above, extend


ANALYTIC_LAWS = ("constant", "uniform", "exponential", "pareto")


class QuantileTable:
    """
    A class that represents the upper quantile function of |X_1|.

    Q(u) = inf{t : P(|X| > t) <= u} is non-increasing and right-continuous,
    H(x) is the integral of Q over [0, x].

    Attributes:
        source (str): "empirical" or "analytic".
        name (str): Law name for analytic tables, "empirical" otherwise.
        params (Dict[str, float]): Parameters of the analytic law.
        values (Optional[np.ndarray]): Sample of |X| in decreasing order (empirical only).
        size (int): Sample size (zero for analytic tables).
    """

    source: str
    name: str
    params: Dict[str, float]
    values: Optional[np.ndarray]
    size: int

    def __init__(
        self,
        source: str,
        name: str,
        params: Optional[Dict[str, float]] = None,
        values: Optional[np.ndarray] = None,
    ) -> None:
        self.source = source
        self.name = name
        self.params = params or {}
        self.values = values
        self.size = 0 if values is None else int(values.size)
        if values is not None:
            self._cum = {1: np.concatenate([[0.0], np.cumsum(values)]) / self.size}

    def __str__(self):
        if self.source == "empirical":
            return f"QuantileTable(empirical, N={self.size})"
        return f"QuantileTable({self.name}, {self.params})"

    @classmethod
    def from_samples(cls, samples: Sequence[float], min_size: int = 10_000) -> "QuantileTable":
        """
        Builds the exact step quantile of a sample of X (absolute values are taken).

        Args:
            samples (Sequence[float]): Stationary samples of X_1.
            min_size (int): Smallest accepted sample size.

        Returns:
            QuantileTable: The empirical table.
        """
        values = np.abs(np.asarray(samples, dtype=float)).ravel()
        if values.size == 0:
            raise ValidationError("empty sample", "nonempty sample")
        if values.size < min_size:
            raise ValidationError(
                f"{values.size} samples, at least {min_size} required", "sample size"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("sample contains non-finite values", "finite sample")
        return cls("empirical", "empirical", values=np.sort(values)[::-1].copy())

    @classmethod
    def analytic(cls, name: str, **params: float) -> "QuantileTable":
        """
        Builds the table of an analytic law of |X|.

        Supported laws: constant(c), uniform(b) on [0, b], exponential(rate),
        pareto(alpha, scale) with alpha > 1.
        """
        if name not in ANALYTIC_LAWS:
            raise ValidationError(f"unknown law '{name}', expected one of {ANALYTIC_LAWS}", "law")
        defaults = {
            "constant": {"c": 1.0},
            "uniform": {"b": 1.0},
            "exponential": {"rate": 1.0},
            "pareto": {"alpha": 3.0, "scale": 1.0},
        }[name]
        merged = {key: float(params.get(key, value)) for key, value in defaults.items()}
        if name == "constant" and merged["c"] < 0:
            raise ValidationError("c must be >= 0", "c >= 0")
        if name != "constant" and any(value <= 0 for value in merged.values()):
            raise ValidationError("law parameters must be positive", "positive parameters")
        if name == "pareto" and merged["alpha"] <= 1.0:
            raise ValidationError("pareto alpha must be > 1 for a finite mean", "alpha > 1")
        return cls("analytic", name, merged)

    ##########
    # QUANTILE
    def q(self, u) -> np.ndarray:
        """
        Evaluates Q(u) for u in [0, 1]; Q(1) = 0.
        """
        u = np.asarray(u, dtype=float)
        if self.source == "empirical":
            index = np.clip(np.floor(u * self.size).astype(int), 0, self.size - 1)
            return np.where(u >= 1.0, 0.0, self.values[index])
        p = self.params
        with np.errstate(divide="ignore"):
            if self.name == "constant":
                out = np.full_like(u, p["c"])
            elif self.name == "uniform":
                out = p["b"] * (1.0 - u)
            elif self.name == "exponential":
                out = -np.log(u) / p["rate"]
            else:
                out = p["scale"] * u ** (-1.0 / p["alpha"])
        return np.where(u >= 1.0, 0.0, out)

    def power_integral(self, m: float, x) -> np.ndarray:
        """
        Evaluates the integral of Q^m over [0, x], exactly.
        """
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.source == "empirical":
            cum = self._cum.get(m)
            if cum is None:
                cum = np.concatenate([[0.0], np.cumsum(self.values ** m)]) / self.size
                self._cum[m] = cum
            index = np.clip(np.floor(x * self.size).astype(int), 0, self.size)
            inside = np.minimum(index, self.size - 1)
            partial = (x - index / self.size) * self.values[inside] ** m
            return cum[index] + np.where(index < self.size, partial, 0.0)
        p = self.params
        if self.name == "constant":
            return p["c"] ** m * x
        if self.name == "uniform":
            return p["b"] ** m * (1.0 - (1.0 - x) ** (m + 1.0)) / (m + 1.0)
        if self.name == "exponential":
            with np.errstate(divide="ignore"):
                s = -np.log(x)
            return special.gamma(m + 1.0) * special.gammaincc(m + 1.0, s) / p["rate"] ** m
        exponent = 1.0 - m / p["alpha"]
        if exponent <= 0.0:
            return np.where(x > 0, np.inf, 0.0)
        return p["scale"] ** m * x ** exponent / exponent

    def h(self, x) -> np.ndarray:
        """
        Evaluates H(x), the integral of Q over [0, x].
        """
        return self.power_integral(1.0, x)

    @property
    def mean(self) -> float:
        """
        H(1), the mean of |X|.
        """
        return float(self.h(1.0))

    def h_inv(self, y) -> np.ndarray:
        """
        Returns the smallest u with H(u) = y, for 0 <= y <= H(1).
        """
        y = np.asarray(y, dtype=float)
        top = self.mean
        if np.any(y < 0) or np.any(y > top * (1.0 + 1e-12) + 1e-300):
            raise ValidationError(f"H^-1 argument out of range [0, {top}]", "0 <= y <= H(1)")
        y = np.minimum(y, top)
        if self.source == "empirical":
            cum = self._cum[1]
            k = np.searchsorted(cum, y, side="left")
            k = np.clip(k, 1, self.size)
            slope = self.values[k - 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(slope > 0, (y - cum[k - 1]) / slope, 0.0)
            return np.where(y <= 0, 0.0, (k - 1) / self.size + step)
        p = self.params
        if self.name == "constant":
            return np.where(y > 0, y / p["c"] if p["c"] > 0 else 0.0, 0.0)
        if self.name == "uniform":
            return 1.0 - np.sqrt(np.maximum(1.0 - 2.0 * y / p["b"], 0.0))
        if self.name == "exponential":
            z = np.maximum(y * p["rate"], 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = special.lambertw(-z / np.e, k=-1).real
            return np.where(z <= 0, 0.0, np.where(z >= 1.0, 1.0, np.exp(1.0 + w)))
        exponent = 1.0 - 1.0 / p["alpha"]
        return (y * exponent / p["scale"]) ** (1.0 / exponent)

    def excess_mean(self, level: float) -> float:
        """
        Returns E(|X| - level)_+, the integral of (Q - level)_+.
        """
        level = float(level)
        if self.source == "empirical":
            return float(np.mean(np.maximum(self.values - level, 0.0)))
        p = self.params
        if self.name == "constant":
            return max(p["c"] - level, 0.0)
        if self.name == "uniform":
            b = p["b"]
            return (b - level) ** 2 / (2.0 * b) if level < b else 0.0
        if self.name == "exponential":
            return float(np.exp(-p["rate"] * max(level, 0.0)) / p["rate"]) + max(-level, 0.0)
        alpha, scale = p["alpha"], p["scale"]
        if level >= scale:
            return scale**alpha * level ** (1.0 - alpha) / (alpha - 1.0)
        return (scale - level) + scale / (alpha - 1.0)

    @property
    def positive_mass(self) -> float:
        """
        P(|X| > 0).
        """
        if self.source == "empirical":
            return float(np.count_nonzero(self.values > 0)) / self.size
        if self.name == "constant":
            return 1.0 if self.params["c"] > 0 else 0.0
        return 1.0

    def grid(self, points: int = 201) -> Dict[str, List[float]]:
        """
        Returns Q and H on the midpoint grid of [0, 1] with `points` cells.
        """
        u = (np.arange(points) + 0.5) / points
        return {"u": u.tolist(), "q": self.q(u).tolist(), "h": self.h(u).tolist()}

    def to_dict(self) -> dict:
        out = {key: value for key, value in self.__dict__.items() if not key.startswith("_")}
        out["values"] = None
        out["mean"] = self.mean
        out.update(self.grid())
        return out


class GammaTables:
    """
    A class that represents gamma(n) = H^{-1}(delta([n])), gamma^{-1} = delta^{-1} o H and R = gamma^{-1} Q.

    Attributes:
        delta (np.ndarray): Tabulated delta(0..N).
        tail (TailExtrapolation): Extension of delta beyond N.
        quantile (QuantileTable): The quantile table of |X_1|.
        warnings (List[str]): Consistency warnings, e.g. a mean mismatch.
    """

    delta: np.ndarray
    tail: TailExtrapolation
    quantile: QuantileTable
    warnings: List[str]

    def __init__(
        self,
        delta: Sequence[float],
        tail: TailExtrapolation,
        quantile: QuantileTable,
        warnings: Optional[List[str]] = None,
    ) -> None:
        self.delta = np.asarray(delta, dtype=float)
        self.tail = tail
        self.quantile = quantile
        self.warnings = warnings or []

    def __str__(self):
        return f"GammaTables(N={self.delta.size - 1}, tail={self.tail})"

    def delta_at(self, n) -> np.ndarray:
        """
        delta(n) with the tail extension, for integer n >= 0.
        """
        n = np.asarray(n, dtype=int)
        last = self.delta.size - 1
        inside = self.delta[np.minimum(n, last)]
        return np.where(n <= last, inside, self.tail.value(np.maximum(n, 1)))

    def delta_dense(self, length: int) -> np.ndarray:
        return extend(self.delta, length, self.tail)

    def delta_inverse(self, u) -> np.ndarray:
        return count_above(self.delta, self.tail, u)

    def gamma(self, x) -> np.ndarray:
        """
        gamma(x) = H^{-1}(delta([x])).
        """
        n = np.floor(np.asarray(x, dtype=float)).astype(int)
        level = np.minimum(self.delta_at(n), self.quantile.mean)
        return self.quantile.h_inv(level)

    def gamma_inv(self, u) -> np.ndarray:
        """
        gamma^{-1}(u) = delta^{-1}(H(u)).
        """
        return self.delta_inverse(self.quantile.h(u))

    def r(self, u) -> np.ndarray:
        """
        R(u) = gamma^{-1}(u) Q(u), with R = 0 where Q vanishes.
        """
        q = self.quantile.q(u)
        g = self.gamma_inv(u)
        with np.errstate(invalid="ignore"):
            return np.where(q > 0, g * q, 0.0)

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "tail": self.tail.to_dict(),
            "quantile": str(self.quantile),
            "warnings": self.warnings,
        }
