"""
This module contains the class 'QuantileCalculus' for the quantile calculus of |X_1|
(Q, H, H^{-1}, delta^{-1}, gamma, gamma^{-1}, R) and the numerical evaluation of the
summability conditions on coupling coefficients and meeting times.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, stats

from .errors import MissingTableError, ValidationError
from .iterates import (
    DiscreteRenewalChain,
    IteratedFunctionSystem,
    MatrixWalk,
    RandomIterate,
    StickyBetaChain,
    log_moment_check,
)
from .models import (
    CONVERGENT,
    DIVERGENT,
    INCONCLUSIVE,
    ConditionReport,
    DeltaTable,
    DiscreteRenewalSpec,
    GammaTables,
    MomentFlag,
    QuantileTable,
    SurvivalTable,
)
from .oracles import RenewalOracle
from .utils import TailExtrapolation, create_logger, make_stream
from .utils.tail import FINITE, POWER, count_above, extend


DEFAULT_TERMS = 10**5
DEFAULT_MARGIN = 0.1
MEAN_GAP = 0.05
C7_CHUNKS = 2000
MIN_SURVIVORS = 20

CONDITIONS = {
    "C1": "sum_n n^{p-2} int_0^{delta(n)} Q^{p-1} o H^{-1}(u) du",
    "C2": "int_0^1 R^{p-1}(u) Q(u) du",
    "C3": "sum_n (n+1)^{p-2} int_0^{P(T* >= n)} Q^p(u) du",
    "C4": "sum_n n^{p-2} P(T* >= n)",
    "C5": "sum_n n^{p(r-1)/(r-p)} p_n",
    "C6": "sum_n n^{(pr-2r+1)/(r-p)} delta(n)",
    "C7": "int_0^{1/2} c(t) |ln t|^{(pr-2r+1)/(r-p)} dt / t",
    "C8": "E_nu psi_{r,p}(tau), psi_{r,p}(x) = x^{r(p-1)/(r-p)}",
    "C9": "sum_n n^{(pr-2r+p)/(r-p)} P(T* >= n)",
    "C10": "delta_inf(n) <= c n^{-q} with q > (p-1)/2",
    "C11": "sup_x E(X_1^2 | W_0 = x) < infinity",
    "C12": "sum_n n^{p-2} int_0^{c(kappa rho^n)} Q^{p-1} o H^{-1}(u) du",
}
NEEDS_R = ("C5", "C6", "C7", "C8", "C9")


class QuantileCalculus:
    """
    A class for quantile tables and summability-condition reports.

    Attributes:
        margin (float): Verdict margin around the harmonic slope -1.
        terms (int): Number of series terms evaluated.
        extrapolation (str): Tail model of tabulated data, "power" or "exponential".
        quad_tol (float): Absolute tolerance of numerical integrals.
        logger (logging.Logger): The logger for class.

    Example usage:
    ```
    >>> calculus = QuantileCalculus(terms=10**4)
    >>> quantile = calculus.build_quantile(law="uniform")
    >>> report = calculus.eval_series_condition("C1", {"p": 3}, delta=delta, quantile=quantile)
    >>> report.verdict
    'CONVERGENT'
    ```
    """

    logger: logging.Logger = create_logger(__name__)

    #############
    # CONSTRUCTOR
    def __init__(
        self,
        margin: float = DEFAULT_MARGIN,
        terms: int = DEFAULT_TERMS,
        extrapolation: str = POWER,
        quad_tol: float = 1e-10,
    ) -> None:
        if margin < 0:
            raise ValidationError("margin must be >= 0", "margin >= 0")
        if terms < 8:
            raise ValidationError("at least 8 terms are required", "terms >= 8")
        self.margin = float(margin)
        self.terms = int(terms)
        self.extrapolation = extrapolation
        self.quad_tol = float(quad_tol)

    def __str__(self):
        return f"QuantileCalculus(terms={self.terms}, margin={self.margin}, tail={self.extrapolation})"

    @classmethod
    def set_logger(cls, logger: logging.Logger) -> None:
        """
        Set logger for class.

        Args:
            logger (logging.Logger): Logger.
        """
        cls.logger = logger

    ###################
    # QUANTILE CALCULUS
    @staticmethod
    def build_quantile(
        samples: Optional[Sequence[float]] = None,
        law: Optional[str] = None,
        min_size: int = 10_000,
        **params: float,
    ) -> QuantileTable:
        """
        Builds the quantile table of |X_1| from stationary samples or an analytic law.

        Args:
            samples (Optional[Sequence[float]]): Stationary samples of X_1.
            law (Optional[str]): "constant", "uniform", "exponential" or "pareto".
            min_size (int): Smallest accepted sample size.
            **params: Parameters of the analytic law.

        Returns:
            QuantileTable: The table.
        """
        if law is not None:
            return QuantileTable.analytic(law, **params)
        if samples is None:
            raise ValidationError("either samples or a law is required", "quantile source")
        return QuantileTable.from_samples(samples, min_size)

    @staticmethod
    def h_inv(table: QuantileTable, y) -> np.ndarray:
        return table.h_inv(y)

    def _delta_extension(self, delta: Union[DeltaTable, GammaTables]) -> Tuple[np.ndarray, TailExtrapolation]:
        if isinstance(delta, GammaTables):
            return delta.delta, delta.tail
        values = delta.dense()
        return values, TailExtrapolation.fit(values, self.extrapolation)

    def delta_inverse(self, u: float, delta: DeltaTable, extrapolation: Optional[str] = None) -> float:
        """
        Returns delta^{-1}(u) = #{n >= 0 : delta(n) > u}.

        Beyond the table, delta follows the declared tail extrapolation; the count
        is infinite when the extension never falls to u.
        """
        if u < 0:
            raise ValidationError(f"u must be >= 0, got {u}", "u >= 0")
        values = delta.dense()
        tail = TailExtrapolation.fit(values, extrapolation or self.extrapolation)
        count = float(count_above(values, tail, u))
        return int(count) if math.isfinite(count) else count

    def gamma_tables(self, delta: DeltaTable, quantile: QuantileTable) -> GammaTables:
        """
        Builds gamma, gamma^{-1} and R from an enveloped delta table and a quantile table.

        A relative gap above 5% between delta(0) = E|X_1| and H(1) is recorded as a warning.
        """
        values, tail = self._delta_extension(delta)
        warnings: List[str] = []
        reference = delta.mean_abs_x if delta.mean_abs_x is not None else float(values[0])
        mean = quantile.mean
        if mean > 0 and abs(reference - mean) / mean > MEAN_GAP:
            message = f"E|X_1| differs between tables: delta(0)={reference:.6g}, H(1)={mean:.6g}"
            warnings.append(message)
            self.logger.warning(message)
        return GammaTables(values, tail, quantile, warnings)

    ################
    # VERDICT RULE
    def verdict(self, n: Sequence[float], terms: Sequence[float]) -> Tuple[Optional[float], Optional[float], str, Optional[str]]:
        """
        Classifies a series from the decay of its terms.

        The slope of log(term) against log(n) is fitted on a log-spaced subsample of
        the upper half of the terms. CONVERGENT iff slope < -1 - margin, DIVERGENT iff
        slope > -1 + margin, else INCONCLUSIVE. Terms that end at exactly zero are a
        finite series.

        Returns:
            Tuple: slope, its standard error, verdict and an optional label.
        """
        n = np.asarray(n, dtype=float)
        terms = np.asarray(terms, dtype=float)
        if np.any(np.isinf(terms)):
            return None, None, DIVERGENT, "infinite term"
        if terms.size == 0 or terms[-1] == 0.0:
            return None, None, CONVERGENT, FINITE
        start = terms.size // 2
        if terms.size - start <= 200:
            positions = np.arange(start, terms.size)
        else:
            positions = np.unique(np.geomspace(start + 1, terms.size, num=200).astype(int) - 1)
        positions = positions[terms[positions] > 0]
        if positions.size < 4:
            return None, None, INCONCLUSIVE, "too few positive terms"
        fit = stats.linregress(np.log(n[positions]), np.log(terms[positions]))
        slope, se = float(fit.slope), float(fit.stderr)
        if slope < -1.0 - self.margin:
            return slope, se, CONVERGENT, None
        if slope > -1.0 + self.margin:
            return slope, se, DIVERGENT, None
        return slope, se, INCONCLUSIVE, None

    @staticmethod
    def checkpoints(size: int, count: int = 25) -> np.ndarray:
        """
        Log-spaced term counts 1..size where partial sums are reported.
        """
        return np.unique(np.geomspace(1, size, num=min(count, size)).astype(int))

    def _report(
        self,
        kind: str,
        params: Dict[str, Any],
        n: np.ndarray,
        terms: np.ndarray,
        extrapolation: str = "none",
        extra: Optional[Dict[str, Any]] = None,
        notes: Optional[List[str]] = None,
        partial_sums: Optional[np.ndarray] = None,
    ) -> ConditionReport:
        slope, se, verdict, label = self.verdict(n, terms)
        marks = self.checkpoints(terms.size)
        if partial_sums is None:
            partial_sums = np.cumsum(terms)[marks - 1]
        notes = list(notes or [])
        if label is not None:
            notes.append(label)
            if label == FINITE:
                extrapolation = FINITE
        report = ConditionReport(
            kind,
            CONDITIONS[kind],
            params,
            marks,
            partial_sums,
            slope,
            se,
            verdict,
            extrapolation,
            extra,
            notes,
        )
        self.logger.info(f"{report}")
        return report

    ######################
    # SUMMABILITY CHECKS
    def _survival_extension(self, survival: SurvivalTable, length: int) -> Tuple[np.ndarray, TailExtrapolation]:
        values = survival.survival
        if survival.source != "exact":
            usable = np.flatnonzero((survival.count >= MIN_SURVIVORS) & (values > 0))
            if usable.size and usable[-1] < values.size - 1:
                values = values[: usable[-1] + 1]
        tail = TailExtrapolation.fit(values, self.extrapolation)
        return extend(values, length, tail), tail

    def _moment_note(self, quantile: Optional[QuantileTable], r: float) -> Tuple[Optional[MomentFlag], List[str]]:
        if quantile is None or quantile.source != "empirical":
            return None, []
        flag = self.moment_flag(quantile.values, r)
        if flag.flagged:
            return flag, [f"finite moment of order r={r} doubtful: Hill tail index {flag.tail_index:.3g}"]
        return flag, []

    @staticmethod
    def _require(kind: str, value: Any, what: str) -> Any:
        if value is None:
            raise MissingTableError(f"{kind} requires {what}")
        return value

    def eval_series_condition(
        self,
        kind: str,
        params: Dict[str, Any],
        delta: Optional[Union[DeltaTable, GammaTables]] = None,
        quantile: Optional[QuantileTable] = None,
        survival: Optional[SurvivalTable] = None,
        spec: Optional[DiscreteRenewalSpec] = None,
        model: Optional[RandomIterate] = None,
        delta_inf: Optional[DeltaTable] = None,
        modulus: Optional[Callable] = None,
        seed: int = 0,
    ) -> ConditionReport:
        """
        Evaluates one summability condition numerically.

        Args:
            kind (str): "C1".."C12".
            params (Dict[str, Any]): p (> 2) and, where needed, r (> p).
            delta: Enveloped delta table (C1, C2, C6) or prepared GammaTables.
            quantile (Optional[QuantileTable]): Quantile table of |X_1| (C1, C2, C3, C12).
            survival (Optional[SurvivalTable]): Meeting-time survival (C3, C4, C9).
            spec (Optional[DiscreteRenewalSpec]): Renewal chain (C5, C8).
            model (Optional[RandomIterate]): Model (C7, C11, C12).
            delta_inf (Optional[DeltaTable]): Linf table (C10).
            modulus (Optional[Callable]): Modulus c(t) for C7, the model's otherwise.
            seed (int): Seed of the Monte Carlo parts (C11).

        Returns:
            ConditionReport: Partial sums, term slope and verdict.
        """
        if kind not in CONDITIONS:
            raise ValidationError(f"unknown condition '{kind}'", "condition id")
        p = float(params.get("p", 0.0))
        if p <= 2.0:
            raise ValidationError(f"p must be > 2, got {p}", "p > 2")
        r = params.get("r")
        if kind in NEEDS_R:
            if r is None or float(r) <= p:
                raise ValidationError(f"{kind} requires r > p, got r={r}, p={p}", "r > p")
            r = float(r)
        params = dict(params, p=p) if r is None else dict(params, p=p, r=r)
        self.logger.info(f"Evaluating {kind} with {params}")
        N = self.terms
        n = np.arange(1, N + 1, dtype=float)

        if kind in ("C1", "C2"):
            self._require(kind, delta, "a delta table")
            self._require(kind, quantile, "a quantile table")
            tables = delta if isinstance(delta, GammaTables) else self.gamma_tables(delta, quantile)
            J = quantile.power_integral(p, tables.gamma(np.arange(0, N + 1)))
            terms = n ** (p - 2.0) * J[1:]
            extra: Dict[str, Any] = {"gamma_0": float(tables.gamma(0))}
            notes = list(tables.warnings)
            if kind == "C1":
                return self._report(kind, params, n, terms, str(tables.tail), extra, notes)
            # level sets of gamma^{-1}: {u : gamma^{-1}(u) = k} = [gamma(k), gamma(k-1))
            weights = np.cumsum(n ** (p - 2.0))
            level = np.concatenate([[0.0], weights[:-1]]) * (J[:-1] - J[1:])
            marks = self.checkpoints(N)
            partial = np.cumsum(level)[marks - 1] + weights[marks - 1] * J[marks]
            raw = float(np.sum(n ** (p - 1.0) * (J[:-1] - J[1:])) + (N + 1.0) ** (p - 1.0) * J[-1])
            extra["integral_R_pow_Q"] = raw
            return self._report(kind, params, n, terms, str(tables.tail), extra, notes, partial)

        if kind in ("C3", "C4", "C9"):
            self._require(kind, survival, "a survival table")
            tail_values, tail = self._survival_extension(survival, N + 1)
            if kind == "C3":
                self._require(kind, quantile, "a quantile table")
                terms = (n ** (p - 2.0)) * quantile.power_integral(p, tail_values[:N])
                return self._report(kind, params, n, terms, str(tail))
            exponent = p - 2.0 if kind == "C4" else (p * r - 2.0 * r + p) / (r - p)
            terms = n**exponent * tail_values[1:]
            return self._report(kind, params, n, terms, str(tail), {"exponent": exponent})

        if kind == "C5":
            masses = self._require(kind, spec, "a discrete renewal spec").masses()
            exponent = p * (r - 1.0) / (r - p)
            p_n = np.zeros(N)
            p_n[: min(N, masses.size)] = masses[:N]
            return self._report(kind, params, n, n**exponent * p_n, "exact", {"exponent": exponent})

        if kind == "C6":
            self._require(kind, delta, "a delta table")
            values, tail = self._delta_extension(delta)
            exponent = (p * r - 2.0 * r + 1.0) / (r - p)
            terms = n**exponent * extend(values, N + 1, tail)[1:]
            flag, notes = self._moment_note(quantile, r)
            extra = {"exponent": exponent, "moment_flag": None if flag is None else flag.to_dict()}
            return self._report(kind, params, n, terms, str(tail), extra, notes)

        if kind == "C7":
            return self._condition_c7(params, p, r, model, modulus, quantile)

        if kind == "C8":
            self._require(kind, spec, "a discrete renewal spec")
            exponent = r * (p - 1.0) / (r - p)
            tail = RenewalOracle(spec).return_tail(N).survival
            terms = (n**exponent - (n - 1.0) ** exponent) * tail[1:]
            return self._report(kind, params, n, terms, "exact", {"exponent": exponent})

        if kind == "C10":
            return self._condition_c10(params, p, self._require(kind, delta_inf, "a delta_inf table"))

        if kind == "C11":
            return self._condition_c11(params, self._require(kind, model, "a model"), seed)

        # C12
        self._require(kind, quantile, "a quantile table")
        walk = self._require(kind, model if isinstance(model, IteratedFunctionSystem) else None, "an ifs model")
        levels = np.minimum(walk.contraction_bound(n + 1.0), quantile.mean)
        terms = n ** (p - 2.0) * quantile.power_integral(p, quantile.h_inv(levels))
        extra = {"kappa": walk.kappa, "rho": walk.rho}
        return self._report(kind, params, n, terms, "exact", extra)

    def _condition_c7(
        self,
        params: Dict[str, Any],
        p: float,
        r: float,
        model: Optional[RandomIterate],
        modulus: Optional[Callable],
        quantile: Optional[QuantileTable],
    ) -> ConditionReport:
        if modulus is None:
            if not isinstance(model, IteratedFunctionSystem):
                raise MissingTableError("C7 requires a modulus c(t) or an ifs model")
            ifs = model

            def modulus(t):
                return ifs.eta * ifs.modulus(t)

        exponent = (p * r - 2.0 * r + 1.0) / (r - p)

        # t = exp(-s): the integral over (0, 1/2] becomes int_{ln 2}^inf c(e^{-s}) s^e ds
        def integrand(s: float) -> float:
            return float(modulus(math.exp(-s))) * s**exponent

        chunks = min(self.terms, C7_CHUNKS)
        start = math.log(2.0)
        terms = np.empty(chunks)
        for index in range(chunks):
            value, _ = integrate.quad(integrand, start + index, start + index + 1.0, epsabs=self.quad_tol, limit=200)
            terms[index] = value
        n = np.arange(1, chunks + 1, dtype=float)
        flag, notes = self._moment_note(quantile, r)
        notes.append(f"unit chunks in s = -ln t, {chunks} chunks")
        extra = {"exponent": exponent, "moment_flag": None if flag is None else flag.to_dict()}
        return self._report("C7", params, n, terms, "quadrature", extra, notes)

    def _condition_c10(self, params: Dict[str, Any], p: float, table: DeltaTable) -> ConditionReport:
        n = table.n.astype(float)
        if n.size < 4:
            raise ValidationError("C10 needs at least 4 grid points", "delta_inf grid")
        shift = (p - 3.0) / 2.0
        terms = n**shift * table.values
        slope, se, verdict, label = self.verdict(n, terms)
        required = (p - 1.0) / 2.0
        extra: Dict[str, Any] = {"q_required": required, "design": table.design}
        notes = [] if label is None else [label]
        if slope is not None:
            q_hat = -(slope - shift)
            positive = table.values > 0
            extra["q_hat"] = q_hat
            extra["c_hat"] = float(np.max(n[positive] ** q_hat * table.values[positive]))
        report = ConditionReport(
            "C10",
            CONDITIONS["C10"],
            params,
            table.n,
            [],
            slope,
            se,
            verdict,
            FINITE if label == FINITE else POWER,
            extra,
            notes + ["delta_inf is a design-restricted lower bound"],
        )
        self.logger.info(f"{report}")
        return report

    def _condition_c11(self, params: Dict[str, Any], model: RandomIterate, seed: int) -> ConditionReport:
        rng = make_stream(seed, "c11_design")
        states = model.design_states(rng)
        extra: Dict[str, Any] = {}
        if isinstance(model, MatrixWalk):
            images = np.einsum("gij,sj->gsi", model.matrices, states)
            logs = np.log(np.linalg.norm(images, axis=-1) / np.linalg.norm(states, axis=-1))
            values = model.probabilities @ logs**2
            extra["bound_log_norm_moment"] = log_moment_check(model, 2.0)[0]
            bounded, how = True, "exact over the design; bounded by E(log N(g))^2"
        else:
            inner = 4096
            eps = model.sample_innovations(rng, inner * states.shape[0])
            x = np.repeat(states, inner, axis=0)
            squares = np.square(model.eval_observable(eps, x)).reshape(states.shape[0], inner)
            values = squares.mean(axis=1)
            compact = isinstance(model, (DiscreteRenewalChain, StickyBetaChain)) or (
                isinstance(model, IteratedFunctionSystem) and model.spec.map_family == "interval"
            )
            bounded = compact or model.state_free
            how = "Monte Carlo over the design"
        worst = float(np.max(values))
        extra.update({"sup": worst, "design_size": int(states.shape[0]), "method": how})
        verdict = CONVERGENT if bounded and math.isfinite(worst) else INCONCLUSIVE
        notes = [] if bounded else ["state space is not compact: the design maximum is only a lower bound"]
        report = ConditionReport("C11", CONDITIONS["C11"], params, [], [], None, None, verdict, "none", extra, notes)
        self.logger.info(f"{report}")
        return report

    #########################
    # RETURN TIME AND MOMENTS
    def psi_moment_tau(self, spec: DiscreteRenewalSpec, r: float, p: float) -> float:
        """
        Returns E_nu psi_{r,p}(tau) from the exact return tail, or inf when the terms diverge.
        """
        report = self.eval_series_condition("C8", {"p": p, "r": r}, spec=spec)
        if report.verdict == DIVERGENT:
            return float("inf")
        return report.total

    @staticmethod
    def moment_flag(samples: Sequence[float], r: float, tail_fraction: float = 0.05) -> MomentFlag:
        """
        Hill estimate of the tail index of |X| over the largest `tail_fraction` of a sample.

        Args:
            samples (Sequence[float]): Sample of X.
            r (float): Moment order to check.
            tail_fraction (float): Fraction of order statistics used.

        Returns:
            MomentFlag: Flagged when the estimated index does not exceed r.
        """
        values = np.sort(np.abs(np.asarray(samples, dtype=float)))[::-1]
        count = max(10, int(tail_fraction * values.size))
        if values.size <= count:
            raise ValidationError(f"{values.size} samples are too few for a Hill estimate", "sample size")
        threshold = values[count]
        if threshold <= 0:
            return MomentFlag(r, float("inf"), tail_fraction)
        logs = np.log(values[:count]) - math.log(threshold)
        mean = float(logs.mean())
        index = float("inf") if mean <= 0 else 1.0 / mean
        return MomentFlag(r, index, tail_fraction)
