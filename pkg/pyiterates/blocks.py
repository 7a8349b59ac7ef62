"""
This module contains the block-approximation machinery: truncation levels and
window widths (class 'BlockScheme') and the nested Monte Carlo estimates built on
windowed conditional expectations (class 'BlockEstimator').

For a scale k, phi_k(x) = (x ^ M_k) v (-M_k) and X~_{k,j} is the conditional
expectation of phi_k(X_j) given the innovations eps_{j-m_k}, ..., eps_j.
"""

import logging
import math
import threading
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from .errors import MissingTableError, ValidationError
from .iterates import RandomIterate
from .models import (
    CONVERGENT,
    DIVERGENT,
    INCONCLUSIVE,
    BlockParams,
    ConditionReport,
    GammaTables,
    NuTable,
    QuantileTable,
    TildeDistanceCheck,
)
from .utils import create_logger, map_chunks


THM1 = "thm1"
THM2 = "thm2"
MAX_WINDOW = 10**4
MIN_INNER = 32
POOL_SIZE = 4096
BATCH_ELEMENTS = 2**20

INDIRECT = (
    "maximal discrepancy between block sums and their windowed approximation: indirectly supported "
    "(window-conditioning check and delta decay)",
    "moment bound on maxima of windowed block sums: indirectly supported (delta decay)",
)


class BlockScheme:
    """
    A class for planning truncation levels M_k and window widths m_k and for the
    block-level summability surrogates.

    Attributes:
        margin (float): Verdict margin of the per-scale slopes.
        logger (logging.Logger): The logger for class.

    Example usage:
    ```
    >>> plan = BlockScheme.plan_blocks_thm1(p=3, q=2, eps=0.1, k_lo=3, k_hi=8)
    >>> plan.at(5)
    (6.240251469155712, 27)
    ```
    """

    logger: logging.Logger = create_logger(__name__)

    def __init__(self, margin: float = 0.1) -> None:
        self.margin = float(margin)

    def __str__(self):
        return f"BlockScheme(margin={self.margin})"

    @classmethod
    def set_logger(cls, logger: logging.Logger) -> None:
        """
        Set logger for class.

        Args:
            logger (logging.Logger): Logger.
        """
        cls.logger = logger

    ##########
    # PLANS
    @staticmethod
    def eps_bound(p: float, q: float) -> float:
        """
        The admissible bound min(1 - (p - 1) / (2q), 1/2) on eps.
        """
        return min(1.0 - (p - 1.0) / (2.0 * q), 0.5)

    @staticmethod
    def _check_range(k_lo: int, k_hi: int) -> np.ndarray:
        if k_lo < 1 or k_hi < k_lo:
            raise ValidationError(f"invalid scale range [{k_lo}, {k_hi}]", "1 <= k_lo <= k_hi")
        return np.arange(k_lo, k_hi + 1)

    @classmethod
    def plan_blocks_thm1(cls, p: float, q: float, eps: float, k_lo: int = 3, k_hi: int = 8) -> BlockParams:
        """
        Closed-form plan M_k = 3^{k/p}, m_k = [3^{2(1-eps)k/p}].

        Args:
            p (float): Moment order, p > 2.
            q (float): Polynomial decay order of delta_inf, q > (p - 1) / 2.
            eps (float): Slack, 0 < eps < min(1 - (p - 1) / (2q), 1/2).
            k_lo (int): First scale.
            k_hi (int): Last scale.

        Returns:
            BlockParams: The plan; window widths are capped at 10^4.
        """
        if p <= 2.0:
            raise ValidationError(f"p must be > 2, got {p}", "p > 2")
        if q <= (p - 1.0) / 2.0:
            raise ValidationError(f"q must be > (p-1)/2 = {(p - 1.0) / 2.0}, got {q}", "q > (p-1)/2")
        bound = cls.eps_bound(p, q)
        if not 0.0 < eps < bound:
            raise ValidationError(f"eps must lie in (0, {bound:.6g}), got {eps}", "0 < eps < min(1-(p-1)/(2q), 1/2)")
        k = cls._check_range(k_lo, k_hi)
        M = 3.0 ** (k / p)
        widths = np.floor(3.0 ** (2.0 * (1.0 - eps) * k / p) * (1.0 + 1e-12))
        m = np.clip(widths, 1, MAX_WINDOW).astype(np.int64)
        if np.any(widths > MAX_WINDOW):
            cls.logger.warning(f"window widths capped at {MAX_WINDOW}")
        ratio = m * k / 3.0 ** (2.0 * k / p)
        if np.any(np.diff(ratio) >= 0):
            cls.logger.warning("m_k k 3^(-2k/p) is not decreasing over the range: scales are below the asymptotic regime")
        return BlockParams(p, THM1, k, M, m, q=q, eps=eps)

    @classmethod
    def plan_blocks_thm2(
        cls,
        p: float,
        quantile: QuantileTable,
        gamma: GammaTables,
        k_lo: int = 3,
        k_hi: int = 8,
    ) -> BlockParams:
        """
        Quantile-driven plan: v_k = inf{u in [0, u_1] : R(u) <= 3^{k/p}}, M_k = Q(v_k),
        m_k = inf{n >= 0 : gamma(n) <= v_k}, with u_1 = P(|X_1| > 0) / 2.

        Below K_0, the first scale with R(u_1) <= 3^{k/p}, the plan uses M_k = m_k = 1.

        Args:
            p (float): Moment order, p > 2.
            quantile (QuantileTable): Quantile table of |X_1|.
            gamma (GammaTables): gamma, gamma^{-1} and R over the same law.
            k_lo (int): First scale.
            k_hi (int): Last scale.

        Returns:
            BlockParams: The plan, with m_k M_k <= 3^{k/p} at every scale.
        """
        if p <= 2.0:
            raise ValidationError(f"p must be > 2, got {p}", "p > 2")
        k = cls._check_range(k_lo, k_hi)
        u1 = 0.5 * quantile.positive_mass
        if u1 <= 0.0:
            raise ValidationError("|X_1| = 0 almost surely: sigma^2 = 0, no plan needed", "P(|X_1| > 0) > 0")

        r_u1 = float(gamma.r(u1))
        if not math.isfinite(r_u1):
            k0 = int(k_hi) + 1
        elif r_u1 <= 1.0:
            k0 = 1
        else:
            k0 = max(1, int(math.ceil(p * math.log(r_u1) / math.log(3.0))))
        M, m, v = [], [], []
        for scale in k:
            threshold = 3.0 ** (scale / p)
            if scale < k0 or float(gamma.r(u1)) > threshold:
                M.append(1.0)
                m.append(1)
                v.append(float("nan"))
                continue
            lo, hi = 0.0, u1
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if float(gamma.r(mid)) <= threshold:
                    hi = mid
                else:
                    lo = mid
            level = hi
            v.append(level)
            M.append(float(quantile.q(level)))
            m.append(int(gamma.gamma_inv(level)))
            if m[-1] * M[-1] > threshold * (1.0 + 1e-12):
                raise ValidationError(f"m_k M_k = {m[-1] * M[-1]:.6g} exceeds 3^(k/p) at k={scale}", "m_k M_k <= 3^{k/p}")
        return BlockParams(p, THM2, k, M, m, u1=u1, v=v, k0=k0)

    @staticmethod
    def truncate(x, M: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns phi_k(x) = (x ^ M) v (-M) and g_k(x) = x - phi_k(x).
        """
        if M <= 0:
            raise ValidationError(f"M must be > 0, got {M}", "M_k > 0")
        x = np.asarray(x, dtype=float)
        phi = np.clip(x, -M, M)
        return phi, x - phi

    ##########################
    # BLOCK CONDITIONS
    def _semilog_verdict(self, k: np.ndarray, values: np.ndarray, band: Optional[float]) -> Tuple[Optional[float], Optional[float], str]:
        positive = values > 0
        if np.count_nonzero(positive) < 3:
            return None, None, INCONCLUSIVE
        fit = stats.linregress(k[positive].astype(float), np.log(values[positive]))
        slope, se = float(fit.slope), float(fit.stderr)
        width = self.margin if band is None else band * se
        if slope + width < 0.0:
            return slope, se, CONVERGENT
        if slope - width > 0.0:
            return slope, se, DIVERGENT
        return slope, se, INCONCLUSIVE

    def eval_block_conditions(
        self,
        kind: str,
        p: float,
        params: BlockParams,
        quantile: Optional[QuantileTable] = None,
        nu: Optional[NuTable] = None,
        sigma2: Optional[float] = None,
        sigma2_se: float = 0.0,
    ) -> ConditionReport:
        """
        Evaluates a block-level surrogate.

        B1: sum_k 3^{k(p-1)/p} E|g_k(X_1)| with E|g_k(X_1)| = E(|X_1| - M_k)_+ computed
        exactly from the quantile table, over the scales of `params`.
        B2: the trajectory r_k = 3^{k(p-2)/p} |nu_k - sigma^2|; a decreasing trajectory
        supports the variance-matching condition.

        Args:
            kind (str): "B1" or "B2".
            p (float): Moment order.
            params (BlockParams): The plan.
            quantile (Optional[QuantileTable]): Needed for B1.
            nu (Optional[NuTable]): Needed for B2.
            sigma2 (Optional[float]): Long-run variance estimate, needed for B2.
            sigma2_se (float): Its standard error.

        Returns:
            ConditionReport: Report with scale-indexed partial sums.
        """
        record: Dict[str, Any] = {"p": p, "scheme": params.scheme}
        if kind == "B1":
            if quantile is None:
                raise MissingTableError("B1 requires a quantile table")
            k = params.k.astype(float)
            excess = np.array([quantile.excess_mean(level) for level in params.M])
            terms = 3.0 ** (k * (p - 1.0) / p) * excess
            if terms[-1] == 0.0:
                slope, se, verdict = None, None, CONVERGENT
                notes = ["finite-support: g_k(X_1) = 0 once M_k exceeds the support"]
            else:
                slope, se, verdict = self._semilog_verdict(params.k, terms, None)
                notes = ["slope of log term against k"]
            report = ConditionReport(
                "B1",
                "sum_k 3^{k(p-1)/p} E|g_k(X_1)|",
                record,
                params.k,
                np.cumsum(terms),
                slope,
                se,
                verdict,
                "exact",
                {"terms": terms.tolist()},
                notes,
            )
        elif kind == "B2":
            if nu is None or sigma2 is None:
                raise MissingTableError("B2 requires a nu_k table and a sigma^2 estimate")
            k = nu.k.astype(float)
            scale = 3.0 ** (k * (p - 2.0) / p)
            trajectory = scale * np.abs(nu.nu - sigma2)
            se = scale * np.sqrt(nu.se**2 + sigma2_se**2)
            record["sigma2"] = sigma2
            notes = list(INDIRECT)
            if np.all(trajectory <= 3.0 * se):
                slope, slope_se, verdict = None, None, CONVERGENT
                notes.append("nu_k matches sigma^2 within 3 se at every scale")
            else:
                slope, slope_se, verdict = self._semilog_verdict(nu.k, trajectory, 2.0)
            report = ConditionReport(
                "B2",
                "3^{k(p-2)/p} |nu_k - sigma^2| decreasing in k",
                record,
                nu.k,
                trajectory,
                slope,
                slope_se,
                verdict,
                "none",
                {"trajectory": trajectory.tolist(), "se": se.tolist()},
                notes,
            )
        else:
            raise ValidationError(f"unknown block condition '{kind}'", "B1 | B2")
        self.logger.info(f"{report}")
        return report


class BlockEstimator:
    """
    A class for the nested Monte Carlo estimates of windowed conditional expectations.

    Attributes:
        model (RandomIterate): The model.
        threads (int): Worker threads over outer draws.
        flags (List[str]): Notes collected while estimating.
        logger (logging.Logger): The logger for class.
    """

    logger: logging.Logger = create_logger(__name__)

    #############
    # CONSTRUCTOR
    def __init__(self, model: RandomIterate, threads: int = 1) -> None:
        self.model = model
        self.threads = int(threads)
        self.flags: List[str] = []
        self._flag_lock = threading.Lock()

    def __str__(self):
        return f"BlockEstimator({self.model})"

    @classmethod
    def set_logger(cls, logger: logging.Logger) -> None:
        """
        Set logger for class.

        Args:
            logger (logging.Logger): Logger.
        """
        cls.logger = logger

    def _flag(self, message: str) -> None:
        # called from chunk workers
        with self._flag_lock:
            if message in self.flags:
                return
            self.flags.append(message)
        self.logger.warning(message)

    def _starts(self, rng: np.random.Generator, count: int, pool: Optional[np.ndarray]) -> np.ndarray:
        if pool is None:
            return self.model.sample_stationary(rng, count)
        return pool[rng.integers(0, pool.shape[0], size=count)]

    def _pool(self, rng: np.random.Generator) -> Optional[np.ndarray]:
        if self.model.has_exact_sampler:
            return None
        self._flag("burn-in fallback: pre-window states are drawn from a burn-in pool")
        return self.model.sample_stationary(rng, POOL_SIZE)

    def _innovations(self, rng: np.random.Generator, draws: int, length: int) -> np.ndarray:
        eps = self.model.sample_innovations(rng, draws * length)
        return eps.reshape((draws, length) + eps.shape[1:])

    @staticmethod
    def _flat(block: np.ndarray) -> np.ndarray:
        return block.reshape((-1,) + block.shape[2:])

    def _window_means(
        self,
        rng: np.random.Generator,
        pool: Optional[np.ndarray],
        draws: int,
        M: float,
        m: int,
        inner: int,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns the inner means of phi(X_j) and their sample variances for 2m window positions.
        """
        model = self.model
        width = 2 * m
        E = self._innovations(rng, draws, 3 * m)
        states = self._starts(rng, draws * width * inner, pool)
        for s in range(m):
            states = model.step(states, self._flat(np.repeat(E[:, s : s + width], inner, axis=1)))
        eps = self._flat(np.repeat(E[:, m : 3 * m], inner, axis=1))
        phi = np.clip(model.eval_observable(eps, states), -M, M).reshape(draws, width, inner)
        return phi.mean(axis=2), phi.var(axis=2, ddof=1)

    ################
    # NU_k
    def estimate_nu_k(
        self,
        params: BlockParams,
        outer: int = 20_000,
        inner: int = 64,
        seed: int = 0,
    ) -> NuTable:
        """
        Estimates nu_k = m_k^{-1} {E(W~_{m_k}^2) + 2 E(W~_{m_k}(W~_{2m_k} - W~_{m_k}))} per scale.

        Each outer draw fixes innovations for 3 m_k steps; for the 2 m_k window
        positions, the pre-window state is resampled `inner` times from the stationary
        law and phi_k(X_j) is averaged. The inner noise adds E(s^2) / inner to the
        squared terms, which is subtracted. The covariance form
        c~_0 + 2 sum_{l=1}^{m_k} c~_l is computed from the same draws.

        Args:
            params (BlockParams): The plan.
            outer (int): Outer draws per scale.
            inner (int): Inner resamples per window position, at least 32.
            seed (int): Master seed.

        Returns:
            NuTable: Both estimates with their standard errors.
        """
        if inner < MIN_INNER:
            raise ValidationError(f"inner must be >= {MIN_INNER}, got {inner}", "inner >= 32")
        if outer < 2:
            raise ValidationError("outer must be >= 2", "outer >= 2")
        nu, se, nu_cov, se_cov, used_m = [], [], [], [], []
        for k in params.k:
            M, m = params.at(int(k))
            m = max(int(m), 1)
            used_m.append(m)
            self.logger.info(f"nu_k: k={k}, M_k={M:.6g}, m_k={m}, outer={outer}, inner={inner}")

            def run(size: int, rng: np.random.Generator, M=M, m=m):
                pool = self._pool(rng)
                batch = max(1, BATCH_ELEMENTS // (2 * m * inner))
                means, variances = [], []
                for start in range(0, size, batch):
                    mean, variance = self._window_means(rng, pool, min(batch, size - start), M, m, inner)
                    means.append(mean)
                    variances.append(variance)
                return np.concatenate(means), np.concatenate(variances)

            parts = map_chunks(run, outer, seed, f"nu_k/{k}", self.threads)
            tilde = np.concatenate([part[0] for part in parts])
            noise = float(np.concatenate([part[1] for part in parts]).mean()) / inner
            tilde = tilde - tilde.mean()

            A = tilde[:, :m].sum(axis=1)
            B = tilde[:, m:].sum(axis=1)
            direct = (A**2 + 2.0 * A * B) / m - noise
            nu.append(float(direct.mean()))
            se.append(float(direct.std(ddof=1) / math.sqrt(outer)))

            width = 2 * m
            lags = [np.mean(tilde[:, : width - lag] * tilde[:, lag:], axis=1) for lag in range(m + 1)]
            covariance = lags[0] - noise + 2.0 * np.sum(lags[1:], axis=0)
            nu_cov.append(float(covariance.mean()))
            se_cov.append(float(covariance.std(ddof=1) / math.sqrt(outer)))
            if se[-1] > 0.1 * abs(nu[-1]) and nu[-1] != 0.0:
                self.logger.warning(f"k={k}: se {se[-1]:.3g} is large relative to nu_k {nu[-1]:.3g}; raise outer or inner")
        return NuTable(params.k, nu, se, nu_cov, se_cov, used_m, params.M, outer, inner, list(self.flags))

    ##################
    # WINDOW DISTANCE
    def check_tilde_distance(
        self,
        k: int,
        params: BlockParams,
        q: int = 1,
        reps: int = 20_000,
        inner: int = 64,
        seed: int = 0,
    ) -> TildeDistanceCheck:
        """
        Compares E|phi_k(X_j) - E(phi_k(X_j) | window)|^q with the coupling moment
        E|X_{m+1,x} - X_{m+1,y}|^q, x and y independent from the stationary law.

        Every replication draws the window innovations once, a true pre-window state
        and `inner` resampled ones; the first resampled copy is the independent
        partner of the coupling moment. For q = 2 the inner-mean noise is removed by
        dividing by 1 + 1/inner.

        Args:
            k (int): Scale of the plan.
            params (BlockParams): The plan.
            q (int): 1 or 2.
            reps (int): Replications.
            inner (int): Inner resamples.
            seed (int): Master seed.

        Returns:
            TildeDistanceCheck: Both sides with standard errors and the verdict lhs <= rhs + 3 se.
        """
        if q not in (1, 2):
            raise ValidationError(f"q must be 1 or 2, got {q}", "q in {1, 2}")
        if inner < 2:
            raise ValidationError("inner must be >= 2", "inner >= 2")
        M, m = params.at(int(k))
        m = max(int(m), 1)
        model = self.model

        def run(size: int, rng: np.random.Generator):
            pool = self._pool(rng)
            E = self._innovations(rng, size, m + 1)
            states = self._starts(rng, size * (inner + 1), pool)
            for s in range(m):
                states = model.step(states, self._flat(np.repeat(E[:, s : s + 1], inner + 1, axis=1)))
            eps = self._flat(np.repeat(E[:, m : m + 1], inner + 1, axis=1))
            x = model.eval_observable(eps, states).reshape(size, inner + 1)
            truth, copies = x[:, 0], x[:, 1:]
            estimate = np.clip(copies, -M, M).mean(axis=1)
            lhs = np.abs(np.clip(truth, -M, M) - estimate) ** q
            if q == 2:
                lhs = lhs / (1.0 + 1.0 / inner)
            rhs = np.abs(truth - copies[:, 0]) ** q
            return lhs, rhs

        parts = map_chunks(run, reps, seed, f"tilde/{k}/{q}", self.threads)
        lhs = np.concatenate([part[0] for part in parts])
        rhs = np.concatenate([part[1] for part in parts])
        root = math.sqrt(reps)
        check = TildeDistanceCheck(
            int(k),
            m,
            q,
            float(lhs.mean()),
            float(lhs.std(ddof=1) / root),
            float(rhs.mean()),
            float(rhs.std(ddof=1) / root),
            float((rhs - lhs).std(ddof=1) / root),
            list(self.flags),
        )
        self.logger.info(f"{check}")
        return check
