"""
This module contains the class 'Diagnostics' for the long-run variance of the
partial sums S_n = X_1 + ... + X_n, a Kolmogorov-Smirnov check of their
Gaussian limit and least-squares decay fits.
"""

import logging
import math
import threading
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, ValidationError
from .iterates import RandomIterate
from .models import CLTReport, SlopeFit, VarianceGrowth
from .utils import create_logger, map_chunks


POWER = "power"
EXPONENTIAL = "exponential"

DEGENERATE_SIGMA2 = 1e-12
DEFAULT_CHAINS = 8
DEFAULT_PATH_LENGTH = 100_000


class Diagnostics:
    """
    A class for variance and CLT diagnostics of one model under stationary starts.

    Attributes:
        model (RandomIterate): The model.
        threads (int): Worker threads over replications.
        flags (List[str]): Notes collected while estimating.
        logger (logging.Logger): The logger for class.

    Example usage:
    ```
    >>> model = make_model(DiscreteRenewalSpec(p_seq=[0.5, 0.5], observable="centered_indicator_zero"))
    >>> diagnostics = Diagnostics(model, threads=4)
    >>> growth = diagnostics.variance_growth([10, 100, 1000], reps=20000, seed=3)
    >>> growth.sigma2_growth
    0.0742...
    ```
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
        return f"Diagnostics({self.model})"

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

    def _starts(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if not self.model.has_exact_sampler:
            self._flag("burn-in fallback: stationary starts are approximate")
        return self.model.sample_stationary(rng, size)

    def _partial_sums(self, rng: np.random.Generator, size: int, grid: np.ndarray) -> np.ndarray:
        """
        Runs `size` stationary paths up to grid[-1] and returns S_n at every grid point.
        """
        model = self.model
        states = self._starts(rng, size)
        sums = np.zeros(size)
        out = np.empty((size, grid.size))
        column = 0
        for n in range(1, int(grid[-1]) + 1):
            eps = model.sample_innovations(rng, size)
            sums += model.eval_observable(eps, states)
            states = model.step(states, eps)
            while column < grid.size and grid[column] == n:
                out[:, column] = sums
                column += 1
        return out

    def _path(self, rng: np.random.Generator, size: int, length: int) -> np.ndarray:
        model = self.model
        states = self._starts(rng, size)
        path = np.empty((size, length))
        for j in range(length):
            eps = model.sample_innovations(rng, size)
            path[:, j] = model.eval_observable(eps, states)
            states = model.step(states, eps)
        return path

    @staticmethod
    def _grid(n_grid: Sequence[int]) -> np.ndarray:
        grid = np.unique(np.asarray(n_grid, dtype=int))
        if grid.size == 0 or grid[0] < 1:
            raise ValidationError("n_grid must hold integers >= 1", "n >= 1")
        return grid

    ###################
    # LONG-RUN VARIANCE
    def variance_growth(
        self,
        n_grid: Sequence[int],
        reps: int,
        seed: int = 0,
        spectral_length: Optional[int] = None,
        chains: int = DEFAULT_CHAINS,
        lag_window: Optional[int] = None,
    ) -> VarianceGrowth:
        """
        Estimates Var(S_n)/n on a grid of n from independent stationary replications.

        The standard error uses the asymptotic variance of a sample variance,
        (m4 - v^2) / reps, where m4 is the fourth central moment.

        Args:
            n_grid (Sequence[int]): Values of n.
            reps (int): Number of replications, reps >= 2.
            seed (int): Master seed.
            spectral_length (Optional[int]): When set, the windowed covariance-sum
                estimate over paths of this length is attached.
            chains (int): Paths of the spectral estimate.
            lag_window (Optional[int]): Window of the spectral estimate.

        Returns:
            VarianceGrowth: Var(S_n)/n with standard errors.
        """
        grid = self._grid(n_grid)
        if reps < 2:
            raise ValidationError("reps must be >= 2", "reps >= 2")

        blocks = map_chunks(
            lambda size, rng: self._partial_sums(rng, size, grid), reps, seed, "variance_growth", self.threads
        )
        sums = np.concatenate(blocks, axis=0)
        centered = sums - sums.mean(axis=0)
        v = (centered**2).mean(axis=0)
        m4 = (centered**4).mean(axis=0)
        values = v * reps / (reps - 1) / grid
        se = np.sqrt(np.maximum(m4 - v**2, 0.0) / reps) / grid

        spectral, spectral_se, window = None, None, None
        if spectral_length is not None:
            spectral, spectral_se, window = self.sigma2_spectral(spectral_length, chains, lag_window, seed)

        growth = VarianceGrowth(grid, values, se, reps, spectral, spectral_se, window)
        self.logger.info(f"variance growth: {growth}")
        return growth

    @staticmethod
    def flat_top_weights(lag_window: int) -> np.ndarray:
        """
        Returns the flat-top taper on lags 0..lag_window: 1 up to half the window,
        then linear down to 0 at the window.
        """
        lags = np.arange(lag_window + 1, dtype=float)
        half = lag_window / 2.0
        return np.clip((lag_window - lags) / max(lag_window - half, 1e-12), 0.0, 1.0)

    @staticmethod
    def autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
        """
        Biased sample autocovariances of each row of x for lags 0..max_lag, computed by FFT.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        length = x.shape[1]
        centered = x - x.mean(axis=1, keepdims=True)
        size = 1 << int(math.ceil(math.log2(2 * length)))
        spectrum = np.fft.rfft(centered, n=size, axis=1)
        acov = np.fft.irfft(spectrum * np.conj(spectrum), n=size, axis=1)[:, : max_lag + 1]
        return acov / length

    def sigma2_spectral(
        self,
        path_length: int = DEFAULT_PATH_LENGTH,
        chains: int = DEFAULT_CHAINS,
        lag_window: Optional[int] = None,
        seed: int = 0,
    ) -> Tuple[float, float, int]:
        """
        Estimates sigma^2 = Var(X_1) + 2 sum_{i >= 1} Cov(X_1, X_{i+1}) by a tapered
        sum of empirical autocovariances.

        Args:
            path_length (int): Length of every path.
            chains (int): Independent stationary paths; the standard error is their spread.
            lag_window (Optional[int]): Largest lag, ceil(path_length^{1/3}) when None.
            seed (int): Master seed.

        Returns:
            Tuple[float, float, int]: The estimate, its standard error and the window used.

        Raises:
            ValidationError: The window is not below path_length / 10.
        """
        if path_length < 10:
            raise ValidationError("path_length must be >= 10", "path_length >= 10")
        window = int(lag_window) if lag_window is not None else int(math.ceil(path_length ** (1.0 / 3.0)))
        if window < 1 or window >= path_length / 10.0:
            raise ValidationError(
                f"lag window {window} must be in [1, path_length/10) for path_length={path_length}",
                "lag_window < path_length/10",
            )
        if chains < 1:
            raise ValidationError("chains must be >= 1", "chains >= 1")

        weights = self.flat_top_weights(window)
        weights[1:] *= 2.0

        def run(size: int, rng: np.random.Generator) -> np.ndarray:
            acov = self.autocovariance(self._path(rng, size, path_length), window)
            return acov @ weights

        per_chain = np.concatenate(map_chunks(run, chains, seed, "sigma2_spectral", self.threads, chunk_size=1))
        value = float(per_chain.mean())
        se = float(per_chain.std(ddof=1) / math.sqrt(chains)) if chains > 1 else float("nan")
        self.logger.info(f"spectral sigma2 = {value:.5g} +- {se:.2g} (window {window})")
        return value, se, window

    #######
    # CLT
    def clt_check(
        self,
        n: int = 5000,
        reps: int = 2000,
        seed: int = 0,
        sigma2: Optional[float] = None,
        mean: Optional[float] = None,
    ) -> CLTReport:
        """
        Compares (S_n - n E X) / (sigma sqrt(n)) over replications with the standard normal law.

        Args:
            n (int): Path length.
            reps (int): Number of replications.
            seed (int): Master seed.
            sigma2 (Optional[float]): Long-run variance; Var(S_n)/n of the replications when None.
            mean (Optional[float]): E X; the replication average of S_n/n when None.

        Returns:
            CLTReport: KS statistic, p-value and the 1% critical value for `reps`.
            A sigma2 below 1e-12 marks the report degenerate and skips the test.
        """
        if n < 1 or reps < 2:
            raise ValidationError("n >= 1 and reps >= 2 are required", "n >= 1, reps >= 2")
        grid = np.array([int(n)])
        sums = np.concatenate(
            map_chunks(lambda size, rng: self._partial_sums(rng, size, grid), reps, seed, "clt", self.threads),
            axis=0,
        )[:, 0]
        mu = float(sums.mean() / n) if mean is None else float(mean)
        s2 = float(sums.var(ddof=1) / n) if sigma2 is None else float(sigma2)
        critical = float(stats.kstwo.ppf(0.99, reps))

        if not s2 >= DEGENERATE_SIGMA2:
            self.logger.warning(f"degenerate long-run variance {s2:.3e}: KS test skipped")
            return CLTReport(n, reps, None, None, critical, s2, mu, True)

        z = (sums - n * mu) / math.sqrt(s2 * n)
        result = stats.kstest(z, "norm")
        report = CLTReport(n, reps, float(result.statistic), float(result.pvalue), critical, s2, mu, False)
        self.logger.info(f"{report} against critical value {critical:.4f}")
        return report

    ############
    # DECAY FITS
    @staticmethod
    def decay_fit(
        values: Sequence[float],
        n: Sequence[float],
        model: str = POWER,
        window: Optional[Tuple[float, float]] = None,
    ) -> SlopeFit:
        """
        Fits log(value) against log(n) ("power") or against n ("exponential").

        An exponential fit of rho^n returns the rate log(rho) as its slope.

        Args:
            values (Sequence[float]): The series.
            n (Sequence[float]): Its abscissae.
            model (str): "power" or "exponential".
            window (Optional[Tuple[float, float]]): [n_min, n_max], everything when None.

        Returns:
            SlopeFit: The least-squares fit.

        Raises:
            ValidationError: Unknown model or a nonpositive value in the window.
            InsufficientDataError: Fewer than 4 points in the window.
        """
        if model not in (POWER, EXPONENTIAL):
            raise ValidationError(f"unknown decay model '{model}'", "model in {power, exponential}")
        x = np.asarray(n, dtype=float)
        y = np.asarray(values, dtype=float)
        if x.shape != y.shape:
            raise ValidationError("values and n must have the same length", "len(values) == len(n)")
        inside = np.ones(x.size, dtype=bool)
        if window is not None:
            inside = (x >= window[0]) & (x <= window[1])
        x, y = x[inside], y[inside]
        if x.size < 4:
            raise InsufficientDataError(f"decay fit needs 4 points, got {x.size}")
        bad = ~(y > 0)
        if bad.any():
            raise ValidationError(
                f"nonpositive value at n={x[bad][0]:g} in the fit window", "values > 0"
            )
        if model == POWER and (x <= 0).any():
            raise ValidationError("power fits need n > 0", "n > 0")

        fit = stats.linregress(np.log(x) if model == POWER else x, np.log(y))
        return SlopeFit(
            float(fit.slope),
            float(fit.intercept),
            float(fit.stderr),
            float(x[0]),
            float(x[-1]),
            float(fit.rvalue**2),
            model=model,
            points=int(x.size),
        )
