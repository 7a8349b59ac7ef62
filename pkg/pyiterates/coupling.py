"""
This module contains the class 'Coupling' for Monte Carlo estimates under the
shared-innovation coupling: two copies (W, W*) of a chain driven by the same
innovations from independent starting states.
"""

import logging
import math
import threading
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, IterateError, ValidationError
from .iterates import MatrixWalk, RandomIterate
from .models import CoupledPath, DeltaTable, SlopeFit, SurvivalTable
from .utils import create_logger, make_stream, map_chunks


IDENTICAL = "identical"
INDEPENDENT = "independent_stationary"
FIXED_PAIR = "fixed_pair"

BURN_IN_FLAG = "burn-in fallback: stationary starts are approximate"


class Coupling:
    """
    A class for coupling-coefficient and meeting-time estimates of one model.

    Attributes:
        model (RandomIterate): The model.
        threads (int): Worker threads for path-parallel estimates.
        flags (List[str]): Notes collected while estimating.
        logger (logging.Logger): The logger for class.

    Example usage:
    ```
    >>> model = make_model(DiscreteRenewalSpec(p_seq=[0.5, 0.5]))
    >>> coupling = Coupling(model, threads=4)
    >>> table = coupling.sample_meeting_times(cap=50, n_paths=10**6, seed=7)
    >>> fit = Coupling.fit_tail_slope(table, window=(8, 50))
    ```
    """

    logger: logging.Logger = create_logger(__name__)

    #############
    # CONSTRUCTOR
    def __init__(self, model: RandomIterate, threads: int = 1) -> None:
        """
        Initializes a Coupling object.

        Args:
            model (RandomIterate): The model.
            threads (int): Worker threads.
        """
        self.model = model
        self.threads = int(threads)
        self.flags: List[str] = []
        self._flag_lock = threading.Lock()

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

    def _stationary_pair(self, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
        if not self.model.has_exact_sampler:
            self._flag(BURN_IN_FLAG)
        first = self.model.sample_stationary(rng, size)
        second = self.model.sample_stationary(rng, size)
        return first, second

    ###############
    # SINGLE PATHS
    def simulate_coupled(
        self,
        n: int,
        init: str = INDEPENDENT,
        seed: int = 0,
        pair: Optional[Tuple] = None,
        innovations: Optional[np.ndarray] = None,
    ) -> CoupledPath:
        """
        Simulates one coupled pair over n steps.

        Args:
            n (int): Number of steps, n >= 1.
            init (str): "identical", "independent_stationary" or "fixed_pair".
            seed (int): Master seed.
            pair (Optional[Tuple]): Starting states (x, y) for "fixed_pair".
            innovations (Optional[np.ndarray]): Innovations eps_1..eps_n; drawn when None.

        Returns:
            CoupledPath: Both trajectories with their meeting index.
        """
        if n < 1:
            raise ValidationError("n must be >= 1", "n >= 1")
        model = self.model
        rng = make_stream(seed, "simulate")
        flags: List[str] = []
        if init == FIXED_PAIR:
            if pair is None:
                raise ValidationError("fixed_pair requires a pair of states", "fixed_pair states")
            x, y = (np.asarray([state]) for state in pair)
        elif init == IDENTICAL:
            x = model.sample_stationary(rng, 1)
            y = x.copy()
        elif init == INDEPENDENT:
            if not model.has_exact_sampler:
                flags.append(BURN_IN_FLAG)
            x = model.sample_stationary(rng, 1)
            y = model.sample_stationary(rng, 1)
        else:
            raise ValidationError(f"unknown init '{init}'", "init")
        if innovations is None:
            innovations = model.sample_innovations(rng, n)
        innovations = np.asarray(innovations)
        if innovations.shape[0] < n:
            raise ValidationError(f"{innovations.shape[0]} innovations given for {n} steps", "innovations")

        states, states_star = [x[0]], [y[0]]
        observables, observables_star = [], []
        meeting = 0 if bool(model.states_equal(x, y)[0]) else None
        for k in range(1, n + 1):
            eps = innovations[k - 1 : k]
            observables.append(float(model.eval_observable(eps, x)[0]))
            observables_star.append(float(model.eval_observable(eps, y)[0]))
            x = model.step(x, eps)
            y = model.step(y, eps)
            states.append(x[0])
            states_star.append(y[0])
            equal = bool(model.states_equal(x, y)[0])
            if meeting is None and equal:
                meeting = k
            elif meeting is not None and not equal:
                raise IterateError(f"coalescence broken at step {k}")
        return CoupledPath(
            n,
            np.asarray(states),
            np.asarray(states_star),
            np.asarray(observables),
            np.asarray(observables_star),
            meeting,
            flags,
        )

    ##########################
    # COUPLING COEFFICIENTS
    def estimate_pairwise_l1(self, k_max: int, n_paths: int, seed: int = 0) -> DeltaTable:
        """
        Estimates ||X_k - X*_k||_1 for k = 1..k_max from independent stationary starts.

        Args:
            k_max (int): Largest k.
            n_paths (int): Number of coupled pairs.
            seed (int): Master seed.

        Returns:
            DeltaTable: Raw (not enveloped) L1 table on k = 1..k_max with E|X_1|.
        """
        if k_max < 1 or n_paths < 2:
            raise ValidationError("k_max >= 1 and n_paths >= 2 required", "budgets")
        model = self.model
        self.logger.info(f"Pairwise L1 distances: k_max={k_max}, n_paths={n_paths}")

        def run(size: int, rng: np.random.Generator):
            w, w_star = self._stationary_pair(rng, size)
            first = np.zeros(k_max)
            second = np.zeros(k_max)
            abs_sum = 0.0
            for k in range(k_max):
                eps = model.sample_innovations(rng, size)
                x = model.eval_observable(eps, w)
                x_star = model.eval_observable(eps, w_star)
                gap = np.abs(x - x_star)
                first[k] = gap.sum()
                second[k] = np.square(gap).sum()
                if k == 0:
                    abs_sum = float(np.abs(x).sum() + np.abs(x_star).sum())
                w = model.step(w, eps)
                w_star = model.step(w_star, eps)
            return first, second, abs_sum

        parts = map_chunks(run, n_paths, seed, "pairwise_l1", self.threads)
        first = sum(part[0] for part in parts)
        second = sum(part[1] for part in parts)
        mean = first / n_paths
        variance = np.maximum(second / n_paths - mean**2, 0.0)
        se = np.sqrt(variance / (n_paths - 1))
        mean_abs_x = sum(part[2] for part in parts) / (2 * n_paths)
        return DeltaTable(
            "L1",
            np.arange(1, k_max + 1),
            mean,
            se,
            envelope_applied=False,
            mean_abs_x=mean_abs_x,
            count=np.full(k_max, n_paths),
        )

    @staticmethod
    def delta_envelope(
        table: Union[DeltaTable, Sequence[float]],
        mean_abs_x: Optional[float] = None,
        se: Optional[Sequence[float]] = None,
    ) -> DeltaTable:
        """
        Turns ||X_k - X*_k||_1, k = 1..K, into delta(n), n = 0..K+1.

        delta(0) = delta(1) = E|X_1| and delta(n) = (1/2) sup_{k >= n-1} ||X_k - X*_k||_1;
        the result is made non-increasing.

        Args:
            table: Raw table or values for k = 1..K.
            mean_abs_x (Optional[float]): E|X_1|, taken from the table when None.
            se (Optional[Sequence[float]]): Standard errors of the raw values.

        Returns:
            DeltaTable: The enveloped table.
        """
        if isinstance(table, DeltaTable):
            values = table.values
            se = table.se if se is None else se
            mean_abs_x = table.mean_abs_x if mean_abs_x is None else mean_abs_x
        else:
            values = np.asarray(table, dtype=float)
        if mean_abs_x is None:
            raise ValidationError("E|X_1| is required", "mean_abs_x")
        values = np.asarray(values, dtype=float)
        se = np.zeros_like(values) if se is None else np.asarray(se, dtype=float)

        size = values.size
        suffix = np.empty(size)
        suffix_se = np.empty(size)
        best, best_se = -np.inf, 0.0
        for index in range(size - 1, -1, -1):
            if values[index] > best:
                best, best_se = values[index], se[index]
            suffix[index], suffix_se[index] = best, best_se

        delta = np.concatenate([[mean_abs_x, mean_abs_x], 0.5 * suffix])
        delta_se = np.concatenate([[0.0, 0.0], 0.5 * suffix_se])
        delta = np.minimum.accumulate(delta)
        return DeltaTable(
            "L1",
            np.arange(size + 2),
            delta,
            delta_se,
            envelope_applied=True,
            mean_abs_x=float(mean_abs_x),
        )

    def estimate_delta_inf(
        self,
        n_grid: Sequence[int],
        design_size: Optional[int] = None,
        inner_reps: int = 64,
        seed: int = 0,
    ) -> DeltaTable:
        """
        Estimates delta_inf(n) as a maximum over a finite design of initial pairs.

        For every pair (x, y) of the design, E(|X_n - X*_n| | W_0 = x, W*_0 = y) is
        averaged over `inner_reps` innovation paths; the maximum over pairs is a
        lower bound of the essential supremum.

        Args:
            n_grid (Sequence[int]): Values of n >= 1.
            design_size (Optional[int]): Grid points per axis (pairs for matrix walks).
            inner_reps (int): Innovation paths per pair.
            seed (int): Master seed.

        Returns:
            DeltaTable: Linf table with the design recorded.
        """
        grid = np.unique(np.asarray(n_grid, dtype=int))
        if grid.size == 0 or grid[0] < 1:
            raise ValidationError("n_grid must hold values >= 1", "n >= 1")
        model = self.model
        rng = make_stream(seed, "delta_inf")
        if design_size is None:
            x, y, design = model.design_pairs(rng)
        else:
            x, y, design = model.design_pairs(rng, design_size)
        pairs = x.shape[0]
        self.logger.info(f"delta_inf on {design}, inner_reps={inner_reps}")

        w = np.repeat(x, inner_reps, axis=0)
        w_star = np.repeat(y, inner_reps, axis=0)
        values, errors = [], []
        wanted = set(int(n) for n in grid)
        for k in range(1, int(grid[-1]) + 1):
            eps = model.sample_innovations(rng, w.shape[0])
            if k in wanted:
                gap = np.abs(model.eval_observable(eps, w) - model.eval_observable(eps, w_star))
                gap = gap.reshape(pairs, inner_reps)
                means = gap.mean(axis=1)
                ses = gap.std(axis=1, ddof=1) / math.sqrt(inner_reps) if inner_reps > 1 else np.zeros(pairs)
                worst = int(np.argmax(means))
                values.append(means[worst])
                errors.append(ses[worst])
            w = model.step(w, eps)
            w_star = model.step(w_star, eps)
        return DeltaTable(
            "Linf",
            grid,
            values,
            errors,
            envelope_applied=False,
            count=np.full(grid.size, inner_reps),
            design=f"{design} (lower bound of the essential supremum)",
        )

    ###############
    # MEETING TIMES
    def _meeting_times(self, cap: int, size: int, rng: np.random.Generator) -> np.ndarray:
        model = self.model
        w, w_star = self._stationary_pair(rng, size)
        times = np.full(size, cap + 1, dtype=np.int64)
        equal = model.states_equal(w, w_star)
        times[equal] = 0
        active = np.flatnonzero(~equal)
        w, w_star = w[active], w_star[active]
        for k in range(1, cap + 1):
            if active.size == 0:
                break
            eps = model.sample_innovations(rng, active.size)
            w = model.step(w, eps)
            w_star = model.step(w_star, eps)
            met = model.states_equal(w, w_star)
            if met.any():
                times[active[met]] = k
                keep = ~met
                active, w, w_star = active[keep], w[keep], w_star[keep]
        return times

    def sample_meeting_times(self, cap: int, n_paths: int, seed: int = 0) -> SurvivalTable:
        """
        Estimates P(T* >= n), n = 0..cap, from independent stationary starts.

        Paths still apart after `cap` steps are censored; P(T* >= n) for n > cap is
        only known to lie in [0, P(T* >= cap)].

        Args:
            cap (int): Censoring cap, cap >= 1.
            n_paths (int): Number of coupled pairs.
            seed (int): Master seed.

        Returns:
            SurvivalTable: Survival with binomial standard errors and survivor counts.
        """
        if isinstance(self.model, MatrixWalk):
            raise ValidationError("matrix walks never meet; meeting times are undefined", "family != matrix_walk")
        if cap < 1:
            raise ValidationError("cap must be >= 1", "cap >= 1")
        if n_paths < 1:
            raise ValidationError("n_paths must be >= 1", "n_paths >= 1")
        self.logger.info(f"Meeting times: cap={cap}, n_paths={n_paths}")
        times = np.concatenate(
            map_chunks(lambda size, rng: self._meeting_times(cap, size, rng), n_paths, seed, "meeting_time", self.threads)
        )
        counts = np.bincount(times, minlength=cap + 2)
        at_least = np.cumsum(counts[::-1])[::-1][: cap + 1]
        survival = at_least / n_paths
        se = np.sqrt(survival * (1.0 - survival) / n_paths)
        table = SurvivalTable(np.arange(cap + 1), survival, se, at_least, n_paths=n_paths)
        censored = int(counts[cap + 1])
        if censored:
            table.notes.append(f"{censored} paths censored at cap {cap}")
        self.logger.info(f"P(T* >= 1) = {survival[1]:.5f}, censored: {censored}")
        return table

    @staticmethod
    def fit_tail_slope(
        table: SurvivalTable,
        window: Optional[Tuple[int, int]] = None,
        min_count: int = 20,
    ) -> SlopeFit:
        """
        Fits log P(T* >= n) against log n over a window.

        Only grid points with at least `min_count` surviving samples are used
        (every positive point of an exact table).

        Args:
            table (SurvivalTable): Survival table.
            window (Optional[Tuple[int, int]]): [n_min, n_max], the whole table when None.
            min_count (int): Smallest usable survivor count.

        Returns:
            SlopeFit: The power-law fit.
        """
        n_min, n_max = window if window is not None else (1, table.cap)
        n_min = max(int(n_min), 1)
        inside = (table.n >= n_min) & (table.n <= n_max)
        usable = inside & (table.survival > 0)
        if table.source != "exact":
            usable &= table.count >= min_count
        if np.count_nonzero(usable) < 4:
            unusable = table.n[inside & ~usable]
            point = int(unusable[0]) if unusable.size else None
            raise InsufficientDataError(
                f"fewer than 4 usable grid points in [{n_min}, {n_max}]"
                + (f"; first unusable point n={point}" if point is not None else ""),
                point,
            )
        n = table.n[usable].astype(float)
        fit = stats.linregress(np.log(n), np.log(table.survival[usable]))
        return SlopeFit(
            float(fit.slope),
            float(fit.intercept),
            float(fit.stderr),
            float(n[0]),
            float(n[-1]),
            float(fit.rvalue**2),
            model="power",
            points=int(n.size),
        )

    def suggest_burn_in(
        self,
        cap: int = 1000,
        n_paths: int = 4096,
        seed: int = 0,
        factor: float = 50.0,
    ) -> int:
        """
        Returns factor x the 99th percentile of a pilot meeting-time sample.

        Falls back to the model's configured burn-in when chains do not meet
        within the cap or never meet at all.
        """
        if isinstance(self.model, MatrixWalk):
            return self.model.burn_in
        times = np.concatenate(
            map_chunks(lambda size, rng: self._meeting_times(cap, size, rng), n_paths, seed, "burn_in_pilot", self.threads)
        )
        q99 = float(np.quantile(times, 0.99))
        if q99 > cap:
            self.logger.warning(f"pilot meeting times exceed cap {cap}; keeping burn_in={self.model.burn_in}")
            return self.model.burn_in
        return max(1, int(math.ceil(factor * q99)))
