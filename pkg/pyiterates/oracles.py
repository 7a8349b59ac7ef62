"""
This module contains the class 'RenewalOracle' with exact dynamic-programming
results for the discrete renewal chain: the stationary law, the survival of the
coupling time T*, the survival of the return time to 0 and the total-variation
coefficient beta(n).
"""

import logging
from typing import Optional, Tuple

import numpy as np

from .errors import TruncationError, ValidationError
from .models import DiscreteRenewalSpec, InequalityCheck, SurvivalTable
from .utils import create_logger


DEFAULT_BUDGET = 1e-10


class RenewalOracle:
    """
    Exact computations for one discrete renewal chain.

    Attributes:
        spec (DiscreteRenewalSpec): The chain.
        masses (np.ndarray): P(eps = k), entry k - 1.
        nu (np.ndarray): Stationary law on {0..L-1}.
        logger (logging.Logger): The logger for class.

    Example usage:
    ```
    >>> oracle = RenewalOracle(DiscreteRenewalSpec(p_seq=[0.5, 0.5]))
    >>> oracle.pair_tail(n_max=10).survival[1]
    0.4444444444444444
    ```
    """

    logger: logging.Logger = create_logger(__name__)

    #############
    # CONSTRUCTOR
    def __init__(self, spec: DiscreteRenewalSpec) -> None:
        spec.validate()
        self.spec = spec
        self.masses = spec.masses()
        size = self.masses.size
        k = np.arange(1, size + 1, dtype=float)
        self.mean_eps = float(np.dot(k, self.masses))
        self.second_moment_eps = float(np.dot(k**2, self.masses))
        # above[j] = P(eps > j), j = 0..L
        self.above = np.append(np.cumsum(self.masses[::-1])[::-1], 0.0)
        self.nu = self.above[:-1] / self.mean_eps
        # nu_above[j] = sum_{i >= j} nu_i, j = 0..L
        self.nu_above = np.append(np.cumsum(self.nu[::-1])[::-1], 0.0)

    def __str__(self):
        return f"RenewalOracle({self.spec})"

    @classmethod
    def set_logger(cls, logger: logging.Logger) -> None:
        """
        Set logger for class.

        Args:
            logger (logging.Logger): Logger.
        """
        cls.logger = logger

    @property
    def support(self) -> int:
        return int(self.masses.size)

    def stationary(self) -> np.ndarray:
        """
        Returns nu_i = P(eps > i) / E(eps), i = 0..L-1.
        """
        return self.nu.copy()

    def _first_below(self, tail: np.ndarray, budget: float) -> int:
        return int(np.argmax(tail <= budget))

    #################
    # COUPLING TIME
    def pair_cap(self, n_max: int, budget: float = DEFAULT_BUDGET) -> int:
        """
        Smallest gap cap for which `pair_tail` stays within the truncation budget.
        """
        rows = max(n_max - 1, 0)
        return max(min(rows + self._first_below(self.above, budget), self.support - 1), 0)

    def pair_tail(
        self,
        n_max: int,
        state_cap: Optional[int] = None,
        budget: float = DEFAULT_BUDGET,
    ) -> SurvivalTable:
        """
        Computes P(T* >= n), n = 0..n_max, for W_0 and W*_0 independent with law nu.

        Before meeting, the pair is tracked at the times where its lower chain sits
        at 0, keyed by the gap g to the upper chain. A fresh innovation e then either
        closes the gap (e = g), moves the lower chain under the upper one (e < g:
        gap g - e after e steps) or above it (e > g: gap e - g after g steps).
        Pairs whose gap exceeds `state_cap` are parked as unmet; they can only meet
        through an innovation larger than state_cap - n_max, which bounds the error.

        Args:
            n_max (int): Last grid point, n_max >= 1.
            state_cap (Optional[int]): Largest tracked gap, derived from the budget when None.
            budget (float): Largest admissible error on any survival value.

        Returns:
            SurvivalTable: Exact survival on n = 0..n_max.

        Raises:
            TruncationError: The cap leaves an error above budget.
        """
        if n_max < 1:
            raise ValidationError("n_max must be >= 1", "n_max >= 1")
        masses, nu, size = self.masses, self.nu, self.support
        rows = n_max - 1
        required = self.pair_cap(n_max, budget)
        cap = required if state_cap is None else max(min(int(state_cap), size - 1), 0)

        off_diagonal = 1.0 - float(np.dot(nu, nu))
        meet = np.zeros(n_max + 1)
        parked = 0.0
        if rows and cap:
            arrivals = np.zeros((rows, cap + 1))
            for g in range(1, cap + 1):
                count = min(rows, size - g)
                if count <= 0:
                    break
                arrivals[:count, g] = 2.0 * nu[:count] * nu[g : g + count]
            lower = np.arange(min(rows, size))
            parked += 2.0 * float(np.dot(nu[lower], self.nu_above[np.minimum(lower + cap + 1, size)]))

            closing = masses[:cap]
            for t in range(rows):
                row = arrivals[t]
                if not row.any():
                    continue
                meet[t + 1] += float(np.dot(row[1:], closing))
                horizon = rows - 1 - t
                for e in range(1, min(horizon, cap - 1) + 1):
                    arrivals[t + e, 1 : cap + 1 - e] += row[1 + e :] * masses[e - 1]
                for g in range(1, min(horizon, cap) + 1):
                    if row[g] == 0.0:
                        continue
                    top = min(size, g + cap)
                    arrivals[t + g, 1 : top - g + 1] += row[g] * masses[g:top]
                    parked += row[g] * self.above[top]

        error = parked * self.above[max(cap - rows, 0)] if parked > 0.0 else 0.0
        if error > budget:
            raise TruncationError(error, budget, required)

        survival = np.empty(n_max + 1)
        survival[0] = 1.0
        survival[1:] = off_diagonal - np.cumsum(meet[:n_max])
        survival = np.maximum(survival, 0.0)
        self.logger.debug(f"pair tail: cap={cap}, parked={parked:.3e}, error<={error:.3e}")
        return SurvivalTable(
            np.arange(n_max + 1),
            survival,
            source="exact",
            notes=[f"state_cap={cap}", f"truncation error <= {error:.3e}"],
        )

    ###############
    # RETURN TIME
    def return_tail(self, n_max: int) -> SurvivalTable:
        """
        Computes P_nu(tau >= n), n = 0..n_max, with tau = inf{k >= 1 : W_k = 0}.

        From a start l >= 1, tau = l; from 0, tau = eps. Hence the tail is
        nu_0 P(eps >= n) + sum_{l >= n} nu_l for n >= 2 and 1 for n <= 1.
        """
        if n_max < 1:
            raise ValidationError("n_max must be >= 1", "n_max >= 1")
        size = self.support
        n = np.arange(n_max + 1)
        index = np.minimum(n, size)
        eps_at_least = self.above[np.minimum(np.maximum(n - 1, 0), size)]
        tail = self.nu[0] * eps_at_least + self.nu_above[index]
        tail[:2] = 1.0
        literal = 1.0 - self.nu_above[np.minimum(n, size)]
        notes = [
            "the cumulative form sum_{l < n} nu_l is not the return-time tail; "
            f"at n=2 it reads {literal[min(2, n_max)]:.6g} against {tail[min(2, n_max)]:.6g}"
        ]
        return SurvivalTable(n, tail, source="exact", notes=notes)

    def regeneration_sigma2(self) -> float:
        """
        Returns the limit variance of n^{-1/2} S_n for the chain's observable.

        For the indicator of {W = 0} this is nu_0^3 Var(eps); for the innovation
        observable the terms are independent and it is Var(eps).
        """
        variance = self.second_moment_eps - self.mean_eps**2
        if self.spec.observable == "innovation":
            return variance
        nu0 = 1.0 / self.mean_eps
        return nu0**3 * self.second_moment_eps - nu0

    #########################
    # TOTAL VARIATION BOUND
    def _marginal_distances(self, n_max: int, cap: int) -> Tuple[np.ndarray, float]:
        """
        Returns ||delta_0 P^k - nu||_1, k = 0..n_max, on states below `cap` plus the tail gap.
        """
        width = cap + n_max + 1
        masses = np.zeros(width)
        masses[: min(width, self.support)] = self.masses[:width]
        nu = np.zeros(cap)
        nu[: min(cap, self.support)] = self.nu[:cap]
        nu_tail = float(self.nu_above[min(cap, self.support)])

        law = np.zeros(width)
        law[0] = 1.0
        distances = np.empty(n_max + 1)
        slack = 0.0
        for k in range(n_max + 1):
            head = law[:cap]
            tail = max(1.0 - head.sum(), 0.0)
            distances[k] = np.abs(head - nu).sum() + abs(tail - nu_tail)
            slack = max(slack, 2.0 * min(tail, nu_tail))
            law = np.append(law[1:], 0.0) + law[0] * masses
        return distances, slack

    def beta(self, n_max: int, state_cap: Optional[int] = None, budget: float = DEFAULT_BUDGET) -> np.ndarray:
        """
        Computes beta(n) = (1/2) sum_x nu_x ||delta_x P^n - nu||_1, n = 0..n_max.

        Starts x >= n are still deterministic after n steps (delta_{x-n}); starts
        x < n have regenerated and follow delta_0 P^{n-x}.
        """
        size = self.support
        required = max(min(self._first_below(self.nu_above, budget), size), 1)
        cap = required if state_cap is None else max(min(int(state_cap), size), 1)
        if self.nu_above[min(cap, size)] > budget:
            raise TruncationError(float(self.nu_above[min(cap, size)]), budget, required)

        distances, _ = self._marginal_distances(n_max, cap)
        nu = self.nu
        width = min(size, cap + n_max + 1)
        beta = np.empty(n_max + 1)
        for n in range(n_max + 1):
            starts = min(n, size)
            regenerated = float(np.dot(nu[:starts], distances[n - np.arange(starts)]))
            if n < width:
                overlap = float(np.dot(nu[n:width], nu[: width - n]))
            else:
                overlap = 0.0
            deterministic = 2.0 * (self.nu_above[min(n, size)] - overlap)
            beta[n] = 0.5 * (regenerated + deterministic)
        return beta

    def tv_coupling_bound_check(
        self,
        n_max: int,
        state_cap: Optional[int] = None,
        budget: float = DEFAULT_BUDGET,
    ) -> InequalityCheck:
        """
        Pairs the exact beta(n) with the exact P(T* >= n), n = 0..n_max.

        Returns:
            InequalityCheck: lhs = beta(n), rhs = P(T* >= n); violations are expected empty.
        """
        beta = self.beta(n_max, state_cap, budget)
        tail = self.pair_tail(n_max, state_cap, budget).survival
        check = InequalityCheck("beta(n) <= P(T* >= n)", np.arange(n_max + 1), beta, tail, tolerance=budget)
        if check.violations:
            self.logger.warning(f"coupling inequality violated at n = {check.violations}")
        return check
