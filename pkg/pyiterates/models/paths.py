"""
This module contains the CoupledPath class.
"""

from typing import List, Optional

import numpy as np


class CoupledPath:
    """
    A class that represents two trajectories driven by the same innovations.

    Attributes:
        n (int): Number of steps.
        states (np.ndarray): W[0..n].
        states_star (np.ndarray): W*[0..n].
        observables (np.ndarray): X[1..n].
        observables_star (np.ndarray): X*[1..n].
        meeting_index (Optional[int]): First k with W_k = W*_k, None if the chains never met.
        flags (List[str]): Notes such as a burn-in fallback.
    """

    n: int
    states: np.ndarray
    states_star: np.ndarray
    observables: np.ndarray
    observables_star: np.ndarray
    meeting_index: Optional[int]
    flags: List[str]

    def __init__(
        self,
        n: int,
        states: np.ndarray,
        states_star: np.ndarray,
        observables: np.ndarray,
        observables_star: np.ndarray,
        meeting_index: Optional[int],
        flags: Optional[List[str]] = None,
    ) -> None:
        self.n = n
        self.states = states
        self.states_star = states_star
        self.observables = observables
        self.observables_star = observables_star
        self.meeting_index = meeting_index
        self.flags = flags or []

    def __str__(self):
        return f"CoupledPath(n={self.n}, meeting_index={self.meeting_index})"

    def to_dict(self) -> dict:
        return self.__dict__
