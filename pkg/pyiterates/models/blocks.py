"""
This module contains the block-scheme records.
"""

from typing import List, Optional, Sequence

import numpy as np


class BlockParams:
    """
    A class that represents truncation levels M_k and window widths m_k over a range of scales.

    Attributes:
        p (float): Moment order, p > 2.
        scheme (str): "thm1" (closed form) or "thm2" (quantile driven).
        k (np.ndarray): Scales k_lo..k_hi.
        M (np.ndarray): Truncation levels M_k.
        m (np.ndarray): Window widths m_k.
        q (Optional[float]): Decay order of delta for the closed-form scheme.
        eps (Optional[float]): Exponent slack of the closed-form scheme.
        u1 (Optional[float]): (1/2) P(|X_1| > 0), quantile-driven scheme only.
        v (Optional[np.ndarray]): Levels v_k, quantile-driven scheme only.
        k0 (Optional[int]): First scale with R(u1) <= 3^{k/p}, quantile-driven scheme only.
    """

    p: float
    scheme: str
    k: np.ndarray
    M: np.ndarray
    m: np.ndarray
    q: Optional[float]
    eps: Optional[float]
    u1: Optional[float]
    v: Optional[np.ndarray]
    k0: Optional[int]

    def __init__(
        self,
        p: float,
        scheme: str,
        k: Sequence[int],
        M: Sequence[float],
        m: Sequence[int],
        q: Optional[float] = None,
        eps: Optional[float] = None,
        u1: Optional[float] = None,
        v: Optional[Sequence[float]] = None,
        k0: Optional[int] = None,
    ) -> None:
        self.p = p
        self.scheme = scheme
        self.k = np.asarray(k, dtype=int)
        self.M = np.asarray(M, dtype=float)
        self.m = np.asarray(m, dtype=np.int64)
        self.q = q
        self.eps = eps
        self.u1 = u1
        self.v = None if v is None else np.asarray(v, dtype=float)
        self.k0 = k0

    def __str__(self):
        return f"BlockParams({self.scheme}, k={self.k[0]}..{self.k[-1]})"

    def at(self, k: int):
        """
        Returns (M_k, m_k) for one scale of the range.
        """
        index = int(np.flatnonzero(self.k == k)[0])
        return float(self.M[index]), int(self.m[index])

    def to_dict(self) -> dict:
        return self.__dict__


class NuTable:
    """
    A class that represents the per-scale variance proxies nu_k.

    Attributes:
        k (np.ndarray): Scales.
        nu (np.ndarray): Direct-form estimates.
        se (np.ndarray): Their standard errors.
        nu_cov (np.ndarray): Covariance-form estimates from the same draws.
        se_cov (np.ndarray): Their standard errors.
        m (np.ndarray): Window widths used.
        M (np.ndarray): Truncation levels used.
        outer (int): Outer draws per scale.
        inner (int): Inner resamples per window position.
        flags (List[str]): Notes such as a burn-in fallback.
    """

    k: np.ndarray
    nu: np.ndarray
    se: np.ndarray
    nu_cov: np.ndarray
    se_cov: np.ndarray
    m: np.ndarray
    M: np.ndarray
    outer: int
    inner: int
    flags: List[str]

    def __init__(
        self,
        k: Sequence[int],
        nu: Sequence[float],
        se: Sequence[float],
        nu_cov: Sequence[float],
        se_cov: Sequence[float],
        m: Sequence[int],
        M: Sequence[float],
        outer: int,
        inner: int,
        flags: Optional[List[str]] = None,
    ) -> None:
        self.k = np.asarray(k, dtype=int)
        self.nu = np.asarray(nu, dtype=float)
        self.se = np.asarray(se, dtype=float)
        self.nu_cov = np.asarray(nu_cov, dtype=float)
        self.se_cov = np.asarray(se_cov, dtype=float)
        self.m = np.asarray(m, dtype=np.int64)
        self.M = np.asarray(M, dtype=float)
        self.outer = outer
        self.inner = inner
        self.flags = flags or []

    def __str__(self):
        return f"NuTable(k={self.k.tolist()})"

    def to_dict(self) -> dict:
        return self.__dict__
