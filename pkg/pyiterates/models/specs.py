"""
This module contains the model specs.

Each spec is a plain record that validates its own parameter ranges;
`pyiterates.iterates.make_model` turns it into a runnable model.
"""

import math
from typing import List, Optional

import numpy as np
from scipy import special

from ..errors import ValidationError


DEFAULT_BURN_IN = 1000
DEFAULT_TRUNCATION = 10**6


class DiscreteRenewalSpec:
    """
    A class that represents the discrete renewal chain on {0, 1, 2, ...}.

    From 0 the chain jumps to eps - 1, from i > 0 it moves to i - 1.

    Attributes:
        p_seq (Optional[List[float]]): Explicit masses of eps on {1, 2, ...}.
        p (float): Moment order (and exponent of the parametric family p_k ~ k^{-(p+1)}).
        truncation (int): Last index of the parametric family; the rest is one atom at K+1.
        observable (str): "indicator_zero", "centered_indicator_zero" or "innovation".
    """

    family = "discrete_renewal"
    observables = ("indicator_zero", "centered_indicator_zero", "innovation")

    p_seq: Optional[List[float]]
    p: float
    truncation: int
    observable: str

    def __init__(
        self,
        p_seq: Optional[List[float]] = None,
        p: float = 3.0,
        truncation: int = DEFAULT_TRUNCATION,
        observable: str = "centered_indicator_zero",
    ) -> None:
        self.p_seq = None if p_seq is None else [float(v) for v in p_seq]
        self.p = float(p)
        self.truncation = int(truncation)
        self.observable = observable

    def __str__(self):
        if self.p_seq is not None:
            return f"DiscreteRenewal(p_seq={self.p_seq})"
        return f"DiscreteRenewal(parametric p={self.p}, K={self.truncation})"

    @property
    def parametric(self) -> bool:
        return self.p_seq is None

    def masses(self) -> np.ndarray:
        """
        Returns the masses of eps, entry i holding P(eps = i + 1).
        """
        if self.p_seq is not None:
            return np.asarray(self.p_seq, dtype=float)
        s = self.p + 1.0
        k = np.arange(1, self.truncation + 1, dtype=float)
        norm = special.zeta(s)
        masses = np.empty(self.truncation + 1)
        masses[:-1] = k ** (-s) / norm
        masses[-1] = special.zeta(s, self.truncation + 1) / norm
        return masses

    def validate(self) -> None:
        if self.p <= 2.0:
            raise ValidationError(f"p must be > 2, got {self.p}", "p > 2")
        if self.observable not in self.observables:
            raise ValidationError(f"unknown observable '{self.observable}'", "observable")
        if self.p_seq is not None:
            masses = np.asarray(self.p_seq, dtype=float)
            if masses.size == 0 or np.any(masses < 0) or not np.all(np.isfinite(masses)):
                raise ValidationError("masses must be nonnegative and finite", "masses nonnegative")
            if abs(masses.sum() - 1.0) > 1e-9:
                raise ValidationError(f"masses sum to {masses.sum()!r}, not 1", "masses sum to 1")
        else:
            if self.truncation < 1:
                raise ValidationError("truncation must be >= 1", "truncation >= 1")
            total = self.masses().sum()
            if abs(total - 1.0) > 1e-12:
                raise ValidationError(f"parametric masses sum to {total!r}", "masses sum to 1")

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def from_json(cls, item) -> "DiscreteRenewalSpec":
        return cls(
            p_seq=item.get("p_seq"),
            p=float(item.get("p", 3.0)),
            truncation=int(item.get("truncation", DEFAULT_TRUNCATION)),
            observable=str(item.get("observable", "centered_indicator_zero")),
        )


class StickyBetaSpec:
    """
    A class that represents the sticky chain on [0, 1].

    From x the chain stays put with probability 1 - x, otherwise it jumps to a
    draw of pi(dx) = (a + 1) x^a dx. Its stationary law is nu(dx) = a x^{a-1} dx.

    Attributes:
        a (float): Exponent, a > 1.
        observable (str): "state", "centered_state" or "innovation".
    """

    family = "sticky_beta"
    observables = ("state", "centered_state", "innovation")

    a: float
    observable: str

    def __init__(self, a: float, observable: str = "centered_state") -> None:
        self.a = float(a)
        self.observable = observable

    def __str__(self):
        return f"StickyBeta(a={self.a})"

    def validate(self) -> None:
        if not self.a > 1.0:
            raise ValidationError(f"a must be > 1, got {self.a}", "a > 1")
        if self.observable not in self.observables:
            raise ValidationError(f"unknown observable '{self.observable}'", "observable")

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def from_json(cls, item) -> "StickyBetaSpec":
        return cls(a=float(item["a"]), observable=str(item.get("observable", "centered_state")))


class ARLipschitzSpec:
    """
    A class that represents the AR-Lipschitz model W_n = f(W_{n-1}) + eps_n.

    Attributes:
        tau (float): Lipschitz exponent in (0, 1).
        C (float): Contraction constant in (0, 1].
        innovation (str): "normal" or "student_t".
        scale (float): Scale of the innovations.
        df (float): Degrees of freedom for Student innovations.
        observable (str): "next_state" or "innovation".
        burn_in (int): Burn-in length for stationary sampling.
    """

    family = "ar_lipschitz"
    observables = ("next_state", "innovation")
    innovations = ("normal", "student_t")

    tau: float
    C: float
    innovation: str
    scale: float
    df: float
    observable: str
    burn_in: int

    def __init__(
        self,
        tau: float,
        C: float = 1.0,
        innovation: str = "normal",
        scale: float = 1.0,
        df: float = 5.0,
        observable: str = "next_state",
        burn_in: int = DEFAULT_BURN_IN,
    ) -> None:
        self.tau = float(tau)
        self.C = float(C)
        self.innovation = innovation
        self.scale = float(scale)
        self.df = float(df)
        self.observable = observable
        self.burn_in = int(burn_in)

    def __str__(self):
        return f"ARLipschitz(tau={self.tau}, C={self.C}, {self.innovation})"

    @property
    def moment_order(self) -> float:
        """
        Declared moment order S of the innovations (moments below S are finite).
        """
        return math.inf if self.innovation == "normal" else self.df

    def validate(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ValidationError(f"tau must be in (0, 1), got {self.tau}", "0 < tau < 1")
        if not 0.0 < self.C <= 1.0:
            raise ValidationError(f"C must be in (0, 1], got {self.C}", "0 < C <= 1")
        if self.innovation not in self.innovations:
            raise ValidationError(f"unknown innovation law '{self.innovation}'", "innovation")
        if self.scale <= 0.0:
            raise ValidationError("scale must be positive", "scale > 0")
        if self.innovation == "student_t" and self.df <= 2.0:
            raise ValidationError("df must be > 2", "df > 2")
        if self.observable not in self.observables:
            raise ValidationError(f"unknown observable '{self.observable}'", "observable")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be >= 0", "burn_in >= 0")

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def from_json(cls, item) -> "ARLipschitzSpec":
        return cls(
            tau=float(item["tau"]),
            C=float(item.get("C", 1.0)),
            innovation=str(item.get("innovation", "normal")),
            scale=float(item.get("scale", 1.0)),
            df=float(item.get("df", 5.0)),
            observable=str(item.get("observable", "next_state")),
            burn_in=int(item.get("burn_in", DEFAULT_BURN_IN)),
        )


class IFSSpec:
    """
    A class that represents a contracting iterated random function system.

    Map families:
        interval: W' = rho W + (1 - rho) U with U uniform on [0, 1].
        affine:   W' = rho W + sigma Z with Z standard normal.

    The observable is h(eps, w) = eta * g(F(eps, w)) where g is the identity
    (modulus c(t) = t) or sign(t)|t|^alpha (modulus c(t) = 2^{1-alpha} t^alpha).

    Attributes:
        map_family (str): "interval" or "affine".
        rho (float): Contraction constant in (0, 1).
        sigma (float): Innovation scale of the affine family.
        kappa (Optional[float]): Distance constant; computed from the family when None.
        observable (str): "identity", "holder" or "innovation".
        alpha (float): Holder exponent in (0, 1].
        eta (float): Constant weight eta(eps).
        burn_in (int): Burn-in length for stationary sampling.
    """

    family = "ifs"
    observables = ("identity", "holder", "innovation")
    map_families = ("interval", "affine")

    map_family: str
    rho: float
    sigma: float
    kappa: Optional[float]
    observable: str
    alpha: float
    eta: float
    burn_in: int

    def __init__(
        self,
        rho: float,
        map_family: str = "interval",
        sigma: float = 1.0,
        kappa: Optional[float] = None,
        observable: str = "identity",
        alpha: float = 0.5,
        eta: float = 1.0,
        burn_in: int = DEFAULT_BURN_IN,
    ) -> None:
        self.map_family = map_family
        self.rho = float(rho)
        self.sigma = float(sigma)
        self.kappa = None if kappa is None else float(kappa)
        self.observable = observable
        self.alpha = float(alpha)
        self.eta = float(eta)
        self.burn_in = int(burn_in)

    def __str__(self):
        return f"IFS({self.map_family}, rho={self.rho})"

    def validate(self) -> None:
        if self.map_family not in self.map_families:
            raise ValidationError(f"unknown map family '{self.map_family}'", "map_family")
        if not 0.0 < self.rho < 1.0:
            raise ValidationError(f"rho must be in (0, 1), got {self.rho}", "0 < rho < 1")
        if self.sigma <= 0.0:
            raise ValidationError("sigma must be positive", "sigma > 0")
        if self.kappa is not None and self.kappa <= 0.0:
            raise ValidationError("kappa must be positive", "kappa > 0")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError("alpha must be in (0, 1]", "0 < alpha <= 1")
        if self.eta <= 0.0:
            raise ValidationError("eta must be positive", "eta > 0")
        if self.observable not in self.observables:
            raise ValidationError(f"unknown observable '{self.observable}'", "observable")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be >= 0", "burn_in >= 0")

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def from_json(cls, item) -> "IFSSpec":
        kappa = item.get("kappa")
        return cls(
            rho=float(item["rho"]),
            map_family=str(item.get("map_family", "interval")),
            sigma=float(item.get("sigma", 1.0)),
            kappa=None if kappa is None else float(kappa),
            observable=str(item.get("observable", "identity")),
            alpha=float(item.get("alpha", 0.5)),
            eta=float(item.get("eta", 1.0)),
            burn_in=int(item.get("burn_in", DEFAULT_BURN_IN)),
        )


class MatrixWalkSpec:
    """
    A class that represents the left random walk on GL_d driven by a finite ensemble.

    Attributes:
        matrices (List[List[List[float]]]): The invertible d x d matrices.
        probabilities (List[float]): Their probabilities.
        start_direction (List[float]): Unit vector in R^d.
        proximal (bool): User-asserted proximality flag (recorded only).
        strongly_irreducible (bool): User-asserted strong irreducibility flag (recorded only).
        burn_in (int): Burn-in length for stationary sampling.
    """

    family = "matrix_walk"
    observables = ("log_norm",)

    matrices: List[List[List[float]]]
    probabilities: List[float]
    start_direction: List[float]
    proximal: bool
    strongly_irreducible: bool
    burn_in: int
    observable: str

    def __init__(
        self,
        matrices: List[List[List[float]]],
        probabilities: Optional[List[float]] = None,
        start_direction: Optional[List[float]] = None,
        proximal: bool = False,
        strongly_irreducible: bool = False,
        burn_in: int = DEFAULT_BURN_IN,
    ) -> None:
        self.matrices = [[[float(v) for v in row] for row in matrix] for matrix in matrices]
        count = len(self.matrices)
        self.probabilities = (
            [1.0 / count] * count if probabilities is None else [float(v) for v in probabilities]
        )
        dim = len(self.matrices[0]) if count else 0
        if start_direction is None:
            start_direction = [1.0] + [0.0] * (dim - 1)
        self.start_direction = [float(v) for v in start_direction]
        self.proximal = bool(proximal)
        self.strongly_irreducible = bool(strongly_irreducible)
        self.burn_in = int(burn_in)
        self.observable = "log_norm"

    def __str__(self):
        return f"MatrixWalk(d={self.dim}, {len(self.matrices)} matrices)"

    @property
    def dim(self) -> int:
        return len(self.start_direction)

    def validate(self) -> None:
        if not self.matrices:
            raise ValidationError("ensemble is empty", "nonempty ensemble")
        stack = np.asarray(self.matrices, dtype=float)
        if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
            raise ValidationError("matrices must be square and of equal size", "square matrices")
        if stack.shape[1] < 2:
            raise ValidationError("dimension must be >= 2", "d >= 2")
        if stack.shape[1] != self.dim:
            raise ValidationError("start_direction has the wrong dimension", "start_direction in R^d")
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.size != stack.shape[0] or np.any(probs < 0):
            raise ValidationError("one nonnegative probability per matrix required", "probabilities")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {probs.sum()!r}, not 1", "probabilities sum to 1")
        dets = np.linalg.det(stack)
        singular = np.flatnonzero(np.abs(dets) <= 1e-14)
        if singular.size:
            raise ValidationError(f"matrix {int(singular[0])} is singular", "nonzero determinant")
        if abs(np.linalg.norm(self.start_direction) - 1.0) > 1e-9:
            raise ValidationError("start_direction must have unit norm", "unit start_direction")

    def to_dict(self) -> dict:
        return self.__dict__

    @classmethod
    def from_json(cls, item) -> "MatrixWalkSpec":
        return cls(
            matrices=item["matrices"],
            probabilities=item.get("probabilities"),
            start_direction=item.get("start_direction"),
            proximal=bool(item.get("proximal", False)),
            strongly_irreducible=bool(item.get("strongly_irreducible", False)),
            burn_in=int(item.get("burn_in", DEFAULT_BURN_IN)),
        )
