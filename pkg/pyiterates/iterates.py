"""
This module contains the random-iterate models X_n = h(eps_n, W_{n-1}), W_n = F(eps_n, W_{n-1}).

Every model works on batches: states are numpy arrays whose first axis runs over
independent chains, and every random draw goes through an explicit generator.

Classes:
    RandomIterate: Base class of all model families.
    DiscreteRenewalChain: The renewal chain on {0, 1, 2, ...}.
    StickyBetaChain: The sticky chain on [0, 1].
    ARLipschitzChain: W_n = f(W_{n-1}) + eps_n with the canonical map f.
    IteratedFunctionSystem: Contracting affine random maps.
    MatrixWalk: Projective action of a finite matrix ensemble.
    CustomIterate: A model built from user callables.
"""

import logging
import math
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .errors import ExactSamplerUnavailable, ValidationError
from .models import (
    ARLipschitzSpec,
    DiscreteRenewalSpec,
    IFSSpec,
    LyapunovEstimate,
    MatrixWalkSpec,
    StickyBetaSpec,
)
from .models.specs import DEFAULT_BURN_IN
from .utils import create_logger, map_chunks


Spec = Union[DiscreteRenewalSpec, StickyBetaSpec, ARLipschitzSpec, IFSSpec, MatrixWalkSpec]

EXACT = "exact"
BURN_IN = "burn_in"


class RandomIterate:
    """
    Base class of a random-iterate model.

    Attributes:
        family_tag (str): Model family.
        spec: The model spec the model was built from.
        observable (str): Name of the observable h.
        burn_in (int): Burn-in length used when no exact sampler exists.
        p_moment (float): Moment order declared for condition checks.
        logger (logging.Logger): The logger for class.
    """

    family_tag = "custom"
    has_exact_sampler = False
    logger: logging.Logger = create_logger(__name__)

    def __init__(
        self,
        spec=None,
        observable: str = "",
        burn_in: int = DEFAULT_BURN_IN,
        p_moment: float = 3.0,
    ) -> None:
        self.spec = spec
        self.observable = observable
        self.burn_in = int(burn_in)
        self.p_moment = float(p_moment)

    def __str__(self):
        return f"{type(self).__name__}({self.spec}, h={self.observable})"

    @classmethod
    def set_logger(cls, logger: logging.Logger) -> None:
        """
        Set logger for class.

        Args:
            logger (logging.Logger): Logger.
        """
        cls.logger = logger

    @property
    def stationary_mode(self) -> str:
        return EXACT if self.has_exact_sampler else BURN_IN

    @property
    def state_free(self) -> bool:
        """
        True when h depends on the innovation only.
        """
        return self.observable == "innovation"

    ######################
    # DYNAMICS (OVERRIDDEN)
    def sample_innovations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, state, innovation) -> np.ndarray:
        """
        Applies one transition W' = F(eps, W).
        """
        raise NotImplementedError

    def eval_observable(self, innovation, state) -> np.ndarray:
        """
        Evaluates X = h(eps, W).
        """
        raise NotImplementedError

    def initial_states(self, size: int) -> np.ndarray:
        """
        Starting states of burn-in trajectories.
        """
        raise NotImplementedError

    def stationary_quantile(self, u) -> np.ndarray:
        raise ExactSamplerUnavailable(self.family_tag)

    ##########
    # SAMPLING
    def sample_stationary(
        self,
        rng: np.random.Generator,
        size: int,
        mode: Optional[str] = None,
    ) -> np.ndarray:
        """
        Draws `size` states from the stationary law.

        Args:
            rng (np.random.Generator): The random stream.
            size (int): Number of states.
            mode (Optional[str]): "exact", "burn_in" or None for the model default.

        Returns:
            np.ndarray: The states.
        """
        mode = mode or self.stationary_mode
        if mode == EXACT:
            if not self.has_exact_sampler:
                raise ExactSamplerUnavailable(self.family_tag)
            return self.stationary_quantile(rng.random(size))
        if mode != BURN_IN:
            raise ValidationError(f"unknown stationary mode '{mode}'", "stationary_mode")
        states = self.initial_states(size)
        for _ in range(self.burn_in):
            states = self.step(states, self.sample_innovations(rng, size))
        return states

    def distance(self, x, y) -> np.ndarray:
        return np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def states_equal(self, x, y) -> np.ndarray:
        return np.asarray(x) == np.asarray(y)

    def design_states(self, rng: np.random.Generator, count: int = 32) -> np.ndarray:
        """
        Initial states spanning the state space, used for sup-norm designs.

        The default takes quantiles of a stationary pilot sample.
        """
        pilot = np.sort(self.sample_stationary(rng, max(1024, 16 * count)))
        levels = np.linspace(0.001, 0.999, count)
        return pilot[(levels * (pilot.size - 1)).astype(int)]

    def design_pairs(self, rng: np.random.Generator, count: int = 32) -> Tuple[np.ndarray, np.ndarray, str]:
        """
        Returns the initial pairs of a sup-norm design and its description.
        """
        grid = self.design_states(rng, count)
        x = np.repeat(grid, grid.size, axis=0)
        y = np.tile(grid, grid.size) if grid.ndim == 1 else np.tile(grid, (grid.size, 1))
        return x, y, f"{grid.shape[0]}x{grid.shape[0]} grid of states"


#############################
# DISCRETE RENEWAL CHAIN
class DiscreteRenewalChain(RandomIterate):
    """
    The chain with P(i, i-1) = 1 for i > 0 and P(0, i-1) = p_i.

    Attributes:
        masses (np.ndarray): P(eps = k), k = 1..L.
        nu (np.ndarray): Stationary law on {0..L-1}.
        mean_eps (float): E(eps).
    """

    family_tag = "discrete_renewal"
    has_exact_sampler = True

    def __init__(self, spec: DiscreteRenewalSpec) -> None:
        super().__init__(spec, spec.observable, p_moment=spec.p)
        self.masses = spec.masses()
        k = np.arange(1, self.masses.size + 1, dtype=float)
        self.mean_eps = float(np.dot(k, self.masses))
        self.nu0 = 1.0 / self.mean_eps
        self.nu = self.nu0 * np.cumsum(self.masses[::-1])[::-1]
        self._eps_cdf = np.cumsum(self.masses)
        self._nu_cdf = np.cumsum(self.nu)

    def sample_innovations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        index = np.searchsorted(self._eps_cdf, u, side="right")
        return np.minimum(index, self.masses.size - 1) + 1

    def step(self, state, innovation) -> np.ndarray:
        state = np.asarray(state)
        return np.where(state != 0, state - 1, np.asarray(innovation) - 1)

    def eval_observable(self, innovation, state) -> np.ndarray:
        state = np.asarray(state)
        if self.observable == "innovation":
            return np.asarray(innovation, dtype=float)
        indicator = (state == 0).astype(float)
        if self.observable == "centered_indicator_zero":
            return indicator - self.nu0
        return indicator

    def initial_states(self, size: int) -> np.ndarray:
        return np.zeros(size, dtype=np.int64)

    def stationary_quantile(self, u) -> np.ndarray:
        index = np.searchsorted(self._nu_cdf, np.asarray(u, dtype=float), side="right")
        return np.minimum(index, self.nu.size - 1).astype(np.int64)

    def design_states(self, rng: np.random.Generator, count: int = 32) -> np.ndarray:
        return np.arange(min(count, self.nu.size), dtype=np.int64)


#############################
# STICKY CHAIN
class StickyBetaChain(RandomIterate):
    """
    The chain P(x, A) = (1 - x) delta_x(A) + x pi(A) with pi(dx) = (a + 1) x^a dx.

    Innovations are pairs (U, V): the chain jumps to V^{1/(a+1)} when U < x.
    """

    family_tag = "sticky_beta"
    has_exact_sampler = True

    def __init__(self, spec: StickyBetaSpec) -> None:
        super().__init__(spec, spec.observable)
        self.a = spec.a
        self.stationary_mean = self.a / (self.a + 1.0)

    def sample_innovations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random((size, 2))

    def step(self, state, innovation) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        innovation = np.asarray(innovation, dtype=float)
        u, v = innovation[..., 0], innovation[..., 1]
        return np.where(u >= state, state, v ** (1.0 / (self.a + 1.0)))

    def eval_observable(self, innovation, state) -> np.ndarray:
        if self.observable == "innovation":
            return np.asarray(innovation, dtype=float)[..., 0]
        state = np.asarray(state, dtype=float)
        if self.observable == "centered_state":
            return state - self.stationary_mean
        return state

    def initial_states(self, size: int) -> np.ndarray:
        return np.full(size, 0.5)

    def stationary_quantile(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float) ** (1.0 / self.a)

    def design_states(self, rng: np.random.Generator, count: int = 32) -> np.ndarray:
        return (np.arange(count) + 0.5) / count


#############################
# AR-LIPSCHITZ MODEL
def ar_f(t, C: float, tau: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    The canonical map f(t) = sign(t) [|t| - C ((1 + |t|)^{1-tau} - 1) / (1 - tau)].

    Its derivative is f'(t) = 1 - C / (1 + |t|)^tau, so f is odd, f(0) = 0 and f is
    1-Lipschitz.

    Args:
        t: Point or array of points.
        C (float): Constant in (0, 1].
        tau (float): Exponent in (0, 1).

    Returns:
        Tuple[np.ndarray, np.ndarray]: f(t) and f'(t).
    """
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must be in (0, 1), got {tau}", "0 < tau < 1")
    if not 0.0 < C <= 1.0:
        raise ValidationError(f"C must be in (0, 1], got {C}", "0 < C <= 1")
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    value = np.sign(t) * (r - C * ((1.0 + r) ** (1.0 - tau) - 1.0) / (1.0 - tau))
    derivative = 1.0 - C / (1.0 + r) ** tau
    return value, derivative


class ARLipschitzChain(RandomIterate):
    """
    The model W_n = f(W_{n-1}) + eps_n with the canonical map `ar_f`.
    """

    family_tag = "ar_lipschitz"

    def __init__(self, spec: ARLipschitzSpec) -> None:
        super().__init__(spec, spec.observable, burn_in=spec.burn_in)
        self.tau = spec.tau
        self.C = spec.C

    def sample_innovations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.spec.innovation == "student_t":
            return self.spec.scale * rng.standard_t(self.spec.df, size)
        return self.spec.scale * rng.standard_normal(size)

    def f(self, t) -> np.ndarray:
        return ar_f(t, self.C, self.tau)[0]

    def step(self, state, innovation) -> np.ndarray:
        return self.f(state) + np.asarray(innovation, dtype=float)

    def eval_observable(self, innovation, state) -> np.ndarray:
        if self.observable == "innovation":
            return np.asarray(innovation, dtype=float)
        return self.step(state, innovation)

    def initial_states(self, size: int) -> np.ndarray:
        return np.zeros(size)

    def lipschitz_check(self, n_pairs: int, seed: int = 0) -> float:
        """
        Returns max |f(x) - f(y)| / |x - y| over `n_pairs` random pairs.
        """
        rng = np.random.default_rng(seed)
        x = rng.standard_cauchy(n_pairs)
        y = rng.standard_cauchy(n_pairs)
        keep = x != y
        ratio = np.abs(self.f(x[keep]) - self.f(y[keep])) / np.abs(x[keep] - y[keep])
        return float(ratio.max()) if ratio.size else 0.0


#############################
# ITERATED FUNCTION SYSTEM
class IteratedFunctionSystem(RandomIterate):
    """
    Random affine contractions W' = rho W + eps.

    The interval family uses eps = (1 - rho) U with U uniform and stays in [0, 1];
    the affine family uses eps = sigma Z with Z standard normal.
    """

    family_tag = "ifs"

    def __init__(self, spec: IFSSpec) -> None:
        super().__init__(spec, spec.observable, burn_in=spec.burn_in)
        self.rho = spec.rho
        self.eta = spec.eta
        self.stationary_sd = spec.sigma / math.sqrt(1.0 - spec.rho**2)
        if spec.kappa is not None:
            self.kappa = spec.kappa
        elif spec.map_family == "interval":
            self.kappa = 1.0
        else:
            self.kappa = 2.0 * self.stationary_sd / math.sqrt(math.pi)

    def sample_innovations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.spec.map_family == "interval":
            return (1.0 - self.rho) * rng.random(size)
        return self.spec.sigma * rng.standard_normal(size)

    def step(self, state, innovation) -> np.ndarray:
        return self.rho * np.asarray(state, dtype=float) + np.asarray(innovation, dtype=float)

    def eval_observable(self, innovation, state) -> np.ndarray:
        if self.observable == "innovation":
            return np.asarray(innovation, dtype=float)
        image = self.step(state, innovation)
        if self.observable == "holder":
            return self.eta * np.sign(image) * np.abs(image) ** self.spec.alpha
        return self.eta * image

    def modulus(self, t) -> np.ndarray:
        """
        The modulus c of the observable: |h(z, x) - h(z, y)| <= eta c(d(x, y)).
        """
        t = np.asarray(t, dtype=float)
        if self.observable == "innovation":
            return np.zeros_like(t)
        if self.observable == "holder":
            alpha = self.spec.alpha
            return 2.0 ** (1.0 - alpha) * t**alpha
        return t

    def contraction_bound(self, n) -> np.ndarray:
        """
        Returns eta c(kappa rho^{n-1}), the bound on delta_inf(n).
        """
        n = np.asarray(n, dtype=float)
        return self.eta * self.modulus(self.kappa * self.rho ** (n - 1.0))

    def initial_states(self, size: int) -> np.ndarray:
        start = 0.5 if self.spec.map_family == "interval" else 0.0
        return np.full(size, start)

    def design_states(self, rng: np.random.Generator, count: int = 32) -> np.ndarray:
        if self.spec.map_family == "interval":
            return np.linspace(0.0, 1.0, count)
        return np.linspace(-3.0, 3.0, count) * self.stationary_sd

    def one_step_contraction(self, n_pairs: int, inner: int = 256, seed: int = 0) -> float:
        """
        Returns the worst sampled ratio E d(W_{1,x}, W_{1,y}) / d(x, y).
        """
        rng = np.random.default_rng(seed)
        grid = self.design_states(rng, 64)
        x = rng.choice(grid, n_pairs)
        y = rng.choice(grid, n_pairs)
        keep = x != y
        x, y = x[keep], y[keep]
        eps = self.sample_innovations(rng, x.size * inner).reshape(x.size, inner)
        moved = np.abs(self.step(x[:, None], eps) - self.step(y[:, None], eps)).mean(axis=1)
        return float(np.max(moved / self.distance(x, y))) if x.size else 0.0


#############################
# MATRIX WALK
class MatrixWalk(RandomIterate):
    """
    The projective action of a finite ensemble of invertible matrices.

    States are unit vectors renormalized after every step; the observable is the
    cocycle h(g, x) = log(||g x|| / ||x||), so that the sum of the first n observables
    equals log ||A_n x||.
    """

    family_tag = "matrix_walk"

    def __init__(self, spec: MatrixWalkSpec) -> None:
        super().__init__(spec, spec.observable, burn_in=spec.burn_in)
        self.matrices = np.asarray(spec.matrices, dtype=float)
        self.probabilities = np.asarray(spec.probabilities, dtype=float)
        self.start = np.asarray(spec.start_direction, dtype=float)

    @property
    def dim(self) -> int:
        return self.start.size

    def sample_innovations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.matrices.shape[0], size=size, p=self.probabilities)

    def apply(self, state, innovation) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.matrices[np.asarray(innovation)], np.asarray(state, dtype=float))

    def step(self, state, innovation) -> np.ndarray:
        image = self.apply(state, innovation)
        return image / np.linalg.norm(image, axis=-1, keepdims=True)

    def eval_observable(self, innovation, state) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        norm = np.linalg.norm(state, axis=-1)
        if np.any(norm == 0):
            raise ValidationError("zero vector is not a projective state", "nonzero state")
        return np.log(np.linalg.norm(self.apply(state, innovation), axis=-1) / norm)

    def initial_states(self, size: int) -> np.ndarray:
        return np.tile(self.start, (size, 1))

    def distance(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.minimum(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))

    def states_equal(self, x, y) -> np.ndarray:
        return np.all(np.asarray(x) == np.asarray(y), axis=-1)

    def design_states(self, rng: np.random.Generator, count: int = 32) -> np.ndarray:
        vectors = rng.standard_normal((count, self.dim))
        return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)

    def design_pairs(self, rng: np.random.Generator, count: int = 256) -> Tuple[np.ndarray, np.ndarray, str]:
        return (
            self.design_states(rng, count),
            self.design_states(rng, count),
            f"{count} sampled sphere pairs",
        )

    def log_norm_product(self, innovations, x=None) -> float:
        """
        Returns log ||A_n x|| computed from the matrix product A_n = g_n ... g_1.

        The product is rescaled by its norm after every factor and the scales are
        accumulated in log space.
        """
        x = self.start if x is None else np.asarray(x, dtype=float)
        product = np.eye(self.dim)
        log_scale = 0.0
        for index in np.asarray(innovations):
            product = self.matrices[index] @ product
            scale = np.linalg.norm(product)
            product = product / scale
            log_scale += math.log(scale)
        return log_scale + math.log(np.linalg.norm(product @ x))


#############################
# CUSTOM MODEL
class CustomIterate(RandomIterate):
    """
    A model assembled from callables, for experiments outside the built-in families.

    Args:
        sampler (Callable): (rng, size) -> innovations.
        transition (Callable): (state, innovation) -> state.
        observable (Callable): (innovation, state) -> real.
        initial (Callable): size -> starting states of burn-in trajectories.
        stationary_quantile (Optional[Callable]): u -> state, enabling exact sampling.
        burn_in (int): Burn-in length.
        state_free (bool): Whether the observable ignores the state.
        name (str): Family tag reported for the model.
        observable_name (str): Label of the observable; "innovation" when state_free.

    Example usage:
        sticky = CustomIterate(
            sampler=lambda rng, size: rng.random((size, 2)),
            transition=lambda x, e: np.where(e[..., 0] >= x, x, e[..., 1] ** (1 / 3)),
            observable=lambda e, x: x - 2 / 3,
            initial=lambda size: np.full(size, 0.5),
            stationary_quantile=lambda u: u ** 0.5,
            name="sticky_custom",
            observable_name="centered_state",
        )
    """

    def __init__(
        self,
        sampler: Callable,
        transition: Callable,
        observable: Callable,
        initial: Callable,
        stationary_quantile: Optional[Callable] = None,
        burn_in: int = DEFAULT_BURN_IN,
        state_free: bool = False,
        name: str = "custom",
        observable_name: str = "custom",
    ) -> None:
        super().__init__(None, "innovation" if state_free else observable_name, burn_in=burn_in)
        self.family_tag = name
        self._sampler = sampler
        self._transition = transition
        self._observable = observable
        self._initial = initial
        self._quantile = stationary_quantile
        self.has_exact_sampler = stationary_quantile is not None

    def __str__(self):
        return f"CustomIterate({self.family_tag}, h={self.observable})"

    def sample_innovations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self._sampler(rng, size)

    def step(self, state, innovation) -> np.ndarray:
        return self._transition(state, innovation)

    def eval_observable(self, innovation, state) -> np.ndarray:
        return self._observable(innovation, state)

    def initial_states(self, size: int) -> np.ndarray:
        return self._initial(size)

    def stationary_quantile(self, u) -> np.ndarray:
        if self._quantile is None:
            raise ExactSamplerUnavailable(self.family_tag)
        return self._quantile(u)


#############################
# FACTORY AND MATRIX-WALK TOOLS
def make_model(spec: Spec) -> RandomIterate:
    """
    Validates a model spec and builds its model.

    Args:
        spec: One of the five model spec types.

    Returns:
        RandomIterate: The model.
    """
    spec.validate()
    if isinstance(spec, DiscreteRenewalSpec):
        return DiscreteRenewalChain(spec)
    if isinstance(spec, StickyBetaSpec):
        return StickyBetaChain(spec)
    if isinstance(spec, ARLipschitzSpec):
        return ARLipschitzChain(spec)
    if isinstance(spec, IFSSpec):
        return IteratedFunctionSystem(spec)
    if isinstance(spec, MatrixWalkSpec):
        return MatrixWalk(spec)
    raise ValidationError(f"unsupported model spec {type(spec).__name__}", "spec type")


def _require_walk(model: RandomIterate) -> MatrixWalk:
    if not isinstance(model, MatrixWalk):
        raise ValidationError("a matrix_walk model is required", "family = matrix_walk")
    return model


def lyapunov_estimate(
    model: MatrixWalk,
    n: int,
    reps: int,
    seed: int = 0,
    threads: int = 1,
) -> LyapunovEstimate:
    """
    Estimates the top Lyapunov exponent by n^{-1} sum_k X_{k,x} from the start direction.

    Args:
        model (MatrixWalk): The walk.
        n (int): Number of steps.
        reps (int): Number of independent paths.
        seed (int): Master seed.
        threads (int): Worker threads.

    Returns:
        LyapunovEstimate: Mean and standard error over paths; paths whose product
        became numerically singular are dropped and counted.
    """
    walk = _require_walk(model)
    if n < 1:
        raise ValidationError("n must be >= 1", "n >= 1")

    def run(size: int, rng: np.random.Generator) -> np.ndarray:
        states = walk.initial_states(size)
        sums = np.zeros(size)
        alive = np.ones(size, dtype=bool)
        for _ in range(n):
            image = walk.apply(states, walk.sample_innovations(rng, size))
            norms = np.linalg.norm(image, axis=1)
            bad = ~np.isfinite(norms) | (norms <= 0)
            alive &= ~bad
            norms = np.where(bad, 1.0, norms)
            sums += np.log(norms)
            states = np.where(bad[:, None], walk.start, image / norms[:, None])
        return np.where(alive, sums / n, np.nan)

    values = np.concatenate(map_chunks(run, reps, seed, "lyapunov", threads))
    kept = values[np.isfinite(values)]
    aborted = int(values.size - kept.size)
    if aborted:
        walk.logger.warning(f"{aborted} paths aborted: numerically singular product")
    if kept.size == 0:
        return LyapunovEstimate(float("nan"), float("nan"), n, reps, aborted)
    se = float(kept.std(ddof=1) / math.sqrt(kept.size)) if kept.size > 1 else 0.0
    estimate = LyapunovEstimate(float(kept.mean()), se, n, reps, aborted)
    walk.logger.info(f"Lyapunov exponent: {estimate}")
    return estimate


def log_moment_check(
    model: MatrixWalk,
    p: float,
    reps: Optional[int] = None,
    seed: int = 0,
) -> Tuple[float, float]:
    """
    Returns E[(log N(g))^p] with N(g) = max(||g||, ||g^{-1}||), and its standard error.

    The finite ensemble gives the exact weighted sum (standard error 0); passing
    `reps` switches to a Monte Carlo mean over sampled matrices.
    """
    walk = _require_walk(model)
    if p <= 0:
        raise ValidationError("p must be > 0", "p > 0")
    norms = np.linalg.norm(walk.matrices, ord=2, axis=(1, 2))
    inverse_norms = np.linalg.norm(np.linalg.inv(walk.matrices), ord=2, axis=(1, 2))
    values = np.log(np.maximum(norms, inverse_norms)) ** p
    if reps is None:
        return float(np.dot(walk.probabilities, values)), 0.0
    rng = np.random.default_rng(seed)
    draws = values[walk.sample_innovations(rng, reps)]
    se = float(draws.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return float(draws.mean()), se
