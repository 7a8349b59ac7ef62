import numpy as np
import pytest

from pyiterates import CustomIterate, make_model
from pyiterates.models import DiscreteRenewalSpec, IFSSpec, MatrixWalkSpec, StickyBetaSpec


@pytest.fixture
def two_point_spec():
    # eps uniform on {1, 2}: nu = (2/3, 1/3)
    return DiscreteRenewalSpec(p_seq=[0.5, 0.5])


@pytest.fixture
def two_point_chain(two_point_spec):
    return make_model(two_point_spec)


@pytest.fixture
def interval_ifs():
    return make_model(IFSSpec(rho=0.5, map_family="interval", burn_in=60))


@pytest.fixture
def iid_ifs():
    # observable ignores the state: X_n = (1 - rho) U_n
    return make_model(IFSSpec(rho=0.5, map_family="interval", observable="innovation", burn_in=20))


@pytest.fixture
def sticky_chain():
    return make_model(StickyBetaSpec(a=2.0))


@pytest.fixture
def diagonal_walk():
    return make_model(MatrixWalkSpec(matrices=[[[2.0, 0.0], [0.0, 0.5]]], probabilities=[1.0], burn_in=10))


@pytest.fixture
def custom_sticky():
    # the sticky chain with a = 1.5 rebuilt from callables
    return CustomIterate(
        sampler=lambda rng, size: rng.random((size, 2)),
        transition=lambda x, e: np.where(e[..., 0] >= x, x, e[..., 1] ** (1.0 / 2.5)),
        observable=lambda e, x: np.asarray(x, dtype=float) - 1.5 / 2.5,
        initial=lambda size: np.full(size, 0.5),
        stationary_quantile=lambda u: np.asarray(u, dtype=float) ** (1.0 / 1.5),
        name="sticky_custom",
        observable_name="centered_state",
    )
