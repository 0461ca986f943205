import numpy as np
import pytest

from app.models.bandit import BanditSpec
from app.models.toy import ToySpec


@pytest.fixture
def three_arm_spec():
    return BanditSpec(K=3, T=20, mu=(1.0, 2.0, 3.0), sigma_tilde=(1.0, 1.0, 1.0), gamma=0.36, beta=10.0, c=0.4)


@pytest.fixture
def small_spec():
    return BanditSpec(K=3, T=5, mu=(1.0, 2.0, 3.0), sigma_tilde=(1.0, 0.8, 1.2), gamma=0.25, beta=3.0, c=0.4)


@pytest.fixture
def toy_spec():
    return ToySpec(mu=(1.0, 2.0), gamma=0.16, beta=10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20231)
