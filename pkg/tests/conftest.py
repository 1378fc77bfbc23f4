import os
import sys

import numpy
import pytest

# tests run against the working tree
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__),
                                                os.pardir)))
sys.path.insert(0, os.path.dirname(__file__))

from vtaobimanip import kinematics  # noqa: E402
from vtaobimanip import environment as env  # noqa: E402
from vtaobimanip.dataset import GeneratorConfig, \
    generate_synthetic_dataset  # noqa: E402


@pytest.fixture(scope="session")
def robot():
    return kinematics.load_hand_model('robot24')


@pytest.fixture(scope="session")
def human():
    return kinematics.load_hand_model('human21')


@pytest.fixture
def rng():
    return numpy.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_dataset():
    """ one trajectory, 8 kept frames of 32 px, p = 2 """
    cfg = GeneratorConfig(n_trajectories=1, frames_per_trajectory=10, p=2,
                          image_size=32)
    return generate_synthetic_dataset(cfg, seed=0)


@pytest.fixture
def easy_bottle():
    return env.EASY_BOTTLE


@pytest.fixture
def oracle():
    from oracle_controller import OracleController
    return OracleController()
