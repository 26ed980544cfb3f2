import numpy as np
import pytest

from lnn.architecture import LnnConfig, build_architecture
from lnn.simlab import gen_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def reg_sample():
    data, g = gen_dataset("reg", 800, 2, seed=3)
    arch = build_architecture(LnnConfig(d=2, q=3), data.T)
    return data, g, arch


@pytest.fixture(scope="session")
def bin_sample():
    data, g = gen_dataset("bin", 800, 2, seed=3)
    arch = build_architecture(LnnConfig(d=2, q=3), data.T)
    return data, g, arch
