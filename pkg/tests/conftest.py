import numpy as np
import pytest

from mmt.norms import GeneratedNorm, PolyhedralNorm

from oracles import E_DIRS


@pytest.fixture
def hexnorm():
    return PolyhedralNorm.hexagonal()


@pytest.fixture
def hexG(hexnorm):
    return GeneratedNorm(hexnorm, 2, extra_directions=E_DIRS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
