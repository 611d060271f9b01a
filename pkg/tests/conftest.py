import numpy as np
import pytest

from dualbev import _kernels

BACKEND_NAMES = sorted(_kernels.BACKENDS)


@pytest.fixture(params=BACKEND_NAMES)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
