import numpy as np
import pytest

from partret import Dataset


def make(x, y, arity=None, **kw):
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[:, None]
    return Dataset(x, arity, np.asarray(y, dtype=float), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
