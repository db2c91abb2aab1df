import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def central_diff(f, p, i, h=1e-5):
    """Independent first-derivative oracle (5-point stencil)."""
    p = np.asarray(p, float)
    e = np.zeros_like(p)
    e[i] = h
    return (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * h)
