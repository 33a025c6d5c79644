import math

import numpy as np
import pytest


def brute_birkhoff(A, x, n):
    """Direct S_n(A)(x) for a callable A on coordinate lists."""
    return math.fsum(A(x[k:]) for k in range(n))


def brute_ising(c, h=0.0):
    def A(x):
        return h * x[0] + x[0] * sum(cj * x[j + 1] for j, cj in enumerate(c))

    return A


def brute_product(c, h=0.0):
    def A(x):
        return h * x[0] + sum(cj * x[j] for j, cj in enumerate(c))

    return A


def all_words(n):
    # ascending packed index: bit j is site j
    for k in range(1 << n):
        yield [1 if (k >> j) & 1 else -1 for j in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
