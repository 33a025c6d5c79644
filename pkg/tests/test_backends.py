import numpy as np
import pytest

from spinthermo import _core, _pykernels

try:
    from spinthermo import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def brute_energies(field, pair):
    n = len(field)
    out = []
    for k in range(1 << n):
        w = [1 if (k >> j) & 1 else -1 for j in range(n)]
        e = sum(field[i] * w[i] for i in range(n))
        e += sum(pair[j - i] * w[i] * w[j] for i in range(n) for j in range(i + 1, n))
        out.append(e)
    return np.array(out)


def test_python_energies_match_brute(rng):
    field, pair = rng.normal(size=7), rng.normal(size=7)
    assert np.allclose(_pykernels.quadratic_energies(field, pair), brute_energies(field, pair), atol=1e-12)


@needs_ext
def test_backends_bitwise_equal(rng):
    for n in (0, 1, 5, 12):
        field, pair = rng.normal(size=n), rng.normal(size=max(n, 1))[:n]
        a = _pykernels.quadratic_energies(field, pair)
        b = _ckernels.quadratic_energies(field, pair)
        assert np.array_equal(a, b)
        c = rng.normal(size=n)
        assert np.array_equal(_pykernels.linear_form(c), _ckernels.linear_form(c))


@needs_ext
def test_transfer_table_backends(rng):
    lp, lm = rng.normal(size=64), rng.normal(size=64)
    f = rng.normal(size=128)
    # exp comes from different libraries, so allow last-bit differences
    assert np.allclose(_pykernels.transfer_table(lp, lm, f), _ckernels.transfer_table(lp, lm, f), rtol=1e-14, atol=0)


def test_blocked_enumeration_matches_direct(rng):
    n = _core.BLOCK_BITS + 2
    field, pair = rng.normal(size=n) * 0.1, rng.normal(size=n) * 0.1
    blocked = _core.quadratic_energies(field, pair)
    direct = _pykernels.quadratic_energies(field, pair)
    assert np.allclose(blocked, direct, atol=1e-12)
    assert np.array_equal(blocked, _core.quadratic_energies(field, pair, threads=3))
