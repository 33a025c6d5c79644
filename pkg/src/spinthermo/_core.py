"""Kernel backend selection and blocked enumeration of quadratic energies.

The compiled backend is used when importable unless ``SPINTHERMO_PURE=1``.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("SPINTHERMO_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels

# words up to this many bits are enumerated in one kernel call
BLOCK_BITS = 16


def backend_module(name=None):
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def linear_form(coeffs, backend=None):
    return backend_module(backend).linear_form(coeffs)


def transfer_table(log_plus, log_minus, fvals, backend=None):
    return backend_module(backend).transfer_table(log_plus, log_minus, fvals)


def quadratic_energies(field, pair, threads=1, backend=None):
    """Energies of all ``2**n`` words for field ``field`` and distance couplings ``pair``.

    Volumes above ``BLOCK_BITS`` are split on the top bits into independent blocks.
    The split depends only on ``n``, so the output does not depend on ``threads``.
    """
    impl = backend_module(backend)
    field = np.asarray(field, dtype=np.float64)
    n = field.size
    pair = np.zeros(max(n, 1)) if pair is None else np.asarray(pair, dtype=np.float64)
    if pair.size < n:
        pair = np.concatenate([pair, np.zeros(n - pair.size)])
    pair = pair[:max(n, 1)]
    if n <= BLOCK_BITS:
        return impl.quadratic_energies(field, pair[:n] if n else pair[:0])

    low = BLOCK_BITS
    top = n - low
    base = impl.quadratic_energies(field[:low], pair[:low])
    top_energy = impl.quadratic_energies(field[low:], pair[:top])
    # cross[i, u] couples low site i with top site low + u
    i = np.arange(low)[:, None]
    u = np.arange(top)[None, :]
    cross = pair[low + u - i]
    out = np.empty(1 << n)

    def fill(t):
        bits = (t >> np.arange(top)) & 1
        g = cross @ (2.0 * bits - 1.0)
        block = base + impl.linear_form(g)
        block += top_energy[t]
        out[t << low:(t + 1) << low] = block

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(1 << top)))
    else:
        for t in range(1 << top):
            fill(t)
    return out
