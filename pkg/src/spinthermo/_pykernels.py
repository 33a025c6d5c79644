"""Pure-numpy kernels; reference implementation and fallback for ``_ckernels``.

Words are bit-packed: bit ``i`` of the index is ``(w_i + 1) // 2``.
"""
import numpy as np


def linear_form(coeffs):
    """Return ``sum_i coeffs[i] * w_i`` for every word ``w`` of length ``len(coeffs)``."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    out = np.zeros(1 << coeffs.size)
    size = 1
    for c in coeffs:
        head = out[:size]
        out[size:2 * size] = head + c
        head -= c
        size *= 2
    return out


def quadratic_energies(field, pair):
    """Energies ``sum_i field[i] w_i + sum_{i<j} pair[j-i] w_i w_j`` over all ``2**n`` words.

    ``pair[0]`` is ignored; ``pair`` must have length ``n``.
    """
    field = np.asarray(field, dtype=np.float64)
    pair = np.asarray(pair, dtype=np.float64)
    n = field.size
    out = np.zeros(1 << n)
    local = np.zeros(1 << max(n - 1, 0))
    size = 1
    for i in range(n):
        # local[k] = sum_{j<i} pair[i-j] * w_j(k), built by doubling
        local[0] = 0.0
        lsize = 1
        for j in range(i):
            c = pair[i - j]
            head = local[:lsize]
            local[lsize:2 * lsize] = head + c
            head -= c
            lsize *= 2
        loc = local[:size] + field[i]
        head = out[:size]
        out[size:2 * size] = head + loc
        head -= loc
        size *= 2
    return out


def transfer_table(log_plus, log_minus, fvals):
    """One Ruelle step on a table.

    ``out[x] = exp(log_plus[x]) f(+1 x) + exp(log_minus[x]) f(-1 x)`` where ``f``
    is tabulated at depth ``log2(len(fvals))`` and ``x`` runs over the indices of
    ``log_plus``.
    """
    mask = fvals.size - 1
    x = np.arange(log_plus.size, dtype=np.int64)
    shifted = (x << 1) & mask
    return np.exp(log_plus) * fvals[shifted | (1 & mask)] + np.exp(log_minus) * fvals[shifted]
