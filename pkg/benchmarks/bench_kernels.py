"""Time the compiled and pure-Python kernel backends on the same inputs.

Run with ``python3 benchmarks/bench_kernels.py``.
"""
import argparse
import timeit

import numpy as np

from spinthermo import _core


def cases(rng):
    for n in (12, 16, 20):
        field = rng.normal(size=n)
        pair = rng.normal(size=n) / np.arange(1, n + 1) ** 2
        yield f"quadratic_energies n={n}", lambda b, f=field, p=pair: _core.quadratic_energies(f, p, backend=b)
    for n in (16, 20):
        coeffs = rng.normal(size=n)
        yield f"linear_form n={n}", lambda b, c=coeffs: _core.linear_form(c, backend=b)
    for d in (14, 18):
        lp, lm, fv = rng.normal(size=1 << d), rng.normal(size=1 << d), rng.random(1 << d)
        yield f"transfer_table depth={d}", lambda b, x=lp, y=lm, z=fv: _core.transfer_table(x, y, z, backend=b)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(1)
    try:
        _core.backend_module("cython")
        backends = ("cython", "python")
    except ImportError:
        backends = ("python",)
    print(f"{'case':28s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup   max rel diff" if len(backends) == 2 else ""))
    for name, fn in cases(rng):
        times = [min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) for b in backends]
        diff = 0.0
        if len(backends) == 2:
            a, b = fn(backends[0]), fn(backends[1])
            diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        row = f"{name:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:11.1f}x{diff:15.1e}"
        print(row)


if __name__ == "__main__":
    main()
