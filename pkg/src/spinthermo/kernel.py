"""Involution kernels, kernel eigenfunctions, the pressure bound and the binary model.

Kernels act on pairs ``(y | x)`` of one-sided configurations. With scaled
couplings ``c_j`` (see :class:`~spinthermo.potential.Potential`)::

    product:  W(y|x) = sum_{i>=0} (x_i + y_i) alpha_{i+1},  alpha_n = sum_{j>n} c_j
    Ising:    W(y|x) = sum_{k,j>=0} y_k x_j c_{j+k+1}

and ``(A + W)(y | a x) = (A + W)(a y | x)`` holds term by term for the
truncated couplings, with the dual potential equal to ``A`` itself.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import _core
from .gibbs import build_measure, log_weights
from .potential import Kind, Potential, Rule
from .space import BoundaryTail, SpinWord, TailKind, concat, configurations, embedding, word_matrix
from .transfer import product_alphas

MAX_MARGINAL_DEPTH = 20
MC_CHUNKS = 16


class KernelKind(str, enum.Enum):
    PRODUCT = "product"
    ISING = "ising"


class KernelDomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KernelSpec:
    kind: KernelKind
    c: np.ndarray  # c_1..c_K
    alphas: np.ndarray  # alpha_0..alpha_K
    needs_alternating: bool  # series only conditionally convergent off the alternating set

    @property
    def K(self) -> int:
        return self.c.size

    @classmethod
    def from_potential(cls, p: Potential) -> "KernelSpec":
        kind = KernelKind.PRODUCT if p.kind is Kind.PRODUCT else KernelKind.ISING
        cp = p.spec.couplings
        slow = kind is KernelKind.ISING and cp.rule is Rule.POWER_LAW and cp.gamma <= 2
        return cls(kind, np.asarray(p.c), product_alphas(p), slow)


def _point(pt, length: int) -> tuple[np.ndarray, BoundaryTail | None]:
    """Coordinates of ``pt`` (array, SpinWord with plus tail, or ``(word, tail)``)."""
    if isinstance(pt, tuple) and len(pt) == 2 and isinstance(pt[1], BoundaryTail):
        word, tail = pt
        return concat(word, tail, max(length, len(word))).astype(np.float64), tail
    if isinstance(pt, SpinWord):
        return concat(pt, BoundaryTail.plus(), max(length, pt.n)).astype(np.float64), BoundaryTail.plus()
    arr = np.asarray(pt, dtype=np.float64)
    if arr.size < length:
        raise ValueError(f"point needs at least {length} coordinates")
    return arr, None


def _alternates_eventually(x: np.ndarray) -> bool:
    # x_j = -x_{j+1} from some index on, judged on the second half of the array
    half = x.size // 2
    return bool(np.all(x[half:-1] == -x[half + 1:]))


def _paired_sum(terms: np.ndarray) -> float:
    # consecutive terms are grouped before accumulating
    if terms.size % 2:
        terms = np.concatenate([terms, [0.0]])
    return math.fsum(terms[0::2] + terms[1::2])


def kernel_eval(w: KernelSpec, y, x) -> float:
    K = w.K
    yv, _ = _point(y, K)
    xv, xtail = _point(x, K)
    if w.kind is KernelKind.PRODUCT:
        return math.fsum((xv[:K] + yv[:K]) * w.alphas[1:])
    if w.needs_alternating:
        ok = xtail.kind is TailKind.ALTERNATING if xtail is not None else _alternates_eventually(xv)
        if not ok:
            raise KernelDomainError("kernel undefined off X̃")
    c = np.concatenate([w.c, np.zeros(1)])
    inner = []
    for k in range(K):
        j = np.arange(K - k)
        inner.append(yv[k] * _paired_sum(xv[j] * c[j + k]))
    return math.fsum(inner)


def kernel_row(w: KernelSpec, x) -> tuple[np.ndarray, float]:
    """``(g, b)`` with ``W(y|x) = sum_k g_k y_k + b`` for fixed ``x``."""
    K = w.K
    xv, _ = _point(x, K)
    if w.kind is KernelKind.PRODUCT:
        return w.alphas[1:].copy(), math.fsum(xv[:K] * w.alphas[1:])
    g = np.array([_paired_sum(xv[: K - k] * w.c[k:]) for k in range(K)])
    return g, 0.0


def duality_residual(p: Potential, w: KernelSpec, a: int, x, y) -> float:
    """``|(A + W)(a y | x) - (A + W)(y | a x)|`` with the dual potential ``A* = A``."""
    if a not in (-1, 1):
        raise ValueError("a must be -1 or +1")
    n = max(w.K, p.support - 1)
    xv, _ = _point(x, n)
    yv, _ = _point(y, n)
    ay = np.concatenate([[a], yv])
    ax = np.concatenate([[a], xv])
    left = p.eval(ay[: p.support]) + kernel_eval(w, ay, xv)
    right = p.eval(ax[: p.support]) + kernel_eval(w, yv, ax)
    return abs(left - right)


# -- quadrature against the eigenprobability ------------------------------------


@dataclass(frozen=True)
class ExactCylinder:
    depth: int = 12
    boundary: BoundaryTail = BoundaryTail.plus()
    paired: bool = False  # average the boundary with its flip

    kind = "exact_cylinder"

    @property
    def size(self) -> int:
        return self.depth


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 100_000
    seed: int = 0

    kind = "monte_carlo"

    @property
    def size(self) -> int:
        return self.samples


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Weights on depth-``d`` words, completed beyond ``d`` by ``tail``."""

    depth: int
    log_weights: np.ndarray  # normalized
    tail: BoundaryTail

    def site_means(self) -> np.ndarray:
        w = np.exp(self.log_weights)
        idx = np.arange(w.size, dtype=np.int64)
        return np.array([np.sum(w * (2.0 * ((idx >> i) & 1) - 1.0)) for i in range(self.depth)])


def _normalized_log(lw: np.ndarray) -> np.ndarray:
    top = float(np.max(lw))
    return lw - (top + math.log(float(np.sum(np.exp(lw - top)))))


def quadrature_measure(p: Potential, q: ExactCylinder) -> list[Quadrature]:
    """``mu_d`` of the dual potential (``A`` itself); two flip-paired halves when ``q.paired``."""
    tails = [q.boundary, q.boundary.flipped()] if q.paired else [q.boundary]
    out = []
    for tail in tails:
        lw = _normalized_log(log_weights(p, q.depth, tail))
        if q.paired:
            lw = lw - math.log(2.0)
        out.append(Quadrature(q.depth, lw, tail))
    return out


def _log_cylinder_integral(w: KernelSpec, parts: list[Quadrature], g: np.ndarray, b: float) -> float:
    logs = []
    for part in parts:
        d = part.depth
        rest = part.tail.values(d, max(d, w.K)).astype(np.float64)
        const = b + math.fsum(g[d:] * rest[: max(w.K - d, 0)])
        e = part.log_weights + _core.linear_form(g[:d]) + const
        top = float(np.max(e))
        logs.append(top + math.log(float(np.sum(np.exp(e - top)))))
    top = max(logs)
    return top + math.log(sum(math.exp(v - top) for v in logs))


def product_marginals(p: Potential, tol: float = 1e-6, check_depth: int = 10) -> np.ndarray:
    """Single-site means of the eigenprobability of a product-type potential.

    Means are read off ``mu_d`` for the last few depths up to the cap and must
    agree within ``tol``; pair correlations of ``mu_d`` at ``check_depth`` are
    compared with products of means.
    """
    if p.kind is not Kind.PRODUCT:
        raise KernelDomainError("independence not established")
    return _marginals(p.spec, tol, check_depth).copy()


@lru_cache(maxsize=32)
def _marginals(spec, tol, check_depth):
    p = Potential(spec)
    dmax = min(p.K, MAX_MARGINAL_DEPTH)
    dc = min(check_depth, dmax)
    m = build_measure(p, dc, BoundaryTail.plus())
    spins = word_matrix(dc).astype(np.float64)
    means = m.weights @ spins
    off = (spins.T * m.weights) @ spins - np.outer(means, means)
    np.fill_diagonal(off, 0.0)
    if np.max(np.abs(off)) > 1e-10:
        raise KernelDomainError("independence not established")
    prev = None
    for d in range(max(1, dmax - 2), dmax + 1):
        m = build_measure(p, d, BoundaryTail.plus())
        idx = np.arange(1 << d, dtype=np.int64)
        means = np.array([np.sum(m.weights * (2.0 * ((idx >> i) & 1) - 1.0)) for i in range(d)])
        if prev is not None and np.max(np.abs(means[: prev.size] - prev)) >= tol:
            raise KernelDomainError("single-site marginals did not stabilize")
        prev = means
    means.setflags(write=False)
    return means


def _mc_log_integral(p: Potential, w: KernelSpec, q: MonteCarlo, g: np.ndarray, b: float) -> float:
    means = product_marginals(p)
    d = means.size
    const = b + math.fsum(g[d:])  # unsampled sites sit at +1
    prob = (1.0 + means) / 2.0
    root = np.random.SeedSequence(q.seed)
    counts = [q.samples // MC_CHUNKS + (1 if i < q.samples % MC_CHUNKS else 0) for i in range(MC_CHUNKS)]
    total = []
    for child, count in zip(root.spawn(MC_CHUNKS), counts):
        if not count:
            continue
        rng = np.random.default_rng(child)
        y = np.where(rng.random((count, d)) < prob, 1.0, -1.0)
        total.append(float(np.sum(np.exp(y @ g[:d]))))
    return const + math.log(math.fsum(total) / q.samples)


def kernel_eigenfunction(p: Potential, w: KernelSpec, x, quadrature=None) -> float:
    """``int exp(W(y|x)) d nu(y)`` with ``nu`` replaced by a quadrature measure."""
    quadrature = ExactCylinder() if quadrature is None else quadrature
    if isinstance(quadrature, MonteCarlo):
        if p.kind is not Kind.PRODUCT:
            raise KernelDomainError("independence not established")
        g, b = kernel_row(w, x)
        return math.exp(_mc_log_integral(p, w, quadrature, g, b))
    if w.needs_alternating:
        xv, xtail = _point(x, w.K)
        ok = xtail.kind is TailKind.ALTERNATING if xtail is not None else _alternates_eventually(xv)
        if not ok:
            raise KernelDomainError("kernel undefined off X̃")
    g, b = kernel_row(w, x)
    return math.exp(_log_cylinder_integral(w, quadrature_measure(p, quadrature), g, b))


def kernel_eigenfunction_table(p: Potential, w: KernelSpec, depth: int, tail: BoundaryTail, quadrature=None):
    """Kernel eigenfunction on every depth-word completed by ``tail``; also returns the embedding."""
    quadrature = ExactCylinder() if quadrature is None else quadrature
    rows = configurations(depth, tail, max(depth, w.K)).astype(np.float64)
    if isinstance(quadrature, MonteCarlo):
        return embedding(depth), np.array([kernel_eigenfunction(p, w, r, quadrature) for r in rows])
    parts = quadrature_measure(p, quadrature)
    vals = []
    for r in rows:
        g, b = kernel_row(w, r)
        vals.append(math.exp(_log_cylinder_integral(w, parts, g, b)))
    return embedding(depth), np.array(vals)


def fkg_bound_quotient(p: Potential, w: KernelSpec, depth: int = 12) -> float:
    """``int e^{W(y|-1 1^inf)} d nu / int e^{W(y|1^inf)} d nu`` by exact-cylinder quadrature."""
    n = w.K + 1
    plus = np.ones(n)
    bumped = plus.copy()
    bumped[0] = -1.0
    q = ExactCylinder(depth)
    return kernel_eigenfunction(p, w, bumped, q) / kernel_eigenfunction(p, w, plus, q)


def export_kernel_csv(t: np.ndarray, phi: np.ndarray, quadrature, path) -> None:
    order = np.argsort(t, kind="stable")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\r\n")
        wr.writerow(["t_embedding", "phi_value", "quadrature_kind", "depth_or_samples"])
        for k in order:
            wr.writerow([format(float(t[k]), ".17g"), format(float(phi[k]), ".17g"), quadrature.kind, quadrature.size])


# -- pressure bound --------------------------------------------------------------


@dataclass(frozen=True)
class PressureBound:
    gamma: float
    beta: float
    K: int
    truncated: float  # log(2 cosh(beta sum_{j<=K} j^-gamma))
    tail: float  # beta * K^{1-gamma} / (gamma - 1)

    @property
    def bound(self) -> float:
        # log cosh is 1-Lipschitz, so the tail can only add this much
        return self.truncated + self.tail


def pressure_upper_bound(gamma: float, beta: float, K: int = 64) -> PressureBound:
    if not gamma > 2:
        raise ValueError("bound derived for γ>2 regime")
    if not beta > 0:
        raise ValueError("beta must be positive")
    s = math.fsum(j ** (-gamma) for j in range(1, K + 1))
    return PressureBound(gamma, beta, K, math.log(2.0 * math.cosh(beta * s)), beta * K ** (1.0 - gamma) / (gamma - 1.0))


def pressure_report(estimate: float, bound: PressureBound) -> dict:
    return {
        "pressure_estimate": estimate,
        "upper_bound": bound.truncated,
        "upper_bound_with_tail": bound.bound,
        "margin": bound.truncated - estimate,
        "gamma": bound.gamma,
        "beta": bound.beta,
        "K": bound.K,
    }


def export_pressure_json(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


# -- binary model on [-1, 1] ------------------------------------------------------

GRID_POINTS = 2048
TAYLOR_STEP = 1e-4


def binary_grid(points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(-1.0, 1.0, points)


def binary_apply(f, grid: np.ndarray | None = None):
    """``(L f)(t) = e^{t/2} f((t+1)/2) + e^{-t/2} f((t-1)/2)``.

    ``f`` may be a callable, a ``numpy.polynomial.Polynomial`` or an array of
    values on ``grid`` (then interpolated linearly). Returns values on ``grid``.
    """
    grid = binary_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if isinstance(f, np.ndarray) or isinstance(f, (list, tuple)):
        vals = np.asarray(f, dtype=np.float64)
        if vals.shape != grid.shape:
            raise ValueError("grid values must match the grid")
        fn = lambda t: np.interp(t, grid, vals)  # noqa: E731
    else:
        fn = f
    return np.exp(grid / 2) * fn((grid + 1) / 2) + np.exp(-grid / 2) * fn((grid - 1) / 2)


def binary_operator(f: Callable) -> Callable:
    """``L f`` as a callable, for pointwise evaluation."""

    def lf(t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(t / 2) * f((t + 1) / 2) + np.exp(-t / 2) * f((t - 1) / 2)

    return lf


def taylor_coefficients(fn: Callable, order: int = 2, h: float = TAYLOR_STEP) -> np.ndarray:
    """Taylor coefficients at 0 up to ``order`` (at most 2).

    Central differences at steps ``h`` and ``2h`` combined by one Richardson
    step; the order-0 coefficient is the value itself.
    """
    if not 0 <= order <= 2:
        raise ValueError("order must be 0, 1 or 2")

    def ev(t):
        return float(np.asarray(fn(np.array([t], dtype=np.float64))).reshape(-1)[0])

    f0 = ev(0.0)
    coeffs = [f0]
    if order >= 1:
        d1 = lambda s: (ev(s) - ev(-s)) / (2 * s)  # noqa: E731
        coeffs.append((4 * d1(h) - d1(2 * h)) / 3)
    if order >= 2:
        d2 = lambda s: (ev(s) - 2 * f0 + ev(-s)) / (s * s)  # noqa: E731
        coeffs.append((4 * d2(h) - d2(2 * h)) / 3 / 2)
    return np.array(coeffs)


SQRT353 = math.sqrt(353.0)
BINARY_EIGENVALUE = (49.0 + SQRT353) / 32.0


def binary_quadratic(t):
    """``(3/4) t^2 + (3/32)(15 + sqrt 353)``, the quadratic whose image agrees to second order."""
    t = np.asarray(t, dtype=np.float64)
    return 0.75 * t * t + 3.0 / 32.0 * (15.0 + SQRT353)
