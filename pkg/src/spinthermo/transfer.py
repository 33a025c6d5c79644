"""Ruelle operator ``(L f)(x) = sum_a exp(A(a x)) f(a x)`` and what is built from it.

Two engines are provided:

* :func:`transfer_apply` acts on a whole :class:`TabulatedFunction` table. It is
  exact for the truncated potential but needs the table depth to reach ``K``,
  so it is limited to small truncations by the depth cap.
* :func:`ruelle_power` evaluates ``L^n f`` at given points by summing over the
  ``2^n`` preimages, ``L^n f(z) = sum_w exp(S_n A(w z)) f(w z)``. This works for
  any ``K`` and is what the iteration routines use.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _core
from .gibbs import build_measure, expect, magnetizations
from .potential import Kind, Potential, class_E_check_ising, is_mirrored
from .space import (
    BoundaryTail,
    TabulatedFunction,
    configurations,
    embedding,
    is_increasing,
    pack,
    phi_table,
    word_matrix,
)

DEPTH_CAP = 20
MAX_ITERS = 24
_CHUNK = 1 << 22  # preimage-by-point entries handled per block


class DepthCapError(ValueError):
    pass


# -- table engine -------------------------------------------------------------


def transfer_apply(p: Potential, f: TabulatedFunction, cap: int = DEPTH_CAP) -> TabulatedFunction:
    """``L f`` tabulated at depth ``max(f.depth, K)``; exact for the truncated potential."""
    depth = max(f.depth, p.K)
    if depth > cap:
        raise DepthCapError("depth cap exceeded; increase cap or lower K")
    rows = configurations(depth, f.completion, max(depth, p.support - 1))
    size = rows.shape[0]
    ones = np.ones((size, 1), dtype=np.int8)
    log_plus = p.eval_rows(np.concatenate([ones, rows], axis=1)[:, : p.support])
    log_minus = p.eval_rows(np.concatenate([-ones, rows], axis=1)[:, : p.support])
    fvals = np.ascontiguousarray(f.lift(depth).values)
    out = _core.transfer_table(log_plus, log_minus, fvals)
    return TabulatedFunction(depth, out, f.completion)


def transfer_power(p: Potential, f: TabulatedFunction, n: int, cap: int = DEPTH_CAP) -> TabulatedFunction:
    for _ in range(n):
        f = transfer_apply(p, f, cap)
    return f


# -- pointwise engine ---------------------------------------------------------


def _as_rows(points, length: int) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if rows.shape[1] < length:
        raise ValueError(f"points need at least {length} coordinates")
    return rows


def tail_point(tail: BoundaryTail, length: int) -> np.ndarray:
    """The first ``length`` coordinates of the configuration ``tail`` itself."""
    return tail.values(0, length).astype(np.float64)


def word_points(depth: int, tail: BoundaryTail, length: int) -> np.ndarray:
    """Every depth-word completed by ``tail``, as coordinate rows."""
    return configurations(depth, tail, max(depth, length)).astype(np.float64)


def _log_ruelle(p: Potential, n: int, rows: np.ndarray, f: TabulatedFunction | None):
    """Per row: ``(shift, s)`` with ``L^n f(row) = exp(shift) * s``."""
    fdepth = 0 if f is None else f.depth
    K = p.K
    rows = _as_rows(rows, K + max(fdepth - n, 0))
    R = rows.shape[0]
    if n == 0:
        vals = np.ones(R) if f is None else f.evaluate_rows(rows)
        return np.zeros(R), vals
    fld, pair, cross, zlin = p.birkhoff_form(n)
    z = rows[:, :K]
    base = _core.quadratic_energies(fld, pair)  # energy at z = 0
    words = word_matrix(n).astype(np.float64)
    U = z @ cross.T  # (R, n)
    offset = z @ zlin
    if f is not None:
        size = 1 << n
        widx = np.arange(size, dtype=np.int64)
        extra = max(f.depth - n, 0)
        hi = pack(rows[:, :extra]) if extra else np.zeros(R, dtype=np.int64)
        lo_mask = (1 << min(f.depth, n)) - 1
    shift = np.empty(R)
    sums = np.empty(R)
    step = max(1, _CHUNK >> n)
    for s in range(0, R, step):
        e = base[None, :] + U[s : s + step] @ words.T  # (chunk, 2^n)
        top = np.max(e, axis=1)
        w = np.exp(e - top[:, None])
        if f is not None:
            idx = (widx[None, :] & lo_mask) | (hi[s : s + step, None] << n)
            w *= f.values[idx]
        shift[s : s + step] = top + offset[s : s + step]
        sums[s : s + step] = np.sum(w, axis=1)
    return shift, sums


def ruelle_power(p: Potential, n: int, points, f: TabulatedFunction | None = None) -> np.ndarray:
    """``L^n f`` at each coordinate row of ``points`` (``f = 1`` when omitted)."""
    shift, sums = _log_ruelle(p, n, points, f)
    return np.exp(shift) * sums


def log_ruelle_one(p: Potential, n: int, points) -> np.ndarray:
    """``log L^n(1)`` at each row of ``points``."""
    shift, sums = _log_ruelle(p, n, points, None)
    return shift + np.log(sums)


def apply_pointwise(p: Potential, fn: Callable[[np.ndarray], np.ndarray], points) -> np.ndarray:
    """``(L fn)`` at each row, for ``fn`` acting on coordinate rows."""
    rows = _as_rows(points, p.support - 1)
    out = np.zeros(rows.shape[0])
    for a in (1.0, -1.0):
        ax = np.concatenate([np.full((rows.shape[0], 1), a), rows], axis=1)
        out += np.exp(p.eval_rows(ax[:, : p.support])) * fn(ax)
    return out


# -- product-type eigenpair -----------------------------------------------------


def product_alphas(p: Potential) -> np.ndarray:
    """``alpha_n = sum_{j>n} c_j`` for ``n = 0..K`` (``alpha_K = 0``)."""
    c = np.concatenate([[0.0], p.c])
    return np.array([math.fsum(c[n + 1 :]) for n in range(p.K + 1)])


def product_eigenpair(p: Potential):
    """``(lambda, phi)`` with ``phi(x) = exp(sum_i alpha_{i+1} x_i)`` and ``lambda = 2cosh(h + alpha_0)``."""
    if p.kind is not Kind.PRODUCT:
        raise ValueError("explicit eigenpair needs a product-type potential")
    alphas = product_alphas(p)
    lam = 2.0 * math.cosh(p.hf + alphas[0])
    weights = alphas[1:]

    def phi(rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        return np.exp(rows[:, : p.K] @ weights)

    return lam, phi


def eigen_defect(p: Potential, phi, lam: float, points) -> float:
    """``sup |L phi - lambda phi| / sup |phi|`` over the given rows."""
    rows = _as_rows(points, p.K)
    lphi = apply_pointwise(p, phi, rows)
    vals = phi(rows)
    return float(np.max(np.abs(lphi - lam * vals)) / np.max(np.abs(vals)))


# -- power iteration ------------------------------------------------------------


@dataclass
class SpectralEstimate:
    lam: float
    iterations: int
    residual: float
    ratio_sequence: list
    tail_bound: float
    depth: int
    normalization: str = "plus"

    @property
    def pressure(self) -> float:
        return math.log(self.lam)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "pressure": self.pressure,
            "n_iters": self.iterations,
            "residual": self.residual,
            "ratio_sequence": list(self.ratio_sequence),
            "tail_bound": self.tail_bound,
        }


def _normalization_tail(z0) -> BoundaryTail:
    if isinstance(z0, BoundaryTail):
        return z0
    if z0 in ("plus", "+", 1):
        return BoundaryTail.plus()
    if z0 in ("minus", "-", -1):
        return BoundaryTail.minus()
    raise ValueError("normalization point must be AllPlus or AllMinus")


def power_iterate(
    p: Potential,
    n_iters: int,
    z0="plus",
    depth: int = 10,
    completion: BoundaryTail | None = None,
):
    """Iterate ``L`` from ``1``, normalizing at ``z0``.

    Returns ``(SpectralEstimate, z_n)`` where ``z_n = L^n(1) / L^n(1)(z0)`` is
    tabulated on depth-``depth`` words completed by ``completion`` (default +1).
    The eigenvalue estimate is the last ratio ``L^{n+1}(1)(z0) / L^n(1)(z0)``; the
    residual is ``sup |L z_n - lambda z_n| / sup z_n`` over the table.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    if n_iters > MAX_ITERS:
        raise DepthCapError("iteration count above cap")
    if depth > DEPTH_CAP:
        raise DepthCapError("depth cap exceeded; increase cap or lower K")
    tail = _normalization_tail(z0)
    completion = BoundaryTail.plus() if completion is None else completion
    point = tail_point(tail, p.K)[None, :]
    logs = [float(log_ruelle_one(p, k, point)[0]) for k in range(n_iters + 2)]
    ratios = [math.exp(logs[k + 1] - logs[k]) for k in range(n_iters + 1)]
    lam = ratios[n_iters]

    rows = word_points(depth, completion, p.K)
    log_n = log_ruelle_one(p, n_iters, rows)
    log_next = log_ruelle_one(p, n_iters + 1, rows)
    z = np.exp(log_n - logs[n_iters])
    lz = np.exp(log_next - logs[n_iters])
    residual = float(np.max(np.abs(lz - lam * z)) / np.max(z))
    est = SpectralEstimate(lam, n_iters, residual, ratios[1:], p.tail_bound(), depth, tail.label())
    return est, TabulatedFunction(depth, z, completion)


def export_zn_csv(z: TabulatedFunction, path, extra: dict | None = None) -> None:
    """Rows ``(t, z_value, *extra)`` sorted by the binary-expansion embedding ``t``."""
    t = embedding(z.depth)
    order = np.argsort(t, kind="stable")
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["t", "z_value", *extra])
        for k in order:
            w.writerow([format(float(t[k]), ".17g"), format(float(z.values[k]), ".17g"),
                        *(format(float(v[k]), ".17g") for v in extra.values())])


def export_eigen_json(est: SpectralEstimate, path) -> None:
    with open(path, "w") as fh:
        json.dump(est.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


# -- monotone quotients and Cesaro measures -------------------------------------


def quotient_sequence(p: Potential, f: TabulatedFunction, n_max: int):
    """``Q_n^{+-} = L^n(f)(+-1^inf) / L^n(1)(+-1^inf)`` for ``n = 1..n_max``."""
    if not is_increasing(f):
        raise ValueError("quotient sequence requires increasing f")
    length = p.K + f.depth
    out = {}
    for label, tail in (("plus", BoundaryTail.plus()), ("minus", BoundaryTail.minus())):
        pt = tail_point(tail, length)[None, :]
        seq = []
        for n in range(1, n_max + 1):
            s_f, v_f = _log_ruelle(p, n, pt, f)
            s_1, v_1 = _log_ruelle(p, n, pt, None)
            seq.append(float(math.exp(s_f[0] - s_1[0]) * v_f[0] / v_1[0]))
        out[label] = seq
    return out["plus"], out["minus"]


@dataclass
class CesaroMeasure:
    sign: int
    depth: int
    values: dict  # frozenset B -> Cesaro average of lambda^{-j} L^j(phi_B)(+-1^inf)
    n_iters: int
    burn_in: int
    lam: float
    stability: dict = field(default_factory=dict)  # B -> relative spread over last quartile

    def normalized(self) -> dict:
        total = self.values[frozenset()] if frozenset() in self.values else None
        if not total:
            raise ValueError("normalization needs the empty cylinder in the family")
        return {B: v / total for B, v in self.values.items()}


def cesaro_measure(
    p: Potential,
    sign: int,
    n_iters: int,
    family: Iterable[Iterable[int]],
    lam: float | None = None,
) -> CesaroMeasure:
    """Averages of ``lambda^{-j} L^j(phi_B)`` at ``sign * 1^inf`` over ``burn_in <= j < n_iters``.

    ``burn_in`` is the largest support depth in the family, so every term sees
    the cylinder through free preimage coordinates.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    family = [frozenset(B) for B in family]
    depth = max((max(B) + 1 for B in family if B), default=0)
    burn = depth
    if n_iters <= burn:
        raise ValueError("n_iters must exceed the largest cylinder depth")
    if lam is None:
        lam = power_iterate(p, min(n_iters, 12), "plus", depth=1)[0].lam
    tail = BoundaryTail.plus() if sign == 1 else BoundaryTail.minus()
    pt = tail_point(tail, p.K + depth)[None, :]
    values, stability = {}, {}
    for B in family:
        f = phi_table(B)
        terms = []
        for j in range(burn, n_iters):
            s, v = _log_ruelle(p, j, pt, f)
            terms.append(math.exp(s[0] - j * math.log(lam)) * v[0])
        running = np.cumsum(terms) / np.arange(1, len(terms) + 1)
        values[B] = float(running[-1])
        tail_part = running[len(running) - max(1, len(running) // 4):]
        scale = abs(running[-1]) or 1.0
        stability[B] = float((np.max(tail_part) - np.min(tail_part)) / scale)
    return CesaroMeasure(sign, depth, values, n_iters, burn, lam, stability)


# -- uniqueness and symmetry diagnostics ----------------------------------------


@dataclass
class UniquenessReport:
    n: int
    sites: tuple
    gaps: np.ndarray
    all_gaps: np.ndarray  # every site of the volume

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gaps))


def uniqueness_diagnostic(p: Potential, n: int, sites: Sequence[int] = (0, 1, 2), threads: int = 1) -> UniquenessReport:
    """Magnetization gaps ``m_i^+ - m_i^-`` at volume ``n``.

    The order-parameter proxy is the maximum over the fixed ``sites``; sites
    next to the boundary feel it most, so a maximum over the whole volume would
    not shrink with ``n``.
    """
    if not (p.is_ising and class_E_check_ising(p)):
        raise ValueError("uniqueness diagnostic needs a class-E certified potential")
    mp = magnetizations(build_measure(p, n, BoundaryTail.plus(), threads))
    mm = magnetizations(build_measure(p, n, BoundaryTail.minus(), threads))
    gaps = mp - mm
    chosen = tuple(i for i in sites if i < n)
    return UniquenessReport(n, chosen, gaps[list(chosen)], gaps)


def mirrored_symmetry_check(p: Potential, n: int, depth: int = 10) -> float:
    """``sup |L^n(1)(x) - L^n(1)(-x)| / sup L^n(1)`` over depth-``depth`` words (tail +1)."""
    if not is_mirrored(p, min(depth, DEPTH_CAP)):
        raise ValueError("potential is not mirrored")
    length = p.K
    plus = word_points(depth, BoundaryTail.plus(), length)
    vals = ruelle_power(p, n, plus)
    flipped = ruelle_power(p, n, -plus)
    return float(np.max(np.abs(vals - flipped)) / np.max(np.abs(vals)))


def finite_volume_duality(p: Potential, n: int, y: BoundaryTail, f: TabulatedFunction, cap: int = DEPTH_CAP) -> float:
    """``L^n(f)(sigma^n y) / L^n(1)(sigma^n y) - E[f; mu_n^y]`` via the table engine."""
    lf = transfer_power(p, f, n, cap)
    l1 = transfer_power(p, TabulatedFunction.constant(1.0), n, cap)
    shifted = y.values(n, n + max(lf.depth, l1.depth))[None, :]
    return float(lf.evaluate_rows(shifted)[0] / l1.evaluate_rows(shifted)[0]) - expect(build_measure(p, n, y), f)
