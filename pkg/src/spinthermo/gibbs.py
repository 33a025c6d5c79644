"""Exact finite-volume Gibbs measures by enumeration of all 2^n words.

``mu_n^y`` puts weight ``exp(S_n(A)([x|y]_n)) / Z_n^y`` on each word ``x`` of
length ``n``; everything here is an exact finite sum.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _core
from .potential import Potential, class_E_check_ising, dyson, ising
from .space import (
    BoundaryTail,
    SpinWord,
    TabulatedFunction,
    enumerate_monotone_indicators,
    is_increasing,
    pack,
    phi_table,
)

MAX_VOLUME = 24


class VolumeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteVolumeMeasure:
    n: int
    boundary: BoundaryTail
    potential: Potential
    log_weights: np.ndarray  # unnormalized S_n(A)([x|y]_n), ascending word index
    log_Z: float
    weights: np.ndarray = field(repr=False)  # normalized

    @property
    def Z(self) -> float:
        try:
            return math.exp(self.log_Z)
        except OverflowError:
            return math.inf

    def word(self, index: int) -> SpinWord:
        return SpinWord.from_index(index, self.n)


def _logsumexp(v: np.ndarray) -> float:
    top = float(np.max(v))
    return top + math.log(float(np.sum(np.exp(v - top))))


def log_weights(p: Potential, n: int, y: BoundaryTail, threads: int = 1) -> np.ndarray:
    """``S_n(A)([x|y]_n)`` for all ``2**n`` words ``x``."""
    fld, pair, cross, zlin = p.birkhoff_form(n)
    z = y.values(n, n + p.K).astype(np.float64)
    energies = _core.quadratic_energies(fld + cross @ z, pair, threads=threads)
    energies += float(zlin @ z)
    return energies


def build_measure(p: Potential, n: int, y: BoundaryTail | None = None, threads: int = 1) -> FiniteVolumeMeasure:
    if not 1 <= n <= MAX_VOLUME:
        raise VolumeError("volume too large for exact enumeration")
    y = BoundaryTail.plus() if y is None else y
    lw = log_weights(p, n, y, threads)
    log_Z = _logsumexp(lw)
    w = np.exp(lw - float(np.max(lw)))
    w /= np.sum(w)
    lw.setflags(write=False)
    w.setflags(write=False)
    return FiniteVolumeMeasure(n, y, p, lw, log_Z, w)


def _values_on_words(m: FiniteVolumeMeasure, f) -> np.ndarray:
    """Values of ``f`` at ``[x|y]_n`` for every word, in measure order."""
    if isinstance(f, TabulatedFunction):
        size = 1 << m.n
        idx = np.arange(size, dtype=np.int64)
        if f.depth <= m.n:
            return f.values[idx & ((1 << f.depth) - 1)]
        tail_bits = int(pack(m.boundary.values(m.n, f.depth)[None, :])[0])
        return f.values[idx | (tail_bits << m.n)]
    vals = np.asarray(f, dtype=np.float64)
    if vals.shape != (1 << m.n,):
        raise ValueError("array-valued f must hold one value per word")
    return vals


def expect(m: FiniteVolumeMeasure, f) -> float:
    return float(np.sum(m.weights * _values_on_words(m, f)))


def fkg_covariance(m: FiniteVolumeMeasure, f, g) -> float:
    fv = _values_on_words(m, f)
    gv = _values_on_words(m, g)
    return float(np.sum(m.weights * fv * gv)) - float(np.sum(m.weights * fv)) * float(np.sum(m.weights * gv))


def covariance_matrix(m: FiniteVolumeMeasure, functions: Sequence) -> np.ndarray:
    """All pairwise covariances of ``functions`` under ``m``."""
    F = np.stack([_values_on_words(m, f) for f in functions])
    mean = F @ m.weights
    centred = F - mean[:, None]
    return (centred * m.weights) @ centred.T


def magnetization(m: FiniteVolumeMeasure, i: int) -> float:
    if not 0 <= i < m.n:
        raise ValueError("site index must be inside the volume")
    return expect(m, TabulatedFunction.coordinate(i, m.n))


def magnetizations(m: FiniteVolumeMeasure) -> np.ndarray:
    idx = np.arange(1 << m.n, dtype=np.int64)
    spins = 2.0 * ((idx[None, :] >> np.arange(m.n)[:, None]) & 1) - 1.0
    return spins @ m.weights


def export_csv(m: FiniteVolumeMeasure, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["index", "word", "log_weight", "weight_normalized"])
        for k in range(1 << m.n):
            w.writerow([k, str(SpinWord.from_index(k, m.n)), repr(float(m.log_weights[k])), repr(float(m.weights[k]))])


# -- structural identities --------------------------------------------------


def hamiltonian(p: Potential, n: int, x: SpinWord, y: BoundaryTail) -> float:
    """``H_n = sum_{i<j<n} J_ij x_i x_j + h sum x_i + sum_{i<n<=j} J_ij x_i y_j`` with ``J_ij = c_{|i-j|}``.

    Independent double sum over sites; only valid for Ising-type potentials.
    """
    if not p.is_ising:
        raise ValueError("Hamiltonian form needs an Ising-type potential")
    if x.n != n:
        raise ValueError("word length must equal the volume")
    K = p.K
    c = p.c
    xs = x.spins
    total = [p.hf * s for s in xs]
    for i in range(n):
        for j in range(i + 1, min(n, i + K + 1)):
            total.append(c[j - i - 1] * xs[i] * xs[j])
        for j in range(n, i + K + 1):
            total.append(c[j - i - 1] * xs[i] * y.at(j))
    return math.fsum(total)


def hamiltonian_equivalence(p: Potential, n: int, x: SpinWord, y: BoundaryTail) -> float:
    """``H_n(x, y) - S_n(A)([x|y]_n)``; zero up to rounding."""
    return hamiltonian(p, n, x, y) - p.birkhoff_sum(x, y)


def domination_chain(p: Potential, f: TabulatedFunction, n: int, tail: BoundaryTail | None = None) -> tuple:
    """``(E_{n-1}^-, E_n^-, E_n^tail, E_n^+, E_{n-1}^+)`` of an increasing ``f``; ordered for class E."""
    if n < 2:
        raise ValueError("domination chain needs n >= 2")
    if not is_increasing(f):
        raise ValueError("domination requires increasing f")
    tail = BoundaryTail.alternating() if tail is None else tail
    plus, minus = BoundaryTail.plus(), BoundaryTail.minus()
    return (
        expect(build_measure(p, n - 1, minus), f),
        expect(build_measure(p, n, minus), f),
        expect(build_measure(p, n, tail), f),
        expect(build_measure(p, n, plus), f),
        expect(build_measure(p, n - 1, plus), f),
    )


def _spliced(y: BoundaryTail, n: int, t: int, length: int) -> BoundaryTail:
    # the configuration [y|t|y]_n as a periodic word long enough for the potential
    vals = y.values(0, length).copy()
    vals[n] = t
    return BoundaryTail.periodic(tuple(int(v) for v in vals))


def decomposition_identity(p: Potential, n: int, y: BoundaryTail, f: TabulatedFunction) -> float:
    """Residual of ``sum_t lambda(t) E[f; mu_n^{[y|t|y]_n}] - E[f; mu_{n+1}^y]``.

    ``lambda(t)`` is the ``mu_{n+1}^y``-probability of ``x_n = t``, namely
    ``exp(A(t, y_{n+1}, ...)) Z_n^{[y|t|y]_n} / Z_{n+1}^y``.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    big = build_measure(p, n + 1, y)
    length = n + 2 * p.support + max(f.depth, 1) + 2
    total = []
    for t in (-1, 1):
        yt = _spliced(y, n, t, length)
        small = build_measure(p, n, yt)
        tail_a = p.eval(np.concatenate([[t], y.values(n + 1, n + p.support)]))
        total.append(math.exp(tail_a + small.log_Z - big.log_Z) * expect(small, f))
    return math.fsum(total) - expect(big, f)


# -- FKG verification suite -------------------------------------------------


@dataclass
class FKGRecord:
    label: str
    n: int
    boundary: str
    min_covariance: float
    witness: tuple | None  # (f index, g index) of the minimum


@dataclass
class FKGReport:
    records: list
    certified: bool  # class-E sufficient condition holds
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return all(r.min_covariance >= -self.tol for r in self.records)

    @property
    def status(self) -> str:
        if not self.passed:
            return "violated"
        return "class-E-certified" if self.certified else "empirical-FKG"

    def worst(self) -> FKGRecord:
        return min(self.records, key=lambda r: r.min_covariance)


def fkg_check(p: Potential, n: int, y: BoundaryTail, label: str = "") -> FKGRecord:
    fs = enumerate_monotone_indicators(n)
    cov = covariance_matrix(build_measure(p, n, y), fs)
    k = int(np.argmin(cov))
    i, j = divmod(k, cov.shape[0])
    return FKGRecord(label, n, y.label(), float(cov[i, j]), (i, j))


def fkg_suite(
    potentials: Iterable[tuple[str, Potential]],
    volumes: Iterable[int] = (1, 2, 3, 4),
    boundaries: Iterable[BoundaryTail] | None = None,
    tol: float = 1e-12,
) -> FKGReport:
    boundaries = list(boundaries or (BoundaryTail.plus(), BoundaryTail.minus(), BoundaryTail.alternating()))
    records = []
    certified = True
    for label, p in potentials:
        certified &= p.is_ising and class_E_check_ising(p)
        for n in volumes:
            for y in boundaries:
                records.append(fkg_check(p, n, y, label))
    return FKGReport(records, certified, tol)


def default_fkg_matrix(K: int = 64):
    """The Dyson test matrix plus one geometric ferromagnet."""
    out = []
    for gamma in (1.5, 1.88, 2.2):
        for beta in (0.5, 1.0, 2.0):
            out.append((f"dyson(gamma={gamma},beta={beta})", dyson(gamma, beta=beta, K=K)))
    from .potential import Couplings

    for beta in (0.5, 1.0, 2.0):
        out.append((f"geometric(lambda=0.5,beta={beta})", ising(Couplings.geometric(0.5), beta=beta, K=K)))
    return out


def anti_fkg_witness(p: Potential, max_n: int = 3):
    """First (n, boundary, f, g, covariance) with negative covariance of increasing f, g."""
    for n in range(1, max_n + 1):
        fs = enumerate_monotone_indicators(n)
        for y in (BoundaryTail.plus(), BoundaryTail.minus(), BoundaryTail.alternating()):
            cov = covariance_matrix(build_measure(p, n, y), fs)
            k = int(np.argmin(cov))
            i, j = divmod(k, cov.shape[0])
            if cov[i, j] < -1e-12:
                return n, y, fs[i], fs[j], float(cov[i, j])
    return None


def uniqueness_gaps(p: Potential, n: int, sites: Sequence[int] = (0, 1, 2)) -> np.ndarray:
    """``m_i^+ - m_i^-`` at volume ``n`` for the given sites."""
    mp = magnetizations(build_measure(p, n, BoundaryTail.plus()))
    mm = magnetizations(build_measure(p, n, BoundaryTail.minus()))
    sites = [i for i in sites if i < n]
    return mp[sites] - mm[sites]


__all__ = [
    "FiniteVolumeMeasure",
    "build_measure",
    "expect",
    "fkg_covariance",
    "covariance_matrix",
    "magnetization",
    "domination_chain",
    "hamiltonian_equivalence",
    "decomposition_identity",
    "phi_table",
]
