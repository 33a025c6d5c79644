"""Potentials on {-1,+1}^N: Ising-type (Dyson), product-type and the binary model.

All potentials are truncated after ``K`` couplings and carry the inverse
temperature as a multiplicative factor, so a :class:`Potential` evaluates
``beta * A``.

Ising-type::

    A(x) = h s x_0 + s^2 x_0 * sum_{j=1..K} a_j x_j

Product-type (coupling ``a_j`` sits on coordinate ``x_{j-1}``)::

    A(x) = h s x_0 + s * sum_{j=1..K} a_j x_{j-1}

Binary: Ising-type with ``a_j = 2^{1-j}`` and spin scale ``s = 1/2``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .space import (
    BoundaryTail,
    SpinWord,
    TabulatedFunction,
    concat,
    configurations,
    increasing_violation,
    word_matrix,
)

DEFAULT_K = 64


class Kind(str, enum.Enum):
    ISING = "ising"
    PRODUCT = "product"
    BINARY = "binary"


class Rule(str, enum.Enum):
    POWER_LAW = "power_law"
    GEOMETRIC = "geometric"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class Couplings:
    """Rule ``j -> a_j`` for ``j >= 1``."""

    rule: Rule
    gamma: float | None = None
    lam: float | None = None
    explicit: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.rule is Rule.POWER_LAW:
            if self.gamma is None or not self.gamma > 1:
                raise ValueError("power-law couplings need gamma > 1")
        elif self.rule is Rule.GEOMETRIC:
            if self.lam is None or not 0 < self.lam < 1:
                raise ValueError("geometric couplings need 0 < lambda < 1")
        else:
            object.__setattr__(self, "explicit", tuple(self.explicit))
            if not self.explicit:
                raise ValueError("explicit couplings need at least one value")

    @classmethod
    def power_law(cls, gamma: float) -> "Couplings":
        return cls(Rule.POWER_LAW, gamma=float(gamma))

    @classmethod
    def geometric(cls, lam: float) -> "Couplings":
        return cls(Rule.GEOMETRIC, lam=float(lam))

    @classmethod
    def of(cls, values: Sequence) -> "Couplings":
        return cls(Rule.EXPLICIT, explicit=tuple(values))

    def values(self, K: int) -> np.ndarray:
        """``(a_1, ..., a_K)``; explicit lists are zero-padded or cut."""
        j = np.arange(1, K + 1, dtype=np.float64)
        if self.rule is Rule.POWER_LAW:
            return j ** (-self.gamma)
        if self.rule is Rule.GEOMETRIC:
            return self.lam ** j
        out = np.zeros(K)
        vals = [float(v) for v in self.explicit[:K]]
        out[: len(vals)] = vals
        return out

    def tail_bound(self, K: int) -> float:
        """Upper bound on ``sum_{j>K} |a_j|``."""
        if self.rule is Rule.POWER_LAW:
            return K ** (1.0 - self.gamma) / (self.gamma - 1.0)
        if self.rule is Rule.GEOMETRIC:
            return self.lam ** (K + 1) / (1.0 - self.lam)
        return float(sum(abs(float(v)) for v in self.explicit[K:]))

    def to_dict(self) -> dict:
        if self.rule is Rule.POWER_LAW:
            params = {"gamma": self.gamma}
        elif self.rule is Rule.GEOMETRIC:
            params = {"lambda": self.lam}
        else:
            params = {"values": [_encode_number(v) for v in self.explicit]}
        return {"rule": self.rule.value, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "Couplings":
        rule = Rule(d["rule"])
        params = d.get("params", {})
        if rule is Rule.POWER_LAW:
            return cls.power_law(params["gamma"])
        if rule is Rule.GEOMETRIC:
            return cls.geometric(params["lambda"])
        return cls.of([_decode_number(v) for v in params["values"]])


def _encode_number(v):
    # rationals serialize as "p/q" strings so they round-trip exactly
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return float(v)


def _decode_number(v):
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


@dataclass(frozen=True)
class CouplingSpec:
    kind: Kind = Kind.ISING
    h: float = 0.0
    beta: float = 1.0
    couplings: Couplings = field(default_factory=lambda: Couplings.power_law(2.0))
    K: int = DEFAULT_K
    spin_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.K < 1:
            raise ValueError("truncation K must be at least 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.kind is Kind.BINARY:
            object.__setattr__(self, "couplings", Couplings.geometric(0.5))
            object.__setattr__(self, "spin_scale", 0.5)
        elif self.spin_scale not in (1.0, 0.5):
            raise ValueError("spin scale must be 1 or 1/2")

    def coupling_values(self) -> np.ndarray:
        a = self.couplings.values(self.K)
        if self.kind is Kind.BINARY:
            a = 2.0 * a  # a_j = 2^{1-j}
        return a

    def tail_bound(self) -> float:
        scale = 2.0 if self.kind is Kind.BINARY else 1.0
        return self.beta * scale * self.couplings.tail_bound(self.K)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "h": self.h,
            "beta": self.beta,
            "couplings": self.couplings.to_dict(),
            "truncation_K": self.K,
            "spin_scale": self.spin_scale,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingSpec":
        return cls(
            kind=Kind(d.get("kind", "ising")),
            h=float(d.get("h", 0.0)),
            beta=float(d.get("beta", 1.0)),
            couplings=Couplings.from_dict(d["couplings"]) if "couplings" in d else Couplings.geometric(0.5),
            K=int(d.get("truncation_K", DEFAULT_K)),
            spin_scale=float(d.get("spin_scale", 1.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "CouplingSpec":
        return cls.from_dict(json.loads(text))


class Potential:
    """Evaluation of ``beta * A`` for a :class:`CouplingSpec`.

    Couplings are scaled once: ``c_j = beta * s^2 * a_j`` (Ising/binary) or
    ``beta * s * a_j`` (product), and the field becomes ``beta * s * h``.
    """

    def __init__(self, spec: CouplingSpec):
        self.spec = spec
        s = spec.spin_scale
        a = spec.coupling_values()
        if spec.kind is Kind.PRODUCT:
            self.c = spec.beta * s * a
        else:
            self.c = spec.beta * s * s * a
        self.c.setflags(write=False)
        self.hf = spec.beta * s * spec.h

    def __repr__(self):
        return f"Potential({self.spec!r})"

    @property
    def kind(self) -> Kind:
        return self.spec.kind

    @property
    def K(self) -> int:
        return self.spec.K

    @property
    def is_ising(self) -> bool:
        return self.spec.kind in (Kind.ISING, Kind.BINARY)

    @property
    def support(self) -> int:
        """Number of leading coordinates ``A`` depends on."""
        return self.K + 1 if self.is_ising else self.K

    def tail_bound(self) -> float:
        return self.spec.tail_bound()

    @cached_property
    def coupling_sum(self) -> float:
        return math.fsum(self.c)

    # -- pointwise evaluation ------------------------------------------------

    def eval(self, x, tail: BoundaryTail | None = None) -> float:
        """``A`` at ``x`` (a word completed by ``tail``, or a coordinate array).

        Arrays may hold real values; this is the natural differentiable extension.
        """
        coords = self._coords(x, tail, self.support)
        return float(self.eval_rows(coords[None, :])[0])

    def eval_rows(self, rows: np.ndarray) -> np.ndarray:
        """Vectorized ``A`` over rows holding at least ``support`` coordinates."""
        rows = np.asarray(rows, dtype=np.float64)
        x0 = rows[:, 0]
        if self.is_ising:
            return self.hf * x0 + x0 * (rows[:, 1 : self.K + 1] @ self.c)
        return self.hf * x0 + rows[:, : self.K] @ self.c

    def birkhoff_sum(self, x, tail: BoundaryTail | None = None, n: int | None = None) -> float:
        """``S_n(A)([x|y]_n) = sum_{k<n} A(sigma^k [x|y]_n)`` by direct shifting."""
        if isinstance(x, SpinWord):
            n = x.n if n is None else n
        else:
            x = np.asarray(x, dtype=np.float64)
            n = x.size if n is None else n
        if n < 1:
            raise ValueError("Birkhoff sums need n >= 1")
        coords = self._coords(x, tail, n + self.support)
        shifts = np.stack([coords[k : k + self.support] for k in range(n)])
        return math.fsum(self.eval_rows(shifts))

    @staticmethod
    def _coords(x, tail, length):
        tail = BoundaryTail.plus() if tail is None else tail
        if isinstance(x, SpinWord):
            return concat(x, tail, length).astype(np.float64)
        x = np.asarray(x, dtype=np.float64)
        if x.size >= length:
            return x[:length]
        return np.concatenate([x, tail.values(x.size, length).astype(np.float64)])

    # -- Birkhoff-sum quadratic form -----------------------------------------

    def birkhoff_form(self, n: int):
        """Coefficients of ``S_n(A)([w|z]_n)`` as a function of ``w`` (n sites) and ``z``.

        ``z`` holds the coordinates at positions ``n, ..., n + K - 1``. Returns
        ``(field, pair, cross, zlin)`` with::

            S_n = field.w + sum_{i<j} pair[j-i] w_i w_j + w.(cross @ z) + zlin.z
        """
        K = self.K
        c = np.concatenate([[0.0], self.c])  # c[j] = c_j, j=0..K
        field = np.full(n, self.hf)
        pair = np.zeros(n)
        cross = np.zeros((n, K))
        zlin = np.zeros(K)
        if self.is_ising:
            d = np.arange(1, min(n, K + 1))
            pair[d] = c[d]
            k = np.arange(n)[:, None]
            l = np.arange(K)[None, :]
            dist = n + l - k
            cross = np.where(dist <= K, c[np.minimum(dist, K)], 0.0)
        else:
            cs = np.cumsum(c)  # cs[m] = c_1 + ... + c_m
            p = np.arange(n)
            field = field + cs[np.minimum(p + 1, K)]
            l = np.arange(K)
            hi = np.minimum(n + l + 1, K)
            lo = l + 1  # sum over j = l+2 .. hi
            zlin = np.where(hi > lo, cs[hi] - cs[np.minimum(lo, K)], 0.0)
        return field, pair, cross, zlin

    def flipped(self) -> "Potential":
        """``x -> A(-x)`` is the same family with the field (and, for products, couplings) negated."""
        spec = self.spec
        if self.is_ising:
            return Potential(CouplingSpec(spec.kind, -spec.h, spec.beta, spec.couplings, spec.K, spec.spin_scale))
        neg = Couplings.of([-v for v in spec.couplings.values(spec.K)])
        return Potential(CouplingSpec(spec.kind, -spec.h, spec.beta, neg, spec.K, spec.spin_scale))


# -- constructors ------------------------------------------------------------


def dyson(gamma: float, beta: float = 1.0, h: float = 0.0, K: int = DEFAULT_K) -> Potential:
    return Potential(CouplingSpec(Kind.ISING, h, beta, Couplings.power_law(gamma), K))


def ising(couplings, beta: float = 1.0, h: float = 0.0, K: int | None = None) -> Potential:
    if not isinstance(couplings, Couplings):
        couplings = Couplings.of(couplings)
        K = len(couplings.explicit) if K is None else K
    return Potential(CouplingSpec(Kind.ISING, h, beta, couplings, DEFAULT_K if K is None else K))


def product(couplings, beta: float = 1.0, h: float = 0.0, K: int | None = None) -> Potential:
    if not isinstance(couplings, Couplings):
        couplings = Couplings.of(couplings)
        K = len(couplings.explicit) if K is None else K
    return Potential(CouplingSpec(Kind.PRODUCT, h, beta, couplings, DEFAULT_K if K is None else K))


def product_power(gamma: float, beta: float = 1.0, K: int = DEFAULT_K) -> Potential:
    return product(Couplings.power_law(gamma), beta=beta, K=K)


def binary(K: int = DEFAULT_K) -> Potential:
    return Potential(CouplingSpec(Kind.BINARY, K=K))


def zero(K: int = 1) -> Potential:
    return ising([0.0] * K)


# -- class membership checks -------------------------------------------------


class ClassCheckError(ValueError):
    pass


def class_E_check_ising(p: Potential) -> bool:
    """Sufficient class-E test: all retained couplings non-negative.

    For Ising-type potentials ``d/dt S_n(A)([x|t|y]_n) = sum_k c_{n-k} x_k`` is
    linear in ``x``, hence increasing iff every coefficient is non-negative.
    """
    if not p.is_ising:
        raise ClassCheckError("class E check defined for Ising-type only")
    return bool(np.all(p.c >= 0))


def class_E_witness(p: Potential, n: int):
    """Brute-force search for ``x <= x'`` (one flip) with the t-derivative decreasing.

    Differentiates ``S_n(A)([x|t|y]_n)`` numerically at ``t = 0`` with tail +1.
    Returns ``(lo_index, hi_index)`` or ``None``.
    """
    y = BoundaryTail.plus()
    eps = 1e-6
    deriv = []
    for w in word_matrix(n):
        base = np.concatenate([w.astype(np.float64), [0.0], y.values(n + 1, n + 1 + p.support).astype(np.float64)])
        up, down = base.copy(), base.copy()
        up[n], down[n] = eps, -eps
        deriv.append((p.birkhoff_sum(up, n=n) - p.birkhoff_sum(down, n=n)) / (2 * eps))
    return increasing_violation(TabulatedFunction(n, np.array(deriv)), atol=1e-9)


@dataclass(frozen=True)
class ClassFResult:
    member: bool
    depth: int
    witness: tuple | None = None  # (function name, lower word, upper word)

    def __bool__(self):
        return self.member


def class_F_check(p: Potential, m: int) -> ClassFResult:
    """Check ``L(1)`` and ``L(1_[x_0=+1])`` are increasing on depth-``m`` words (tail +1).

    This is a finite-depth surrogate: passing is evidence at depth ``m`` only.
    """
    if not 1 <= m <= 20:
        raise ValueError("depth must satisfy 1 <= m <= 20")
    rows = configurations(m, BoundaryTail.plus(), max(p.support - 1, m))
    n = rows.shape[0]
    plus = np.concatenate([np.ones((n, 1), dtype=np.int8), rows], axis=1)
    minus = np.concatenate([-np.ones((n, 1), dtype=np.int8), rows], axis=1)
    ep = np.exp(p.eval_rows(plus[:, : p.support]))
    em = np.exp(p.eval_rows(minus[:, : p.support]))
    for name, vals in (("L(1)", ep + em), ("L(1_[1])", ep)):
        bad = increasing_violation(TabulatedFunction(m, vals), atol=1e-12 * float(np.max(np.abs(vals))))
        if bad is not None:
            lo, hi = bad
            return ClassFResult(False, m, (name, str(SpinWord.from_index(lo, m)), str(SpinWord.from_index(hi, m))))
    return ClassFResult(True, m)


@dataclass(frozen=True)
class MirrorResult:
    mirrored: bool
    witness: tuple | None = None

    def __bool__(self):
        return self.mirrored


def is_mirrored(p: Potential, m: int, atol: float = 1e-12) -> MirrorResult:
    """``A(x) == A(-x)`` on every depth-``m`` word completed by +1 (and the flip by -1)."""
    if m > 20:
        raise ValueError("depth must be at most 20")
    length = max(p.support, m)
    for tail in (BoundaryTail.plus(), BoundaryTail.minus()):
        rows = configurations(m, tail, length)
        a = p.eval_rows(rows[:, : p.support])
        b = p.eval_rows(-rows[:, : p.support])
        bad = np.nonzero(np.abs(a - b) > atol * max(1.0, float(np.max(np.abs(a)))))[0]
        if bad.size:
            return MirrorResult(False, (str(SpinWord.from_index(int(bad[0]), m)), tail.label()))
    return MirrorResult(True)


def dual_product_potential(spec: CouplingSpec) -> Potential:
    """Dual of a product-type potential under the kernel ``sum_i (x_i + y_i) alpha_i``: itself."""
    if spec.kind is not Kind.PRODUCT:
        raise ClassCheckError("dual not implemented")
    return Potential(spec)
