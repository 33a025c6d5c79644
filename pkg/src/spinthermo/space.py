"""Spin configurations in {-1,+1}^N, boundary tails, the coordinatewise order,
cylinder functions and monotone test functions.

Conventions used throughout the package:

* coordinates are 0-based, ``x = (x_0, x_1, ...)``;
* a word of length ``n`` is packed into an integer whose bit ``j`` is
  ``(x_j + 1) // 2``, and words are enumerated in ascending integer order
  (index 0 is the all-minus word).
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

MAX_MONOTONE_DEPTH = 4


class Order(enum.Enum):
    GEQ = "geq"
    LEQ = "leq"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def _check_spins(spins):
    for s in spins:
        if s not in (-1, 1):
            raise ValueError(f"spin values must be -1 or +1, got {s!r}")


@dataclass(frozen=True)
class SpinWord:
    """A finite prefix ``(x_0, ..., x_{n-1})`` of a configuration."""

    spins: tuple[int, ...]

    def __post_init__(self):
        spins = tuple(int(s) for s in self.spins)
        _check_spins(spins)
        object.__setattr__(self, "spins", spins)

    @classmethod
    def from_index(cls, index: int, n: int) -> "SpinWord":
        if not 0 <= index < (1 << n):
            raise ValueError(f"index {index} out of range for length {n}")
        return cls(tuple(2 * ((index >> j) & 1) - 1 for j in range(n)))

    @classmethod
    def parse(cls, text: str) -> "SpinWord":
        """Parse strings like ``"+-+"`` or ``"1,-1,1"``."""
        text = text.strip()
        if "," in text or " " in text:
            parts = [p for p in text.replace(",", " ").split() if p]
            return cls(tuple(int(p) for p in parts))
        table = {"+": 1, "-": -1}
        try:
            return cls(tuple(table[c] for c in text))
        except KeyError as exc:
            raise ValueError(f"cannot parse spin word {text!r}") from exc

    @property
    def n(self) -> int:
        return len(self.spins)

    def __len__(self):
        return len(self.spins)

    @property
    def index(self) -> int:
        return sum(1 << j for j, s in enumerate(self.spins) if s == 1)

    def flipped(self) -> "SpinWord":
        return SpinWord(tuple(-s for s in self.spins))

    def as_array(self) -> np.ndarray:
        return np.array(self.spins, dtype=np.int8)

    def __str__(self):
        return "".join("+" if s == 1 else "-" for s in self.spins)


def compare(a: SpinWord, b: SpinWord) -> Order:
    if a.n != b.n:
        raise ValueError("incomparable lengths")
    if a.spins == b.spins:
        return Order.EQUAL
    if all(s >= t for s, t in zip(a.spins, b.spins)):
        return Order.GEQ
    if all(s <= t for s, t in zip(a.spins, b.spins)):
        return Order.LEQ
    return Order.INCOMPARABLE


class TailKind(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    ALTERNATING = "alt"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class BoundaryTail:
    """An infinite configuration ``y`` used to complete finite words.

    ``at(j)`` gives ``y_j`` at the absolute coordinate ``j``; ``[x|y]_n`` uses
    ``y_n, y_{n+1}, ...``.
    """

    kind: TailKind = TailKind.PLUS
    sign: int = 1
    word: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", TailKind(self.kind))
        if self.sign not in (-1, 1):
            raise ValueError("alternating start sign must be -1 or +1")
        if self.kind is TailKind.PERIODIC:
            word = tuple(int(s) for s in self.word)
            if not word:
                raise ValueError("periodic tail needs a non-empty word")
            _check_spins(word)
            object.__setattr__(self, "word", word)

    @classmethod
    def plus(cls) -> "BoundaryTail":
        return cls(TailKind.PLUS)

    @classmethod
    def minus(cls) -> "BoundaryTail":
        return cls(TailKind.MINUS)

    @classmethod
    def alternating(cls, sign: int = 1) -> "BoundaryTail":
        return cls(TailKind.ALTERNATING, sign=sign)

    @classmethod
    def periodic(cls, word) -> "BoundaryTail":
        if isinstance(word, SpinWord):
            word = word.spins
        return cls(TailKind.PERIODIC, word=tuple(word))

    @classmethod
    def parse(cls, text: str) -> "BoundaryTail":
        """Parse ``plus``, ``minus``, ``alt``, ``alt:-`` or ``word:+-+``."""
        text = text.strip()
        if text in ("plus", "+"):
            return cls.plus()
        if text in ("minus", "-"):
            return cls.minus()
        if text in ("alt", "alt:+"):
            return cls.alternating(1)
        if text == "alt:-":
            return cls.alternating(-1)
        if text.startswith("word:"):
            return cls.periodic(SpinWord.parse(text[5:]))
        raise ValueError(f"unknown boundary {text!r}")

    def at(self, j: int) -> int:
        if j < 0:
            raise ValueError("coordinates are non-negative")
        if self.kind is TailKind.PLUS:
            return 1
        if self.kind is TailKind.MINUS:
            return -1
        if self.kind is TailKind.ALTERNATING:
            return self.sign * (-1) ** j
        return self.word[j % len(self.word)]

    def values(self, start: int, stop: int) -> np.ndarray:
        """``(y_start, ..., y_{stop-1})`` as an int8 array."""
        j = np.arange(start, stop)
        if self.kind is TailKind.PLUS:
            return np.ones(j.size, dtype=np.int8)
        if self.kind is TailKind.MINUS:
            return -np.ones(j.size, dtype=np.int8)
        if self.kind is TailKind.ALTERNATING:
            return (self.sign * (1 - 2 * (j % 2))).astype(np.int8)
        return np.asarray(self.word, dtype=np.int8)[j % len(self.word)]

    def flipped(self) -> "BoundaryTail":
        if self.kind is TailKind.PLUS:
            return BoundaryTail.minus()
        if self.kind is TailKind.MINUS:
            return BoundaryTail.plus()
        if self.kind is TailKind.ALTERNATING:
            return BoundaryTail.alternating(-self.sign)
        return BoundaryTail.periodic(tuple(-s for s in self.word))

    def label(self) -> str:
        if self.kind is TailKind.PERIODIC:
            return "word:" + "".join("+" if s == 1 else "-" for s in self.word)
        if self.kind is TailKind.ALTERNATING:
            return "alt" if self.sign == 1 else "alt:-"
        return self.kind.value


def concat(word, tail: BoundaryTail, length: int) -> np.ndarray:
    """First ``length`` coordinates of ``[x|y]_n`` where ``n = len(word)``."""
    spins = np.asarray(word.spins if isinstance(word, SpinWord) else word, dtype=np.int8)
    n = spins.size
    if length <= n:
        return spins[:length].copy()
    return np.concatenate([spins, tail.values(n, length)])


def word_matrix(n: int) -> np.ndarray:
    """All ``2**n`` words of length ``n`` as rows of an int8 matrix, ascending index order."""
    idx = np.arange(1 << n, dtype=np.int64)[:, None]
    return (2 * ((idx >> np.arange(n)) & 1) - 1).astype(np.int8)


def configurations(depth: int, tail: BoundaryTail, length: int) -> np.ndarray:
    """Rows ``[x|tail]_depth`` truncated to ``length`` coordinates, for every depth-word ``x``."""
    words = word_matrix(depth)
    if length <= depth:
        return words[:, :length]
    rest = np.broadcast_to(tail.values(depth, length), (words.shape[0], length - depth))
    return np.concatenate([words, rest], axis=1)


def pack(rows: np.ndarray) -> np.ndarray:
    """Index of each ±1 row under the bit-packing convention."""
    rows = np.asarray(rows)
    bits = (rows > 0).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(rows.shape[-1], dtype=np.int64))


def embedding(depth: int) -> np.ndarray:
    """Binary-expansion coordinate ``t = sum_j x_j 2^{-j-1}`` in [-1, 1] of each depth-word.

    This is the centre of the dyadic interval covered by the cylinder of the word.
    """
    if depth == 0:
        return np.zeros(1)
    words = word_matrix(depth).astype(np.float64)
    return words @ (0.5 ** np.arange(1, depth + 1))


@dataclass(frozen=True, eq=False)
class TabulatedFunction:
    """A function of the first ``depth`` coordinates stored as ``2**depth`` values.

    ``completion`` supplies coordinates when the function is evaluated on a word
    shorter than ``depth``.
    """

    depth: int
    values: np.ndarray
    completion: BoundaryTail = field(default_factory=BoundaryTail.plus)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (1 << self.depth,):
            raise ValueError(f"expected {1 << self.depth} values for depth {self.depth}, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, c: float, depth: int = 0) -> "TabulatedFunction":
        return cls(depth, np.full(1 << depth, float(c)))

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], float], depth: int) -> "TabulatedFunction":
        words = word_matrix(depth)
        return cls(depth, np.array([fn(w) for w in words], dtype=np.float64))

    @classmethod
    def coordinate(cls, i: int, depth: int | None = None) -> "TabulatedFunction":
        """The function ``x -> x_i``."""
        depth = i + 1 if depth is None else depth
        if i >= depth:
            raise ValueError("coordinate outside table depth")
        idx = np.arange(1 << depth)
        return cls(depth, 2.0 * ((idx >> i) & 1) - 1.0)

    def __call__(self, x, tail: BoundaryTail | None = None) -> float:
        """Evaluate at a word (completed by ``tail`` or the stored completion) or a ±1 array."""
        tail = self.completion if tail is None else tail
        if isinstance(x, SpinWord):
            coords = concat(x, tail, self.depth)
        else:
            coords = np.asarray(x)
            if coords.size < self.depth:
                coords = concat(coords, tail, self.depth)
        return float(self.values[int(pack(coords[: self.depth]))])

    def evaluate_rows(self, rows: np.ndarray) -> np.ndarray:
        """Evaluate on each row of a ±1 matrix with at least ``depth`` columns."""
        return self.values[pack(np.asarray(rows)[:, : self.depth])]

    def lift(self, depth: int) -> "TabulatedFunction":
        """Same function tabulated at a larger depth."""
        if depth < self.depth:
            raise ValueError("cannot lift to a smaller depth")
        idx = np.arange(1 << depth) & ((1 << self.depth) - 1)
        return TabulatedFunction(depth, self.values[idx], self.completion)

    def _binary(self, other, op):
        if not isinstance(other, TabulatedFunction):
            return TabulatedFunction(self.depth, op(self.values, float(other)), self.completion)
        depth = max(self.depth, other.depth)
        return TabulatedFunction(depth, op(self.lift(depth).values, other.lift(depth).values), self.completion)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return TabulatedFunction(self.depth, -self.values, self.completion)

    def allclose(self, other: "TabulatedFunction", rtol=1e-12, atol=0.0) -> bool:
        depth = max(self.depth, other.depth)
        return bool(np.allclose(self.lift(depth).values, other.lift(depth).values, rtol=rtol, atol=atol))

    def flipped(self) -> "TabulatedFunction":
        """``x -> f(-x)``."""
        idx = np.arange(1 << self.depth)
        return TabulatedFunction(self.depth, self.values[idx ^ ((1 << self.depth) - 1)], self.completion.flipped())


# --- cylinder functions ------------------------------------------------------


def _support(B: Iterable[int]) -> frozenset[int]:
    B = frozenset(int(i) for i in B)
    if any(i < 0 for i in B):
        raise ValueError("cylinder indices are non-negative")
    return B


def phi_B(B: Iterable[int], x, tail: BoundaryTail | None = None) -> float:
    """``prod_{i in B} (1 + x_i)/2``: 1 iff every site of ``B`` is +1; ``phi_{}`` is 1."""
    B = _support(B)
    if not B:
        return 1.0
    tail = BoundaryTail.plus() if tail is None else tail
    coords = concat(x, tail, max(B) + 1)
    return float(all(coords[i] == 1 for i in B))


def phi_table(B: Iterable[int], depth: int | None = None) -> TabulatedFunction:
    B = _support(B)
    need = max(B) + 1 if B else 0
    depth = need if depth is None else depth
    if depth < need:
        raise ValueError("table depth too small for support")
    mask = sum(1 << i for i in B)
    idx = np.arange(1 << depth)
    return TabulatedFunction(depth, ((idx & mask) == mask).astype(np.float64))


# --- monotonicity ------------------------------------------------------------


def increasing_violation(f: TabulatedFunction, atol: float = 0.0):
    """First covering pair ``(lo, hi)`` of indices with ``f(hi) < f(lo) - atol``, or ``None``.

    ``hi`` differs from ``lo`` by flipping one coordinate from -1 to +1; these
    flips generate the order, so no violation means ``f`` is increasing.
    """
    v = f.values
    idx = np.arange(v.size)
    for j in range(f.depth):
        lo = idx[(idx >> j) & 1 == 0]
        hi = lo | (1 << j)
        bad = np.nonzero(v[hi] < v[lo] - atol)[0]
        if bad.size:
            k = bad[0]
            return int(lo[k]), int(hi[k])
    return None


def is_increasing(f: TabulatedFunction, atol: float = 0.0) -> bool:
    return increasing_violation(f, atol) is None


def is_increasing_allpairs(f: TabulatedFunction) -> bool:
    """Definition check over every comparable pair; O(4**n), for cross-checking only."""
    n = 1 << f.depth
    for a in range(n):
        for b in range(n):
            if a & b == b and f.values[a] < f.values[b]:
                return False
    return True


def enumerate_monotone_indicators(n: int) -> list[TabulatedFunction]:
    """All increasing {0,1}-valued functions on {-1,+1}^n (Dedekind many), constants included."""
    if n > MAX_MONOTONE_DEPTH:
        raise ValueError("enumeration too large")
    if n < 0:
        raise ValueError("depth must be non-negative")
    size = 1 << n
    # an increasing indicator is determined by its up-set; grow candidates one
    # word at a time (ascending index) and prune as soon as a flip is violated
    candidates = [()]
    for a in range(size):
        below = [a ^ (1 << j) for j in range(n) if (a >> j) & 1]
        grown = []
        for c in candidates:
            lo = max((c[b] for b in below), default=0)
            for v in (0, 1):
                if v >= lo:
                    grown.append(c + (v,))
        candidates = grown
    return [TabulatedFunction(n, np.array(c, dtype=np.float64)) for c in candidates]


def dedekind_bruteforce(n: int) -> int:
    """Count increasing Boolean functions by exhausting all ``2**(2**n)`` tables."""
    size = 1 << n
    count = 0
    for table in itertools.product((0, 1), repeat=size):
        ok = True
        for a in range(size):
            for j in range(n):
                if not (a >> j) & 1 and table[a | (1 << j)] < table[a]:
                    ok = False
                    break
            if not ok:
                break
        count += ok
    return count
