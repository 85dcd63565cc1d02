"""Truncated exact Fourier expansions  F(Z) = sum_T a(T) e(tr(TZ)/M).

Indices T are half-integral positive semidefinite matrices.  Truncation is by
trace: an expansion with ``trace_bound`` B knows every coefficient with
trace(T) <= B (in the index units of its own M).  Trace is additive, so sums
and products are exact below the smaller bound.

Internally an index is the flattened upper triangle of 2T (row major), which
is hashed far faster than a nested tuple; ``HalfIntMatrix`` is the public face.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import IncompatibleShapes, NonPositiveY, TruncationExceeded
from .matrices import (HalfIntMatrix, UnimodularMatrix, definiteness, gram_transform,
                       is_positive_definite, INDEFINITE)

Coeff = int | Fraction
Key = tuple[int, ...]


@dataclass(frozen=True, slots=True, order=True)
class HalfWeight:
    twice_k: int

    @classmethod
    def of(cls, k) -> HalfWeight:
        twice = 2 * Fraction(k)
        if twice.denominator != 1:
            raise ValueError(f"weight {k} is not in (1/2)Z")
        return cls(int(twice))

    @property
    def k(self) -> Fraction:
        return Fraction(self.twice_k, 2)

    def __add__(self, other: HalfWeight) -> HalfWeight:
        return HalfWeight(self.twice_k + other.twice_k)

    def __sub__(self, other: HalfWeight) -> HalfWeight:
        return HalfWeight(self.twice_k - other.twice_k)

    def __str__(self) -> str:
        k = self.k
        return str(k.numerator) if k.denominator == 1 else f"{k.numerator}/{k.denominator}"


def _norm(c) -> Coeff:
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, (int, np.integer)):
        return int(c)
    return _norm(Fraction(c))


# --- key helpers -----------------------------------------------------------

def _diag_positions(n: int) -> tuple[int, ...]:
    pos, out = 0, []
    for i in range(n):
        out.append(pos)
        pos += n - i
    return tuple(out)


def key_of(t: HalfIntMatrix) -> Key:
    d = t.doubled
    n = len(d)
    return tuple(d[i][j] for i in range(n) for j in range(i, n))


def matrix_of(key: Key, n: int) -> HalfIntMatrix:
    rows = [[0] * n for _ in range(n)]
    it = iter(key)
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = next(it)
    return HalfIntMatrix._trusted(tuple(tuple(r) for r in rows))


def key_trace(key: Key, n: int) -> int:
    return sum(key[p] for p in _diag_positions(n)) // 2


def _sort_key(key: Key, n: int) -> tuple:
    return (key_trace(key, n), matrix_of(key, n).doubled)


class FourierExpansion:
    """A truncated expansion; treat instances as immutable values."""

    __slots__ = ("degree", "weight", "denom_M", "trace_bound", "_c")

    def __init__(self, degree: int, weight: HalfWeight | int, denom_M: int, trace_bound: int,
                 coeffs: Mapping | None = None, *, validate: bool = True):
        if not isinstance(weight, HalfWeight):
            weight = HalfWeight.of(weight)
        if denom_M < 1:
            raise ValueError("denom_M must be a positive integer")
        if trace_bound < 0:
            raise ValueError("trace_bound must be nonnegative")
        self.degree = degree
        self.weight = weight
        self.denom_M = int(denom_M)
        self.trace_bound = int(trace_bound)
        c: dict[Key, Coeff] = {}
        for t, v in (coeffs or {}).items():
            key = key_of(t) if isinstance(t, HalfIntMatrix) else tuple(int(x) for x in t)
            v = _norm(v)
            if v == 0:
                continue
            if validate:
                if len(key) != degree * (degree + 1) // 2:
                    raise IncompatibleShapes(f"index {key} does not have degree {degree}")
                m = HalfIntMatrix(matrix_of(key, degree).doubled)
                if definiteness(m) == INDEFINITE:
                    raise ValueError(f"index {m} is indefinite")
                if m.trace > self.trace_bound:
                    raise TruncationExceeded(f"index {m} lies beyond trace bound {trace_bound}")
            c[key] = v
        self._c = c

    @classmethod
    def _raw(cls, degree, weight, denom_M, trace_bound, c: dict) -> FourierExpansion:
        obj = cls.__new__(cls)
        obj.degree = degree
        obj.weight = weight
        obj.denom_M = denom_M
        obj.trace_bound = trace_bound
        obj._c = c
        return obj

    # -- access ---------------------------------------------------------
    @property
    def coeffs(self) -> dict[HalfIntMatrix, Coeff]:
        return {matrix_of(k, self.degree): v for k, v in self.items_raw()}

    def items_raw(self) -> list[tuple[Key, Coeff]]:
        """(key, coefficient) pairs sorted by trace, then entries of 2T."""
        n = self.degree
        return sorted(self._c.items(), key=lambda kv: _sort_key(kv[0], n))

    def items(self) -> Iterator[tuple[HalfIntMatrix, Coeff]]:
        for k, v in self.items_raw():
            yield matrix_of(k, self.degree), v

    def __getitem__(self, t) -> Coeff:
        return self.coefficient(t)

    def coefficient(self, t) -> Coeff:
        """a(T); an int index is accepted for degree 1.  Beyond the bound raises."""
        if isinstance(t, int):
            t = HalfIntMatrix.scalar(t)
        elif not isinstance(t, HalfIntMatrix):
            t = HalfIntMatrix(t)
        if t.n != self.degree:
            raise IncompatibleShapes(f"index of size {t.n} for a degree {self.degree} expansion")
        if t.trace > self.trace_bound:
            raise TruncationExceeded(f"trace {t.trace} > bound {self.trace_bound}")
        return self._c.get(key_of(t), 0)

    def get_key(self, key: Key) -> Coeff:
        return self._c.get(key, 0)

    def __len__(self) -> int:
        return len(self._c)

    def is_zero(self) -> bool:
        return not self._c

    @property
    def k(self) -> Fraction:
        return self.weight.k

    def __eq__(self, other) -> bool:
        return (isinstance(other, FourierExpansion) and self.degree == other.degree
                and self.weight == other.weight and self.denom_M == other.denom_M
                and self.trace_bound == other.trace_bound and self._c == other._c)

    def same_coefficients(self, other: FourierExpansion) -> bool:
        """Equality of coefficients below the common trace bound (M must agree)."""
        if self.degree != other.degree or self.denom_M != other.denom_M:
            return False
        b = min(self.trace_bound, other.trace_bound)
        return restrict(self, b)._c == restrict(other, b)._c

    def __repr__(self) -> str:
        return (f"FourierExpansion(degree={self.degree}, k={self.weight}, M={self.denom_M}, "
                f"trace_bound={self.trace_bound}, terms={len(self._c)})")

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1))

    def __mul__(self, other):
        if isinstance(other, FourierExpansion):
            return multiply(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1)

    def with_bound(self, trace_bound: int) -> FourierExpansion:
        return restrict(self, trace_bound)


# --- constructors -----------------------------------------------------------

def zero(degree: int, weight=0, denom_M: int = 1, trace_bound: int = 0) -> FourierExpansion:
    w = weight if isinstance(weight, HalfWeight) else HalfWeight.of(weight)
    return FourierExpansion._raw(degree, w, denom_M, trace_bound, {})


def constant(degree: int, value=1, weight=0, denom_M: int = 1, trace_bound: int = 0) -> FourierExpansion:
    w = weight if isinstance(weight, HalfWeight) else HalfWeight.of(weight)
    c = {(0,) * (degree * (degree + 1) // 2): _norm(value)} if value else {}
    return FourierExpansion._raw(degree, w, denom_M, trace_bound, c)


def from_series(coeffs: Iterable, weight, trace_bound: int | None = None, denom_M: int = 1) -> FourierExpansion:
    """Degree-1 expansion from a list a(0), a(1), ..."""
    vals = list(coeffs)
    bound = len(vals) - 1 if trace_bound is None else trace_bound
    w = weight if isinstance(weight, HalfWeight) else HalfWeight.of(weight)
    c = {(2 * i,): _norm(v) for i, v in enumerate(vals[:bound + 1]) if v}
    return FourierExpansion._raw(1, w, denom_M, bound, c)


def series(f: FourierExpansion) -> list[Coeff]:
    """Degree-1 coefficient list a(0..trace_bound)."""
    if f.degree != 1:
        raise IncompatibleShapes("series() needs a degree-1 expansion")
    out = [0] * (f.trace_bound + 1)
    for (d,), v in f._c.items():
        out[d // 2] = v
    return out


# --- arithmetic ------------------------------------------------------------

def restrict(f: FourierExpansion, trace_bound: int) -> FourierExpansion:
    if trace_bound >= f.trace_bound:
        return f
    n = f.degree
    pos = _diag_positions(n)
    lim = 2 * trace_bound
    c = {k: v for k, v in f._c.items() if sum(k[p] for p in pos) <= lim}
    return FourierExpansion._raw(n, f.weight, f.denom_M, trace_bound, c)


def rescale(f: FourierExpansion, new_M: int) -> FourierExpansion:
    """Same function with exponent denominator new_M (a multiple of M)."""
    if new_M % f.denom_M:
        raise IncompatibleShapes(f"{new_M} is not a multiple of {f.denom_M}")
    s = new_M // f.denom_M
    if s == 1:
        return f
    c = {tuple(s * x for x in k): v for k, v in f._c.items()}
    return FourierExpansion._raw(f.degree, f.weight, new_M, f.trace_bound * s, c)


def normalize_denominator(f: FourierExpansion) -> FourierExpansion:
    """Smallest exponent denominator that represents f with half-integral indices."""
    n = f.degree
    pos = set(_diag_positions(n))
    best = 1
    for g in sorted((d for d in range(1, f.denom_M + 1) if f.denom_M % d == 0), reverse=True):
        ok = all(all(x % (2 * g if i in pos else g) == 0 for i, x in enumerate(k)) for k in f._c)
        if ok:
            best = g
            break
    if best == 1:
        return f
    c = {tuple(x // best for x in k): v for k, v in f._c.items()}
    return FourierExpansion._raw(n, f.weight, f.denom_M // best, f.trace_bound // best, c)


def _common(f: FourierExpansion, g: FourierExpansion) -> tuple[FourierExpansion, FourierExpansion]:
    if f.degree != g.degree:
        raise IncompatibleShapes(f"degrees {f.degree} and {g.degree} differ")
    if f.denom_M != g.denom_M:
        m = math.lcm(f.denom_M, g.denom_M)
        f, g = rescale(f, m), rescale(g, m)
    return f, g


def add(f: FourierExpansion, g: FourierExpansion) -> FourierExpansion:
    f, g = _common(f, g)
    if f.weight != g.weight:
        raise IncompatibleShapes(f"weights {f.weight} and {g.weight} differ")
    bound = min(f.trace_bound, g.trace_bound)
    f, g = restrict(f, bound), restrict(g, bound)
    c = dict(f._c)
    for k, v in g._c.items():
        s = c.get(k, 0) + v
        if s:
            c[k] = _norm(s) if isinstance(s, Fraction) else s
        else:
            c.pop(k, None)
    return FourierExpansion._raw(f.degree, f.weight, f.denom_M, bound, c)


def scale(f: FourierExpansion, q) -> FourierExpansion:
    q = _norm(q)
    if q == 0:
        return FourierExpansion._raw(f.degree, f.weight, f.denom_M, f.trace_bound, {})
    if q == 1:
        return f
    c = {k: _norm(v * q) if isinstance(q, Fraction) or isinstance(v, Fraction) else v * q
         for k, v in f._c.items()}
    return FourierExpansion._raw(f.degree, f.weight, f.denom_M, f.trace_bound, c)


_INT64_SAFE = 2 ** 62


def multiply(f: FourierExpansion, g: FourierExpansion) -> FourierExpansion:
    """Exact product; the result knows every coefficient with trace <= min bound."""
    f, g = _common(f, g)
    bound = min(f.trace_bound, g.trace_bound)
    f, g = restrict(f, bound), restrict(g, bound)
    weight = f.weight + g.weight
    n = f.degree
    if not f._c or not g._c:
        return FourierExpansion._raw(n, weight, f.denom_M, bound, {})
    if n == 2 and _dense_ok(f, g):
        c = _multiply_dense2(f, g, bound)
    else:
        c = _multiply_sparse(f, g, bound)
    return FourierExpansion._raw(n, weight, f.denom_M, bound, c)


def _dense_ok(f, g) -> bool:
    if any(isinstance(v, Fraction) for v in itertools.chain(f._c.values(), g._c.values())):
        return False
    mf = max(abs(v) for v in f._c.values())
    sg = sum(abs(v) for v in g._c.values())
    mg = max(abs(v) for v in g._c.values())
    sf = sum(abs(v) for v in f._c.values())
    return min(mf * sg, mg * sf) < _INT64_SAFE and len(f._c) * len(g._c) > 20000


def _multiply_sparse(f, g, bound) -> dict:
    n = f.degree
    pos = _diag_positions(n)
    lim = 2 * bound
    # iterate the sparser factor on the outside
    if len(f._c) > len(g._c):
        f, g = g, f
    gs = sorted(((sum(k[p] for p in pos), k, v) for k, v in g._c.items()), key=lambda x: x[0])
    out: dict[Key, Coeff] = {}
    for k1, v1 in f._c.items():
        t1 = sum(k1[p] for p in pos)
        room = lim - t1
        for t2, k2, v2 in gs:
            if t2 > room:
                break
            key = tuple(a + b for a, b in zip(k1, k2))
            out[key] = out.get(key, 0) + v1 * v2
    return {k: _norm(v) for k, v in out.items() if v}


def _to_dense2(f, bound) -> np.ndarray:
    arr = np.zeros((bound + 1, bound + 1, 2 * bound + 1), dtype=np.int64)
    for (a2, b, c2), v in f._c.items():
        arr[a2 // 2, c2 // 2, b + bound] = v
    return arr


def _multiply_dense2(f, g, bound) -> dict:
    # shift-and-add the sparser factor into a dense array of the other
    if len(f._c) > len(g._c):
        f, g = g, f
    dense = _to_dense2(g, bound)
    acc = np.zeros_like(dense)
    size = bound + 1
    for (a2, b, c2), v in f._c.items():
        a, c = a2 // 2, c2 // 2
        if a + c > bound:
            continue
        src = dense[:size - a, :size - c]
        if b >= 0:
            acc[a:, c:, b:] += v * src[:, :, :2 * bound + 1 - b]
        else:
            acc[a:, c:, :b] += v * src[:, :, -b:]
    out = {}
    nz = np.nonzero(acc)
    for a, c, bb in zip(*nz):
        if a + c <= bound:
            out[(2 * int(a), int(bb) - bound, 2 * int(c))] = int(acc[a, c, bb])
    return out


def dilate(f: FourierExpansion, d: int) -> FourierExpansion:
    """F(d*tau) for a degree-1 expansion.

    With g = gcd(d, M) the exponent denominator becomes M/g and indices are
    multiplied by d/g.  The trace bound is kept; indices pushed above it are
    dropped, so everything retained is still exact.
    """
    if f.degree != 1:
        raise IncompatibleShapes("dilate is defined for degree 1")
    if d < 1:
        raise ValueError("dilation factor must be positive")
    g = math.gcd(d, f.denom_M)
    s = d // g
    lim = 2 * f.trace_bound
    c = {(k[0] * s,): v for k, v in f._c.items() if k[0] * s <= lim}
    return FourierExpansion._raw(1, f.weight, f.denom_M // g, f.trace_bound, c)


def pullback(f: FourierExpansion, u: UnimodularMatrix) -> FourierExpansion:
    """Expansion whose coefficient at T is a_F(T[U]).

    A stored index S lands on S[U^-1].  Landing spots beyond the trace bound are
    dropped, and coefficients at T with trace(T[U]) beyond the bound of F are
    unknown (reported as 0), so compare results only on common support.
    """
    if u.n != f.degree:
        raise IncompatibleShapes("unimodular matrix has the wrong size")
    uinv = u.inverse()
    n = f.degree
    lim = f.trace_bound
    c = {}
    for k, v in f._c.items():
        t = gram_transform(matrix_of(k, n), uinv)
        if t.trace <= lim:
            c[key_of(t)] = v
    return FourierExpansion._raw(n, f.weight, f.denom_M, f.trace_bound, c)


@dataclass(frozen=True)
class SupportVerdict:
    all_positive_definite: bool
    witness: HalfIntMatrix | None = None


def support_verdict(f: FourierExpansion) -> SupportVerdict:
    for t, _ in f.items():
        if not is_positive_definite(t):
            return SupportVerdict(False, t)
    return SupportVerdict(True, None)


def _term_arrays(f: FourierExpansion):
    n = f.degree
    keys = list(f._c)
    diag = np.array([[k[p] for p in _diag_positions(n)] for k in keys], dtype=float).reshape(len(keys), n) / 2
    off_idx = [(i, j) for i in range(n) for j in range(i + 1, n)]
    flat_pos = {}
    pos = 0
    for i in range(n):
        for j in range(i, n):
            flat_pos[(i, j)] = pos
            pos += 1
    off = np.array([[k[flat_pos[ij]] for ij in off_idx] for k in keys], dtype=float).reshape(len(keys), len(off_idx))
    coef = np.array([float(v) for v in f._c.values()], dtype=float)
    return diag, off, off_idx, coef


def evaluate(f: FourierExpansion, x, y) -> complex:
    """Double-precision value of the truncated series at Z = X + iY.

    No estimate of the truncation error is made here.
    """
    n = f.degree
    x = np.atleast_2d(np.asarray(x, dtype=float)) if n else np.zeros((0, 0))
    y = np.atleast_2d(np.asarray(y, dtype=float)) if n else np.zeros((0, 0))
    if n:
        if x.shape != (n, n) or y.shape != (n, n):
            raise IncompatibleShapes(f"X and Y must be {n}x{n}")
        try:
            np.linalg.cholesky(y)
        except np.linalg.LinAlgError:
            raise NonPositiveY("Y must be positive definite") from None
    if not f._c:
        return 0j
    diag, off, off_idx, coef = _term_arrays(f)
    z = x + 1j * y
    tr = diag @ np.diag(z) if n else np.zeros(len(coef))
    if off_idx:
        tr = tr + off @ np.array([z[i, j] for i, j in off_idx])
    return complex(np.sum(coef * np.exp(2j * np.pi * tr / f.denom_M)))


def evaluate_on_ray(f: FourierExpansion, x_points: np.ndarray, y: float) -> np.ndarray:
    """Values at Z = X + i*y*I for a batch of symmetric X (shape (N, n, n))."""
    n = f.degree
    if y <= 0:
        raise NonPositiveY("y must be positive")
    if not f._c:
        return np.zeros(len(x_points), dtype=complex)
    diag, off, off_idx, coef = _term_arrays(f)
    xp = np.asarray(x_points, dtype=float).reshape(-1, n, n)
    xd = np.stack([xp[:, i, i] for i in range(n)], axis=1)
    phase = xd @ diag.T
    if off_idx:
        xo = np.stack([xp[:, i, j] for i, j in off_idx], axis=1)
        phase = phase + xo @ off.T
    damp = np.exp(-2 * np.pi * y * diag.sum(axis=1) / f.denom_M) * coef
    return np.exp(2j * np.pi * phase / f.denom_M) @ damp
