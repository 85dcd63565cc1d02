"""Exact arithmetic on half-integral symmetric matrices.

A half-integral matrix T (integer diagonal, half-integer off-diagonal) is
stored through its double 2T, which is an integer matrix with even diagonal.
Everything in this module is integer or Fraction arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import NotPositiveDefinite, SingularM, UnsupportedDegree

IntMatrix = tuple[tuple[int, ...], ...]

POSITIVE_DEFINITE = "positive_definite"
SEMIDEFINITE_SINGULAR = "semidefinite_singular"
INDEFINITE = "indefinite"


def _as_int_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    return tuple(tuple(int(v) for v in row) for row in rows)


def det_exact(rows: Sequence[Sequence]) -> Fraction | int:
    """Determinant of a square matrix of ints or Fractions.

    Integer input goes through Bareiss elimination and returns an int.
    """
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if all(isinstance(v, int) for row in rows for v in row):
        return _bareiss(rows)
    a = [[Fraction(v) for v in row] for row in rows]
    det = Fraction(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if a[r][i] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            a[i], a[piv] = a[piv], a[i]
            det = -det
        det *= a[i][i]
        for r in range(i + 1, n):
            f = a[r][i] / a[i][i]
            if f:
                for c in range(i, n):
                    a[r][c] -= f * a[i][c]
    return det


def _bareiss(rows: Sequence[Sequence[int]]) -> int:
    a = [list(row) for row in rows]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def transpose(a: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*a)]


def inverse_exact(a: Sequence[Sequence]) -> list[list[Fraction]]:
    """Gauss-Jordan inverse over the rationals."""
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for i in range(n):
        piv = next((r for r in range(i, n) if m[r][i] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[i], m[piv] = m[piv], m[i]
        p = m[i][i]
        m[i] = [v / p for v in m[i]]
        for r in range(n):
            if r != i and m[r][i] != 0:
                f = m[r][i]
                m[r] = [x - f * y for x, y in zip(m[r], m[i])]
    return [row[n:] for row in m]


@dataclass(frozen=True, slots=True)
class HalfIntMatrix:
    """An element T of the half-integral symmetric matrices, stored as 2T."""

    doubled: IntMatrix

    def __post_init__(self):
        d = _as_int_matrix(self.doubled)
        object.__setattr__(self, "doubled", d)
        n = len(d)
        for i, row in enumerate(d):
            if len(row) != n:
                raise ValueError("doubled matrix must be square")
            if row[i] % 2:
                raise ValueError(f"diagonal entry {row[i]} of 2T is odd")
            for j in range(i):
                if row[j] != d[j][i]:
                    raise ValueError("doubled matrix must be symmetric")

    @classmethod
    def _trusted(cls, doubled: IntMatrix) -> HalfIntMatrix:
        obj = object.__new__(cls)
        object.__setattr__(obj, "doubled", doubled)
        return obj

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence]) -> HalfIntMatrix:
        """Build from the entries of T itself (ints, Fractions or strings)."""
        doubled = []
        for row in rows:
            out = []
            for v in row:
                twice = 2 * Fraction(v)
                if twice.denominator != 1:
                    raise ValueError(f"{v} is not half-integral")
                out.append(int(twice))
            doubled.append(out)
        return cls(doubled)

    @classmethod
    def scalar(cls, t: int) -> HalfIntMatrix:
        return cls(((2 * t,),))

    @classmethod
    def diag(cls, *entries: int) -> HalfIntMatrix:
        n = len(entries)
        return cls(tuple(tuple(2 * entries[i] if i == j else 0 for j in range(n))
                         for i in range(n)))

    @classmethod
    def zero(cls, n: int) -> HalfIntMatrix:
        return cls._trusted(tuple((0,) * n for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.doubled)

    def entry(self, i: int, j: int) -> Fraction:
        return Fraction(self.doubled[i][j], 2)

    def entries(self) -> list[list[Fraction]]:
        return [[Fraction(v, 2) for v in row] for row in self.doubled]

    @property
    def trace(self) -> int:
        return sum(self.doubled[i][i] for i in range(self.n)) // 2

    @property
    def det(self) -> Fraction:
        return Fraction(det_exact(self.doubled), 2 ** self.n)

    def sort_key(self) -> tuple:
        """Order used for records and deterministic scans: trace, then entries."""
        return (self.trace, tuple(itertools.chain.from_iterable(self.doubled)))

    def __add__(self, other: HalfIntMatrix) -> HalfIntMatrix:
        return HalfIntMatrix._trusted(tuple(
            tuple(x + y for x, y in zip(r1, r2)) for r1, r2 in zip(self.doubled, other.doubled)))

    def scaled(self, factor: int) -> HalfIntMatrix:
        return HalfIntMatrix._trusted(tuple(tuple(factor * v for v in row) for row in self.doubled))

    def __repr__(self) -> str:
        return f"HalfIntMatrix({[list(r) for r in self.doubled]})"


@dataclass(frozen=True, slots=True)
class UnimodularMatrix:
    entries: IntMatrix

    def __post_init__(self):
        e = _as_int_matrix(self.entries)
        object.__setattr__(self, "entries", e)
        if any(len(row) != len(e) for row in e):
            raise ValueError("unimodular matrix must be square")
        if det_exact(e) not in (1, -1):
            raise ValueError(f"determinant {det_exact(e)} is not +-1")

    @classmethod
    def identity(cls, n: int) -> UnimodularMatrix:
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def det(self) -> int:
        return det_exact(self.entries)

    def inverse(self) -> UnimodularMatrix:
        inv = inverse_exact(self.entries)
        return UnimodularMatrix(tuple(tuple(int(v) for v in row) for row in inv))

    def __matmul__(self, other: UnimodularMatrix) -> UnimodularMatrix:
        return UnimodularMatrix(tuple(tuple(r) for r in mat_mul(self.entries, other.entries)))


@dataclass(frozen=True)
class ReductionResult:
    reduced: HalfIntMatrix
    transform: UnimodularMatrix


def definiteness(t: HalfIntMatrix) -> str:
    """Classify T by exact minors.

    Positive definite iff all leading principal minors are positive; positive
    semidefinite iff every principal minor is nonnegative.
    """
    d = t.doubled
    n = t.n
    if all(det_exact([row[:k] for row in d[:k]]) > 0 for k in range(1, n + 1)):
        return POSITIVE_DEFINITE
    for k in range(1, n + 1):
        for idx in itertools.combinations(range(n), k):
            if det_exact([[d[i][j] for j in idx] for i in idx]) < 0:
                return INDEFINITE
    return SEMIDEFINITE_SINGULAR


def is_positive_definite(t: HalfIntMatrix) -> bool:
    d = t.doubled
    return all(det_exact([row[:k] for row in d[:k]]) > 0 for k in range(1, t.n + 1))


def gram_transform(t: HalfIntMatrix, u: UnimodularMatrix | Sequence[Sequence[int]]) -> HalfIntMatrix:
    """Return T[U] = U^t T U."""
    e = u.entries if isinstance(u, UnimodularMatrix) else u
    if len(e) != t.n:
        raise ValueError("size mismatch")
    prod = mat_mul(transpose(e), mat_mul(t.doubled, e))
    return HalfIntMatrix._trusted(tuple(tuple(row) for row in prod))


def _ldl(doubled: IntMatrix) -> tuple[list[Fraction], list[list[Fraction]]]:
    # Q(x) = x^t T x = sum_i q[i][i] * (x_i + sum_{j>i} q[i][j] x_j)^2
    n = len(doubled)
    q = [[Fraction(v, 2) for v in row] for row in doubled]
    for i in range(n):
        if q[i][i] <= 0:
            raise NotPositiveDefinite("matrix is not positive definite")
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    return [q[i][i] for i in range(n)], q


def _int_window(center: Fraction, radius_sq: Fraction) -> range:
    """Integers x with (x - center)^2 <= radius_sq, found exactly."""
    if radius_sq < 0:
        return range(0)
    r = math.sqrt(float(radius_sq))
    lo = math.floor(float(center) - r) - 2
    hi = math.ceil(float(center) + r) + 2
    while lo <= hi and (lo - center) ** 2 > radius_sq:
        lo += 1
    while hi >= lo and (hi - center) ** 2 > radius_sq:
        hi -= 1
    return range(lo, hi + 1)


def short_vectors(t: HalfIntMatrix, bound: int) -> list[tuple[tuple[int, ...], int]]:
    """All integer x with x^t T x <= bound, with their (integer) norms.

    Fincke-Pohst enumeration; interval endpoints are decided exactly.
    """
    n = t.n
    diag, q = _ldl(t.doubled)
    out: list[tuple[tuple[int, ...], int]] = []
    x = [0] * n
    d = t.doubled
    bound_f = Fraction(bound)

    def rec(i: int, remaining: Fraction) -> None:
        center = -sum((q[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        for xi in _int_window(center, remaining / diag[i]):
            x[i] = xi
            used = diag[i] * (xi - center) ** 2
            if i == 0:
                v = tuple(x)
                norm = sum(v[a] * d[a][b] * v[b] for a in range(n) for b in range(n)) // 2
                out.append((v, norm))
            else:
                rec(i - 1, remaining - used)
        x[i] = 0

    rec(n - 1, bound_f)
    return out


def _gram(d: IntMatrix, u: list[list[int]]) -> list[list[int]]:
    return mat_mul(transpose(u), mat_mul(d, u))


def _column(u: list[list[int]], k: int) -> list[int]:
    return [row[k] for row in u]


def _set_column(u: list[list[int]], k: int, col: Sequence[int]) -> None:
    for row, v in zip(u, col):
        row[k] = v


def minkowski_reduce(t: HalfIntMatrix) -> ReductionResult:
    """Reduce a positive definite T under GL_n(Z).

    Pairwise size reduction followed by the Minkowski conditions restricted
    to coefficient vectors in {-1, 0, 1}^n; those conditions are complete for
    n <= 4, so the output is Minkowski reduced there. For larger n the result
    is only size reduced and ordered by diagonal. For n <= 3 signs are then
    normalised so off-diagonal entries are nonnegative where a sign change
    allows it, which makes binary representatives unique per class.
    """
    if not is_positive_definite(t):
        raise NotPositiveDefinite(f"{t} is not positive definite")
    n = t.n
    d = t.doubled
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    coeff_vectors = [x for x in itertools.product((-1, 0, 1), repeat=n) if any(x)]

    while True:
        changed = True
        while changed:
            changed = False
            g = _gram(d, u)
            order = sorted(range(n), key=lambda i: g[i][i])
            if order != list(range(n)):
                u = [[row[k] for k in order] for row in u]
                g = _gram(d, u)
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    # minimise Q(b_i - r b_j): r = round(D_ij / D_jj)
                    r = _round_half_away(Fraction(g[i][j], g[j][j]))
                    if r and abs(2 * g[i][j]) > g[j][j]:
                        ci, cj = _column(u, i), _column(u, j)
                        _set_column(u, i, [a - r * b for a, b in zip(ci, cj)])
                        changed = True
                        g = _gram(d, u)
        g = _gram(d, u)
        violation = None
        for i in range(n):
            for x in coeff_vectors:
                if not any(x[i:]):
                    continue
                qx = sum(x[a] * g[a][b] * x[b] for a in range(n) for b in range(n))
                if qx < g[i][i]:
                    k = max(j for j in range(i, n) if x[j])
                    violation = (k, x)
                    break
            if violation:
                break
        if violation is None:
            break
        k, x = violation
        new_col = [sum(row[j] * x[j] for j in range(n)) for row in u]
        _set_column(u, k, new_col)

    if n <= 3:
        u = _canonical_signs(d, u)
    reduced = HalfIntMatrix._trusted(tuple(tuple(r) for r in _gram(d, u)))
    return ReductionResult(reduced, UnimodularMatrix(tuple(tuple(r) for r in u)))


def _round_half_away(x: Fraction) -> int:
    f = math.floor(x)
    return f + 1 if x - f > Fraction(1, 2) else f


def _canonical_signs(d: IntMatrix, u: list[list[int]]) -> list[list[int]]:
    n = len(u)
    best = None
    g0 = _gram(d, u)
    diag = [g0[i][i] for i in range(n)]
    perms = [p for p in itertools.permutations(range(n))
             if all(diag[p[i]] == diag[i] for i in range(n))]
    for perm in perms:
        for signs in itertools.product((1, -1), repeat=n):
            cand = [[row[perm[k]] * signs[k] for k in range(n)] for row in u]
            g = _gram(d, cand)
            off = tuple(g[i][j] for i in range(n) for j in range(i + 1, n))
            key = tuple(-v for v in off)
            if best is None or key < best[0]:
                best = (key, cand)
    return best[1]


def automorph_count(t: HalfIntMatrix) -> int:
    """#{U in GL_n(Z) : T[U] = T}.

    Column j of an automorph has norm T_jj and prescribed inner products with
    the earlier columns, so the search runs over the finite norm shells
    produced by exact short-vector enumeration; nothing is cut off.
    """
    if not is_positive_definite(t):
        raise NotPositiveDefinite(f"{t} is not positive definite")
    red = minkowski_reduce(t).reduced
    d = red.doubled
    n = red.n
    norms = [d[i][i] // 2 for i in range(n)]
    vecs = short_vectors(red, max(norms))
    shells = {k: [v for v, q in vecs if q == k] for k in set(norms)}

    def inner(a, b):
        return sum(a[i] * d[i][j] * b[j] for i in range(n) for j in range(n))

    count = 0
    cols: list[tuple[int, ...]] = []

    def rec(j: int) -> None:
        nonlocal count
        if j == n:
            if det_exact([list(r) for r in zip(*cols)]) in (1, -1):
                count += 1
            return
        for v in shells[norms[j]]:
            if all(inner(cols[i], v) == d[i][j] for i in range(j)):
                cols.append(v)
                rec(j + 1)
                cols.pop()

    rec(0)
    return count


def enumerate_classes(n: int, det_bound) -> list[HalfIntMatrix]:
    """One reduced representative per GL_n(Z)-class of positive definite T
    with det(T) <= det_bound, in lexicographic order of 2T."""
    bound = Fraction(det_bound) if not isinstance(det_bound, float) else Fraction(det_bound).limit_denominator(10**12)
    if n == 1:
        return [HalfIntMatrix._trusted(((2 * t,),)) for t in range(1, math.floor(bound) + 1)]
    if n != 2:
        raise UnsupportedDegree(f"class enumeration is implemented for n <= 2, not {n}")
    out = []
    # reduced: 0 <= b <= a <= c with 2T = [[2a, b], [b, 2c]], det = (4ac - b^2)/4 >= 3a^2/4
    four_x = 4 * bound
    a = 1
    while 3 * a * a <= four_x:
        for b in range(0, a + 1):
            c = a
            while 4 * a * c - b * b <= four_x:
                out.append(HalfIntMatrix._trusted(((2 * a, b), (b, 2 * c))))
                c += 1
        a += 1
    out.sort(key=lambda m: tuple(itertools.chain.from_iterable(m.doubled)))
    return out


def reduced_binary_forms(trace_bound: int, det_lo=0, det_hi=None) -> tuple[list[HalfIntMatrix], int]:
    """Reduced binary representatives with trace <= trace_bound and det in [det_lo, det_hi].

    Also returns how many classes in the det window were left out because
    their reduced representative has trace above the bound.
    """
    lo4 = 4 * Fraction(det_lo)
    hi4 = None if det_hi is None else 4 * Fraction(det_hi)
    out, beyond = [], 0
    a = 1
    while True:
        if hi4 is None:
            if 2 * a > trace_bound:
                break
        elif 3 * a * a > hi4:
            break
        if 2 * a > trace_bound:
            # nothing storable from here on; count the rest in bulk
            beyond += _count_reduced_beyond(a, lo4, hi4)
            break
        for b in range(0, a + 1):
            c_min = a
            # det window: lo4 <= 4ac - b^2 <= hi4
            if lo4 > 0:
                c_min = max(c_min, -(-(lo4 + b * b) // (4 * a)))
            c_max = trace_bound - a
            if hi4 is not None:
                c_hi = math.floor((hi4 + b * b) / (4 * a))
                if c_hi > c_max:
                    beyond += max(0, c_hi - max(c_max, c_min - 1))
                c_max = min(c_max, c_hi)
            for c in range(int(c_min), c_max + 1):
                out.append(HalfIntMatrix._trusted(((2 * a, b), (b, 2 * c))))
        a += 1
    return out, beyond


def _count_reduced_beyond(a0: int, lo4: Fraction, hi4: Fraction) -> int:
    """#{0 <= b <= a <= c, a >= a0 : lo4 <= 4ac - b^2 <= hi4}, exact, vectorised over b."""
    total = 0
    lo_n, lo_d = lo4.numerator, lo4.denominator
    hi_n, hi_d = hi4.numerator, hi4.denominator
    a = a0
    while 3 * a * a <= hi4:
        small = max(hi_d, lo_d) * (a + 1) ** 2 + hi_n + abs(lo_n) < 2 ** 62
        b = np.arange(a + 1, dtype=np.int64 if small else object)
        c_hi = (hi_n + hi_d * b * b) // (4 * a * hi_d)
        c_lo = np.maximum(-((-(lo_n + lo_d * b * b)) // (4 * a * lo_d)), a)
        total += int(np.maximum(c_hi - c_lo + 1, 0).sum())
        a += 1
    return total


@dataclass(frozen=True)
class BlockEmbedding:
    matrix: HalfIntMatrix
    det: Fraction
    det_schur: Fraction | None


def schur_det(a: Sequence[Sequence], mu: Sequence[Sequence], m: Sequence[Sequence]) -> Fraction:
    """det([[A, mu/2], [mu^t/2, M]]) computed as det(M) * det(A - mu M^{-1} mu^t / 4)."""
    det_m = Fraction(det_exact(m))
    if det_m == 0:
        raise SingularM("Schur route needs det(M) != 0")
    minv = inverse_exact(m)
    corr = mat_mul(mat_mul(mu, minv), transpose(mu))
    comp = [[Fraction(a[i][j]) - corr[i][j] / 4 for j in range(len(a))] for i in range(len(a))]
    return det_m * Fraction(det_exact(comp))


def block_matrix(a: Sequence[Sequence], mu: Sequence[Sequence], m: Sequence[Sequence]) -> list[list[Fraction]]:
    """The rational matrix [[A, mu/2], [mu^t/2, M]]."""
    s, r = len(a), len(m)
    out = [[Fraction(0)] * (s + r) for _ in range(s + r)]
    for i in range(s):
        for j in range(s):
            out[i][j] = Fraction(a[i][j])
        for j in range(r):
            out[i][s + j] = out[s + j][i] = Fraction(mu[i][j]) / 2
    for i in range(r):
        for j in range(r):
            out[s + i][s + j] = Fraction(m[i][j])
    return out


def embed_block(a: HalfIntMatrix, mu: Sequence[Sequence[int]], m: HalfIntMatrix,
                schur: bool = True) -> BlockEmbedding:
    """Embed (l, mu, M) as the degree-n index [[l, mu/2], [mu^t/2, M]]."""
    s, r = a.n, m.n
    mu = _as_int_matrix(mu) if s and r else tuple(tuple() for _ in range(s))
    if len(mu) != s or any(len(row) != r for row in mu):
        raise ValueError(f"mu must be {s}x{r}")
    doubled = [list(a.doubled[i]) + list(mu[i]) for i in range(s)]
    doubled += [[mu[i][j] for i in range(s)] + list(m.doubled[j]) for j in range(r)]
    t = HalfIntMatrix._trusted(tuple(tuple(row) for row in doubled))
    det_schur = None
    if schur:
        det_schur = schur_det(a.entries(), mu, m.entries())
    return BlockEmbedding(t, t.det, det_schur)


def submatrix(t: HalfIntMatrix, rows: Sequence[int]) -> HalfIntMatrix:
    return HalfIntMatrix._trusted(tuple(tuple(t.doubled[i][j] for j in rows) for i in rows))


def iter_all_unimodular(n: int, entry_bound: int) -> Iterator[UnimodularMatrix]:
    """Brute-force GL_n(Z) elements with entries in [-entry_bound, entry_bound]."""
    rng = range(-entry_bound, entry_bound + 1)
    for flat in itertools.product(rng, repeat=n * n):
        rows = tuple(tuple(flat[i * n:(i + 1) * n]) for i in range(n))
        if det_exact(rows) in (1, -1):
            yield UnimodularMatrix(rows)
