"""Siegel Phi, Fourier-Jacobi slices and theta decomposition at coefficient level.

Write an index of degree n = s + r in block form
    T = [[l, mu/2], [mu^t/2, M]],   l: s x s,  mu: s x r integer,  M: r x r.
The slice of F at M collects c(l, mu) = a_F(T).  For a form invariant under
T -> T[U] (det U = 1) the slice is constant along
    mu -> mu + 2 lam M,   2l -> 2l + mu lam^t + lam mu^t + 2 lam M lam^t,
so it is determined by one representative mu0 per class of mu modulo the row
lattice of 2M.  The component attached to mu0 is the map l0 -> c(l0, mu0),
with exponent l0 - (1/4) mu0 M^-1 mu0^t, and the slice is recovered as
    sum over mu0 of  h_mu0 * theta_{M, mu0}.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import InconsistentSlice, NotPositiveDefiniteIndex, UnsupportedDegree
from .matrices import (HalfIntMatrix, embed_block, inverse_exact, is_positive_definite,
                       mat_mul, transpose)
from .qexp import FourierExpansion, HalfWeight, key_of, matrix_of

Mu = tuple[tuple[int, ...], ...]


def _block(t: HalfIntMatrix, rows: range, cols: range) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(t.doubled[i][j] for j in cols) for i in rows)


# --- Phi operators ---------------------------------------------------------

def _phi(f: FourierExpansion, keep: range, drop: int) -> FourierExpansion:
    n = f.degree
    if n < 1:
        raise UnsupportedDegree("Phi needs degree >= 1")
    c = {}
    for key, v in f._c.items():
        t = matrix_of(key, n)
        if t.doubled[drop][drop] == 0:
            # a zero diagonal entry of a semidefinite matrix kills its row
            sub = HalfIntMatrix._trusted(_block(t, keep, keep))
            c[key_of(sub)] = v
    return FourierExpansion._raw(n - 1, f.weight, f.denom_M, f.trace_bound, c)


def siegel_phi(f: FourierExpansion) -> FourierExpansion:
    """Keep indices diag(T', 0); degree drops by one."""
    return _phi(f, range(f.degree - 1), f.degree - 1)


def opposite_phi(f: FourierExpansion) -> FourierExpansion:
    """Keep indices diag(0, T'), the lower-right block."""
    return _phi(f, range(1, f.degree), 0)


# --- slices ----------------------------------------------------------------

@dataclass
class JacobiSlice:
    parent_degree: int
    r: int
    index: HalfIntMatrix
    weight: HalfWeight
    denom_M: int
    trace_bound: int                       # bound on trace(l)
    entries: dict[tuple[tuple, Mu], object] = field(default_factory=dict)

    @property
    def s(self) -> int:
        return self.parent_degree - self.r

    def entry(self, l: HalfIntMatrix, mu) -> object:
        return self.entries.get((key_of(l), tuple(tuple(int(x) for x in row) for row in mu)), 0)

    def items(self) -> Iterator[tuple[HalfIntMatrix, Mu, object]]:
        for (lk, mu), v in sorted(self.entries.items(),
                                  key=lambda e: (matrix_of(e[0][0], self.s).sort_key(), e[0][1])):
            yield matrix_of(lk, self.s), mu, v

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other) -> bool:
        return (isinstance(other, JacobiSlice) and self.parent_degree == other.parent_degree
                and self.r == other.r and self.index == other.index and self.weight == other.weight
                and self.denom_M == other.denom_M and self.trace_bound == other.trace_bound
                and self.entries == other.entries)


def _split(t: HalfIntMatrix, s: int) -> tuple[HalfIntMatrix, Mu, tuple]:
    n = t.n
    l = HalfIntMatrix._trusted(_block(t, range(s), range(s)))
    mu = _block(t, range(s), range(s, n))
    m = _block(t, range(s, n), range(s, n))
    return l, mu, m


def fj_slice(f: FourierExpansion, r: int, index: HalfIntMatrix) -> JacobiSlice:
    """c(l, mu) = a_F([[l, mu/2], [mu^t/2, M]]) for every index of F with lower-right block M."""
    n = f.degree
    if not 1 <= r < n:
        raise UnsupportedDegree(f"slice type r={r} needs 1 <= r < degree={n}")
    if index.n != r:
        raise ValueError(f"index must be {r}x{r}")
    if not is_positive_definite(index):
        raise NotPositiveDefiniteIndex(f"slice index {index} is not positive definite")
    return _slice_unchecked(f, r, index)


def _slice_unchecked(f: FourierExpansion, r: int, index: HalfIntMatrix) -> JacobiSlice:
    n, s = f.degree, f.degree - r
    entries = {}
    for key, v in f._c.items():
        t = matrix_of(key, n)
        l, mu, m = _split(t, s)
        if m == index.doubled:
            entries[(key_of(l), mu)] = v
    return JacobiSlice(n, r, index, f.weight, f.denom_M, f.trace_bound - index.trace, entries)


def fj_decompose(f: FourierExpansion, r: int) -> dict[HalfIntMatrix, JacobiSlice]:
    """Every slice of type (n-r, r), singular lower-right blocks (M = 0 etc.) included."""
    n = f.degree
    if not 1 <= r < n:
        raise UnsupportedDegree(f"slice type r={r} needs 1 <= r < degree={n}")
    s = n - r
    groups: dict[tuple, dict] = {}
    for key, v in f._c.items():
        l, mu, m = _split(matrix_of(key, n), s)
        groups.setdefault(m, {})[(key_of(l), mu)] = v
    out = {}
    for m in sorted(groups, key=lambda d: HalfIntMatrix._trusted(d).sort_key()):
        idx = HalfIntMatrix._trusted(m)
        out[idx] = JacobiSlice(n, r, idx, f.weight, f.denom_M, f.trace_bound - idx.trace, groups[m])
    return out


def slice_to_expansion(sl: JacobiSlice) -> FourierExpansion:
    """Embed the slice back as a (partial) degree-n expansion."""
    c = {}
    for (lk, mu), v in sl.entries.items():
        t = embed_block(matrix_of(lk, sl.s), mu, sl.index, schur=False).matrix
        c[key_of(t)] = v
    return FourierExpansion._raw(sl.parent_degree, sl.weight, sl.denom_M,
                                 sl.trace_bound + sl.index.trace, c)


# --- coset geometry ----------------------------------------------------------

def hermite_rows(a: list[list[int]]) -> list[list[int]]:
    """Upper triangular Hermite normal form of a nonsingular square integer
    matrix, for the lattice spanned by its rows."""
    h = [list(r) for r in a]
    n = len(h)
    for col in range(n):
        # gcd-eliminate column col among rows col..n-1
        while True:
            nz = [i for i in range(col, n) if h[i][col] != 0]
            if not nz:
                raise ValueError("singular matrix")
            piv = min(nz, key=lambda i: abs(h[i][col]))
            h[col], h[piv] = h[piv], h[col]
            done = True
            for i in range(col + 1, n):
                if h[i][col]:
                    q = h[i][col] // h[col][col]
                    h[i] = [x - q * y for x, y in zip(h[i], h[col])]
                    if h[i][col]:
                        done = False
            if done:
                break
        if h[col][col] < 0:
            h[col] = [-x for x in h[col]]
        for i in range(col):
            q = h[i][col] // h[col][col]
            h[i] = [x - q * y for x, y in zip(h[i], h[col])]
    return h


def _reduce_row(v: tuple[int, ...], h: list[list[int]]) -> tuple[int, ...]:
    v = list(v)
    for j in range(len(h)):
        q = v[j] // h[j][j]
        if q:
            v = [x - q * y for x, y in zip(v, h[j])]
    return tuple(v)


def coset_representatives(index: HalfIntMatrix, s: int) -> list[Mu]:
    """Fundamental-box representatives of Z^{s x r} modulo rows of 2M, lexicographic."""
    h = hermite_rows([list(r) for r in index.doubled])
    row_reps = list(itertools.product(*[range(h[j][j]) for j in range(len(h))]))
    return [tuple(rows) for rows in itertools.product(row_reps, repeat=s)]


def reduce_mu(mu: Mu, index: HalfIntMatrix) -> tuple[Mu, list[list[int]]]:
    """(mu0, lam) with mu = mu0 + lam * 2M and mu0 in the fundamental box."""
    h = hermite_rows([list(r) for r in index.doubled])
    mu0 = tuple(_reduce_row(row, h) for row in mu)
    dinv = inverse_exact(index.doubled)
    lam = []
    for row, row0 in zip(mu, mu0):
        diff = [a - b for a, b in zip(row, row0)]
        x = [sum(diff[i] * dinv[i][j] for i in range(len(diff))) for j in range(len(diff))]
        assert all(v.denominator == 1 for v in x)
        lam.append([int(v) for v in x])
    return mu0, lam


def theta_offset(mu0: Mu, index: HalfIntMatrix) -> list[list[Fraction]]:
    """(1/4) mu0 M^-1 mu0^t as an exact s x s matrix."""
    minv = inverse_exact(index.entries())
    prod = mat_mul(mat_mul(mu0, minv), transpose(mu0))
    return [[Fraction(v) / 4 for v in row] for row in prod]


def _transport_l(lk: tuple, s: int, mu0: Mu, lam: list[list[int]], dm) -> tuple:
    # 2 l0 = 2 l' - (mu0 lam^t + lam mu0^t) - lam (2M) lam^t
    d = matrix_of(lk, s).doubled
    cross = mat_mul(mu0, transpose(lam))
    quad = mat_mul(mat_mul(lam, dm), transpose(lam))
    rows = [[d[i][j] - cross[i][j] - cross[j][i] - quad[i][j] for j in range(s)] for i in range(s)]
    return tuple(rows[i][j] for i in range(s) for j in range(i, s))


@dataclass
class ThetaComponent:
    mu0: Mu
    offset: list[list[Fraction]]          # (1/4) mu0 M^-1 mu0^t, subtracted from l0
    entries: dict[tuple, object]          # l0 key -> coefficient


@dataclass
class ThetaComponentSet:
    parent_degree: int
    r: int
    index: HalfIntMatrix
    weight: HalfWeight                    # k - r/2
    parent_weight: HalfWeight
    denom_M: int
    trace_bound: int
    components: dict[Mu, ThetaComponent]

    @property
    def s(self) -> int:
        return self.parent_degree - self.r

    @property
    def coset_count(self) -> int:
        return len(self.components)

    def component(self, mu0) -> ThetaComponent:
        return self.components[tuple(tuple(r) for r in mu0)]


def theta_components(sl: JacobiSlice) -> ThetaComponentSet:
    s = sl.s
    dm = [list(r) for r in sl.index.doubled]
    comps = {mu0: ThetaComponent(mu0, theta_offset(mu0, sl.index), {})
             for mu0 in coset_representatives(sl.index, s)}
    h = hermite_rows(dm)
    dinv = inverse_exact(dm)
    for (lk, mu), v in sl.entries.items():
        mu0 = tuple(_reduce_row(row, h) for row in mu)
        lam = [[int(sum((a - b) * dinv[i][j] for i, (a, b) in enumerate(zip(row, row0))))
                for j in range(sl.r)] for row, row0 in zip(mu, mu0)]
        l0 = _transport_l(lk, s, mu0, lam, dm)
        comp = comps[mu0].entries
        old = comp.get(l0)
        if old is not None and old != v:
            raise InconsistentSlice(f"c(l, mu) differs along the coset of mu0={mu0} at l0={l0}")
        comp[l0] = v
    return ThetaComponentSet(sl.parent_degree, sl.r, sl.index,
                             HalfWeight(sl.weight.twice_k - sl.r), sl.weight,
                             sl.denom_M, sl.trace_bound, comps)


@dataclass
class JacobiTheta:
    """theta_{M, mu0}: the terms nu = mu0 + lam 2M with exponent (1/4) nu M^-1 nu^t."""
    index: HalfIntMatrix
    mu0: Mu
    terms: list[tuple[Mu, list[list[Fraction]]]]

    def leading(self) -> tuple[Mu, list[list[Fraction]]]:
        return min(self.terms, key=lambda t: (sum(t[1][i][i] for i in range(len(t[1]))), t[0]))


def _row_terms(mu_row: tuple[int, ...], index: HalfIntMatrix, bound) -> list[tuple[tuple[int, ...], Fraction]]:
    r = index.n
    dm = index.doubled
    minv = inverse_exact(index.entries())
    ev = np.linalg.eigvalsh(np.array(index.entries(), dtype=float))
    lo, hi = float(ev[0]), float(ev[-1])
    norm_mu = math.sqrt(sum(x * x for x in mu_row))
    rad = int(math.ceil((math.sqrt(4 * hi * (float(bound) + 1)) + norm_mu) / (2 * lo))) + 1
    out = []
    for lam in itertools.product(range(-rad, rad + 1), repeat=r):
        nu = tuple(mu_row[j] + sum(lam[i] * dm[i][j] for i in range(r)) for j in range(r))
        e = sum(nu[i] * minv[i][j] * nu[j] for i in range(r) for j in range(r)) / 4
        if e <= bound:
            out.append((nu, e))
    return out


def jacobi_theta_char(index: HalfIntMatrix, mu0, s: int, trace_bound) -> JacobiTheta:
    """Terms of theta_{M, mu0} whose exponent has trace <= trace_bound."""
    if not is_positive_definite(index):
        raise NotPositiveDefiniteIndex(f"{index} is not positive definite")
    mu0 = tuple(tuple(int(x) for x in row) for row in mu0)
    minv = inverse_exact(index.entries())
    per_row = [_row_terms(row, index, trace_bound) for row in mu0]
    terms = []
    for combo in itertools.product(*per_row):
        if sum(e for _, e in combo) > trace_bound:
            continue
        nu = tuple(row for row, _ in combo)
        exp = [[Fraction(v) / 4 for v in row] for row in mat_mul(mat_mul(nu, minv), transpose(nu))]
        terms.append((nu, exp))
    terms.sort(key=lambda t: t[0])
    return JacobiTheta(index, mu0, terms)


def reconstruct(tc: ThetaComponentSet) -> JacobiSlice:
    """Expand sum over mu0 of h_mu0 * theta_{M, mu0} back into slice entries."""
    s = tc.s
    bound = tc.trace_bound
    entries: dict = {}
    for mu0, comp in tc.components.items():
        if not comp.entries:
            continue
        tr_off = sum(comp.offset[i][i] for i in range(s))
        # trace(l0 - offset) >= 0, so the theta exponent alone is capped by bound + tr_off - min trace(l0)
        min_l0 = min(key_trace_s(lk, s) for lk in comp.entries)
        th = jacobi_theta_char(tc.index, mu0, s, bound + tr_off - min_l0)
        for lk, v in comp.entries.items():
            d = matrix_of(lk, s).doubled
            for nu, e in th.terms:
                tot = [[Fraction(d[i][j], 2) - comp.offset[i][j] + e[i][j] for j in range(s)] for i in range(s)]
                if sum(tot[i][i] for i in range(s)) > bound:
                    continue
                doubled = [[2 * x for x in row] for row in tot]
                if any(x.denominator != 1 for row in doubled for x in row):
                    raise InconsistentSlice("reconstructed exponent is not half-integral")
                key = tuple(int(doubled[i][j]) for i in range(s) for j in range(i, s))
                entries[(key, nu)] = entries.get((key, nu), 0) + v
    entries = {k: v for k, v in entries.items() if v}
    return JacobiSlice(tc.parent_degree, tc.r, tc.index, tc.parent_weight, tc.denom_M, bound, entries)


def key_trace_s(key: tuple, s: int) -> int:
    return matrix_of(key, s).trace


def first_mismatch(a: JacobiSlice, b: JacobiSlice):
    """None when the slices agree, else the first differing (l, mu, a-value, b-value)."""
    keys = sorted(set(a.entries) | set(b.entries),
                  key=lambda e: (matrix_of(e[0], a.s).sort_key(), e[1]))
    for k in keys:
        va, vb = a.entries.get(k, 0), b.entries.get(k, 0)
        if va != vb:
            return matrix_of(k[0], a.s), k[1], va, vb
    return None


@dataclass(frozen=True)
class CuspSupport:
    cuspidal: bool
    witness: tuple[HalfIntMatrix, Mu] | None = None


def jacobi_cusp_support(sl: JacobiSlice) -> CuspSupport:
    """True when every nonzero c(l, mu) sits on a positive definite block index."""
    for l, mu, v in sl.items():
        t = embed_block(l, mu, sl.index, schur=False).matrix
        if not is_positive_definite(t):
            return CuspSupport(False, (l, mu))
    return CuspSupport(True, None)
