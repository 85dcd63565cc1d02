"""Even lattices and their theta series in any degree.

Two independent routes compute representation numbers
    a(T) = #{X in Z^{m x n} : (1/2) X^t G X = T}.

* ``gram`` route: exact Fincke-Pohst short vectors of the Gram matrix, then
  combined into n-tuples.  Works for every even lattice; cost grows with the
  number of tuples.
* ``model`` route: if the lattice comes with a coordinate model (a union of
  cosets of D_m inside (1/2 Z)^m, with Q(v) = |v|^2/2), the counts factor over
  coordinates and a dynamic program over (|w|^2, |w'|^2, w.w') does the work.
  Used for E8 and D4 in degree <= 2, where pair enumeration would be hopeless.

The model is checked against the Gram matrix when the lattice is built, and
the tests compare both routes at small trace.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotPositiveDefinite
from .matrices import HalfIntMatrix, det_exact, is_positive_definite, short_vectors
from .qexp import FourierExpansion, HalfWeight


@dataclass(frozen=True)
class CosetClass:
    """Vectors v = w/2 with every w_i = parity (mod 2) and sum(w) = residue (mod 4)."""
    parity: int
    residue: int


@dataclass(frozen=True)
class CoordinateModel:
    dim: int
    cosets: tuple[CosetClass, ...]
    basis_w: tuple[tuple[int, ...], ...]   # basis rows, doubled coordinates

    def contains(self, w) -> bool:
        return any(all((x - c.parity) % 2 == 0 for x in w) and (sum(w) - c.residue) % 4 == 0
                   for c in self.cosets)


@dataclass(frozen=True)
class LatticeGram:
    gram: tuple[tuple[int, ...], ...]
    name: str = ""
    model: CoordinateModel | None = field(default=None, compare=False)

    def __post_init__(self):
        g = tuple(tuple(int(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", g)
        t = HalfIntMatrix(g)   # symmetric, even diagonal
        if not is_positive_definite(t):
            raise NotPositiveDefinite(f"Gram matrix of {self.name or 'lattice'} is not positive definite")
        if self.model is not None:
            _check_model(g, self.model)

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def form(self) -> HalfIntMatrix:
        """The quadratic form Q(x) = x^t G x / 2 as a half-integral matrix (its double is G)."""
        return HalfIntMatrix._trusted(self.gram)


def _check_model(gram, model: CoordinateModel) -> None:
    b = model.basis_w
    m = model.dim
    if len(b) != len(gram) or any(len(r) != m for r in b):
        raise ValueError("model basis has the wrong shape")
    for i in range(m):
        for j in range(m):
            # (w_i . w_j) / 4 = v_i . v_j
            if sum(x * y for x, y in zip(b[i], b[j])) != 4 * gram[i][j]:
                raise ValueError("model basis does not reproduce the Gram matrix")
    if not all(model.contains(r) for r in b):
        raise ValueError("model basis leaves the model")
    # D_m has covolume 2; a union of c cosets has covolume 2/c.  Equal covolume
    # plus containment means the basis spans the whole model.
    covol = abs(Fraction(det_exact(b), 2 ** m))
    if covol != Fraction(2, len(model.cosets)):
        raise ValueError(f"covolume {covol} does not match the model")


def e8() -> LatticeGram:
    cartan = [[0] * 8 for _ in range(8)]
    for i in range(8):
        cartan[i][i] = 2
    for i, j in [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)]:
        cartan[i][j] = cartan[j][i] = -1
    basis = [(1, -1, -1, -1, -1, -1, -1, 1), (2, 2, 0, 0, 0, 0, 0, 0)]
    for i in range(2, 8):
        row = [0] * 8
        row[i - 1], row[i - 2] = 2, -2
        basis.append(tuple(row))
    model = CoordinateModel(8, (CosetClass(0, 0), CosetClass(1, 0)), tuple(basis))
    return LatticeGram(tuple(map(tuple, cartan)), "E8", model)


def d4() -> LatticeGram:
    basis = [(2, -2, 0, 0), (0, 2, -2, 0), (0, 0, 2, -2), (0, 0, 2, 2)]
    gram = [[sum(x * y for x, y in zip(a, b)) // 4 for b in basis] for a in basis]
    return LatticeGram(tuple(map(tuple, gram)), "D4",
                       CoordinateModel(4, (CosetClass(0, 0),), tuple(basis)))


def a2() -> LatticeGram:
    return LatticeGram(((2, -1), (-1, 2)), "A2")


# --- gram route -------------------------------------------------------------

def theta_gram_route(lat: LatticeGram, degree: int, trace_bound: int) -> dict[tuple, int]:
    """Representation numbers keyed by the flattened upper triangle of 2T."""
    vecs = short_vectors(lat.form, trace_bound)
    if degree == 1:
        hist = Counter(q for _, q in vecs)
        return {(2 * q,): c for q, c in hist.items()}
    x = np.array([v for v, _ in vecs], dtype=np.int64)
    norms = np.array([q for _, q in vecs], dtype=np.int64)
    g = np.array(lat.gram, dtype=np.int64)
    gx = x @ g
    if degree == 2:
        inner = gx @ x.T           # x^t G y = doubled off-diagonal entry
        ok = norms[:, None] + norms[None, :] <= trace_bound
        ii, jj = np.nonzero(ok)
        stack = np.stack([2 * norms[ii], inner[ii, jj], 2 * norms[jj]], axis=1)
        keys, counts = np.unique(stack, axis=0, return_counts=True)
        return {tuple(int(v) for v in k): int(c) for k, c in zip(keys, counts)}
    out: Counter = Counter()
    order = np.argsort(norms, kind="stable")
    x, norms, gx = x[order], norms[order], gx[order]
    inner = gx @ x.T

    def rec(chosen: list[int], used: int) -> None:
        if len(chosen) == degree:
            key = tuple(int(inner[chosen[i], chosen[j]]) for i in range(degree) for j in range(i, degree))
            out[key] += 1
            return
        room = trace_bound - used
        for idx in range(len(norms)):
            if norms[idx] > room:
                break
            chosen.append(idx)
            rec(chosen, used + int(norms[idx]))
            chosen.pop()

    rec([], 0)
    return dict(out)


# --- model route ------------------------------------------------------------

def _coset_values(c: CosetClass, wmax: int) -> list[int]:
    return [w for w in range(-wmax, wmax + 1) if (w - c.parity) % 2 == 0]


def _sign(w: int) -> int:
    # i^w = s(w) for even w and i * s(w) for odd w
    return -1 if ((w // 2) if w % 2 == 0 else (w - 1) // 2) % 2 else 1


def _residue_weights(c: CosetClass, dim: int) -> tuple[int, int]:
    """Indicator of sum(w) = residue (mod 4) as (1 + eps * prod s(w_i)) / 2."""
    exponent = dim * c.parity - c.residue      # even by construction
    eps = 1 if (exponent // 2) % 2 == 0 else -1
    return 1, eps


def _model_deg1(model: CoordinateModel, trace_bound: int) -> dict[tuple, int]:
    a_max = 8 * trace_bound
    wmax = math.isqrt(a_max)
    total: Counter = Counter()
    for c in model.cosets:
        vals = _coset_values(c, wmax)
        base = min(w * w for w in vals)
        g = 4 if c.parity == 0 else 8
        size = (a_max - model.dim * base) // g + 1
        if size <= 0:
            continue
        _, eps = _residue_weights(c, model.dim)
        arr = np.zeros((2, size), dtype=np.int64)
        arr[:, 0] = 1
        for _ in range(model.dim):
            new = np.zeros_like(arr)
            for w in vals:
                da = (w * w - base) // g
                if da >= size:
                    continue
                new[0, da:] += arr[0, :size - da]
                new[1, da:] += _sign(w) * arr[1, :size - da]
            arr = new
        counts = arr[0] + eps * arr[1]
        for i in np.nonzero(counts)[0]:
            a = model.dim * base + g * int(i)          # |w|^2 = 8 Q(v)
            total[(a // 4,)] += int(counts[i]) // 2
    return dict(total)


def _model_deg2(model: CoordinateModel, trace_bound: int) -> dict[tuple, int]:
    lim = 8 * trace_bound                              # |w|^2 + |w'|^2 <= lim
    wmax = math.isqrt(lim)
    m = model.dim
    total: Counter = Counter()
    for c1, c2 in itertools.product(model.cosets, repeat=2):
        v1, v2 = _coset_values(c1, wmax), _coset_values(c2, wmax)
        b1, b2 = min(w * w for w in v1), min(w * w for w in v2)
        if m * (b1 + b2) > lim:
            continue
        g1 = 4 if c1.parity == 0 else 8
        g2 = 4 if c2.parity == 0 else 8
        dbase = 1 if (c1.parity and c2.parity) else 0
        gd = {0: 4, 1: 2, 2: 2}[c1.parity + c2.parity]
        n1 = (lim - m * (b1 + b2)) // g1 + 1
        n2 = (lim - m * (b1 + b2)) // g2 + 1
        # compressed dot d' = (w.w' - k*dbase)/gd after k coordinates; |w.w'| <= lim/2
        dlo = -((lim // 2 + m) // gd) - 1
        dhi = (lim // 2) // gd + 1
        nd = dhi - dlo + 1
        _, e1 = _residue_weights(c1, m)
        _, e2 = _residue_weights(c2, m)
        arr = np.zeros((4, n1, n2, nd), dtype=np.int64)
        arr[:, 0, 0, -dlo] = 1
        moves = []
        for w1 in v1:
            da = (w1 * w1 - b1) // g1
            if da >= n1:
                continue
            for w2 in v2:
                dc = (w2 * w2 - b2) // g2
                if dc >= n2:
                    continue
                dd = (w1 * w2 - dbase) // gd
                s1, s2 = _sign(w1), _sign(w2)
                moves.append((da, dc, dd, np.array([1, s1, s2, s1 * s2], dtype=np.int64)))
        for _ in range(m):
            new = np.zeros_like(arr)
            for da, dc, dd, wt in moves:
                if dd >= 0:
                    src = arr[:, :n1 - da, :n2 - dc, :nd - dd]
                    new[:, da:, dc:, dd:] += wt[:, None, None, None] * src
                else:
                    src = arr[:, :n1 - da, :n2 - dc, -dd:]
                    new[:, da:, dc:, :nd + dd] += wt[:, None, None, None] * src
            arr = new
        counts = arr[0] + e1 * arr[1] + e2 * arr[2] + e1 * e2 * arr[3]
        for i, j, k in zip(*np.nonzero(counts)):
            a = m * b1 + g1 * int(i)
            cc = m * b2 + g2 * int(j)
            d = m * dbase + gd * (int(k) + dlo)
            if a + cc > lim:
                continue
            total[(a // 4, d // 4, cc // 4)] += int(counts[i, j, k]) // 4
    return {k: v for k, v in total.items() if v}


def lattice_theta(lat: LatticeGram, degree: int, trace_bound: int, route: str = "auto") -> FourierExpansion:
    """Degree-n theta series of an even lattice, weight rank/2, M = 1."""
    if degree < 1:
        raise ValueError("degree must be at least 1")
    if route == "auto":
        route = "model" if lat.model is not None and degree <= 2 else "gram"
    if route == "model":
        if lat.model is None or degree > 2:
            raise ValueError("model route needs a coordinate model and degree <= 2")
        c = _model_deg1(lat.model, trace_bound) if degree == 1 else _model_deg2(lat.model, trace_bound)
    else:
        c = theta_gram_route(lat, degree, trace_bound)
    return FourierExpansion._raw(degree, HalfWeight(lat.rank), 1, trace_bound, c)
