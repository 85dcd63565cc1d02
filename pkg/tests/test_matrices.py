import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cusplab.errors import NotPositiveDefinite, SingularM, UnsupportedDegree
from cusplab.matrices import (INDEFINITE, POSITIVE_DEFINITE, SEMIDEFINITE_SINGULAR, HalfIntMatrix,
                              UnimodularMatrix, automorph_count, block_matrix, definiteness,
                              det_exact, embed_block, enumerate_classes, gram_transform,
                              is_positive_definite, iter_all_unimodular, minkowski_reduce,
                              reduced_binary_forms, schur_det, short_vectors)

H = HalfIntMatrix


def brute_reduce_binary(t: HalfIntMatrix, bound: int = 4) -> tuple:
    """Smallest (a, c, -b) over all T[U] with small U; the reduced binary form."""
    best = None
    for u in iter_all_unimodular(2, bound):
        d = gram_transform(t, u).doubled
        a, b, c = d[0][0] // 2, d[0][1], d[1][1] // 2
        if 0 <= b <= a <= c:
            key = (a, c, -b)
            best = key if best is None or key < best else best
    return best


@st.composite
def pd_binary(draw, max_entry=12):
    a = draw(st.integers(1, max_entry))
    c = draw(st.integers(1, max_entry))
    lim = 0
    while (lim + 1) ** 2 < 4 * a * c:
        lim += 1
    b = draw(st.integers(-lim, lim))
    return H(((2 * a, b), (b, 2 * c)))


@st.composite
def unimodular2(draw):
    words = draw(st.lists(st.sampled_from([((1, 1), (0, 1)), ((1, 0), (1, 1)), ((0, 1), (1, 0)),
                                            ((-1, 0), (0, 1)), ((1, -1), (0, 1))]), max_size=6))
    u = UnimodularMatrix.identity(2)
    for w in words:
        u = u @ UnimodularMatrix(w)
    return u


# --- construction ---------------------------------------------------------

def test_half_integral_storage():
    t = H.from_entries([[1, Fraction(1, 2)], [Fraction(1, 2), 1]])
    assert t.doubled == ((2, 1), (1, 2))
    assert t.det == Fraction(3, 4)
    assert t.trace == 2
    with pytest.raises(ValueError):
        H(((1, 0), (0, 2)))
    with pytest.raises(ValueError):
        H(((2, 1), (0, 2)))


def test_unimodular_validation():
    with pytest.raises(ValueError):
        UnimodularMatrix(((2, 0), (0, 1)))
    u = UnimodularMatrix(((2, 1), (1, 1)))
    assert (u @ u.inverse()) == UnimodularMatrix.identity(2)


@pytest.mark.parametrize("doubled, expected", [
    (((2, 0), (0, 2)), POSITIVE_DEFINITE),
    (((2, 0), (0, 0)), SEMIDEFINITE_SINGULAR),
    (((2, 3), (3, 2)), INDEFINITE),
    (((0, 0), (0, 0)), SEMIDEFINITE_SINGULAR),
    (((2, 2), (2, 2)), SEMIDEFINITE_SINGULAR),
    (((0, 1), (1, 0)), INDEFINITE),
])
def test_definiteness_examples(doubled, expected):
    assert definiteness(H(doubled)) == expected


def test_definiteness_matches_eigenvalues():
    import numpy as np
    rng = random.Random(3)
    for _ in range(300):
        n = rng.choice([2, 3])
        d = [[0] * n for _ in range(n)]
        for i in range(n):
            d[i][i] = 2 * rng.randint(-1, 4)
            for j in range(i + 1, n):
                d[i][j] = d[j][i] = rng.randint(-4, 4)
        ev = np.linalg.eigvalsh(np.array(d, dtype=float))
        if abs(ev).min() < 1e-9:
            exp = SEMIDEFINITE_SINGULAR if ev.min() > -1e-9 else INDEFINITE
        else:
            exp = POSITIVE_DEFINITE if ev.min() > 0 else INDEFINITE
        assert definiteness(H(tuple(map(tuple, d)))) == exp


# --- reduction ------------------------------------------------------------

def test_reduce_examples():
    r = minkowski_reduce(H(((2, 0), (0, 2))))
    assert r.reduced.doubled == ((2, 0), (0, 2))
    assert r.transform == UnimodularMatrix.identity(2)
    for doubled in (((2, 2), (2, 4)), ((4, 2), (2, 2))):
        r = minkowski_reduce(H(doubled))
        assert r.reduced.doubled == ((2, 0), (0, 2))
        assert gram_transform(H(doubled), r.transform) == r.reduced


def test_reduce_rejects_non_pd():
    with pytest.raises(NotPositiveDefinite):
        minkowski_reduce(H(((2, 0), (0, 0))))


@settings(max_examples=150, deadline=None)
@given(pd_binary(max_entry=6))
def test_reduce_matches_brute_force(t):
    r = minkowski_reduce(t)
    d = r.reduced.doubled
    a, b, c = d[0][0] // 2, d[0][1], d[1][1] // 2
    assert 0 <= b <= a <= c
    assert gram_transform(t, r.transform) == r.reduced
    assert brute_reduce_binary(t) == (a, c, -b)


@settings(max_examples=200, deadline=None)
@given(pd_binary(), unimodular2())
def test_invariants_under_unimodular(t, u):
    tu = gram_transform(t, u)
    assert tu.det == t.det
    assert definiteness(tu) == definiteness(t)
    assert minkowski_reduce(tu).reduced == minkowski_reduce(t).reduced
    assert automorph_count(tu) == automorph_count(t)


def test_ternary_reduction_keeps_successive_minima():
    # ternary reduced forms need not be unique, but for n <= 4 the reduced
    # diagonal is the list of successive minima, a class invariant
    rng = random.Random(11)
    gens = [((1, 1, 0), (0, 1, 0), (0, 0, 1)), ((1, 0, 0), (0, 1, 1), (0, 0, 1)),
            ((0, 1, 0), (1, 0, 0), (0, 0, 1)), ((0, 0, 1), (0, 1, 0), (1, 0, 0)),
            ((-1, 0, 0), (0, 1, 0), (0, 0, 1))]
    for t in [H(((2, 1, 0), (1, 2, 1), (0, 1, 4))), H.diag(1, 2, 3), H(((4, 1, 1), (1, 4, 1), (1, 1, 6)))]:
        diag = [minkowski_reduce(t).reduced.doubled[i][i] for i in range(3)]
        for _ in range(20):
            u = UnimodularMatrix.identity(3)
            for _ in range(rng.randint(1, 6)):
                u = u @ UnimodularMatrix(rng.choice(gens))
            tu = gram_transform(t, u)
            r = minkowski_reduce(tu)
            assert gram_transform(tu, r.transform) == r.reduced
            assert [r.reduced.doubled[i][i] for i in range(3)] == diag
            assert r.reduced.det == t.det


# --- automorphs -----------------------------------------------------------

@pytest.fixture(scope="module")
def gl2_box4():
    return list(iter_all_unimodular(2, 4))


def test_automorph_examples(gl2_box4):
    assert automorph_count(H.diag(1, 1)) == 8
    assert automorph_count(H.diag(1)) == 2
    assert automorph_count(H(((4, 1), (1, 6)))) == 2
    assert automorph_count(H(((2, 1), (1, 2)))) == 12


def test_automorphs_match_brute_force(gl2_box4):
    reps = enumerate_classes(2, 4)
    assert reps
    for t in reps:
        brute = sum(1 for u in gl2_box4 if gram_transform(t, u) == t)
        assert automorph_count(t) == brute, t


def test_automorph_ternary_brute_force():
    units = list(iter_all_unimodular(3, 1))
    for t in (H.diag(1, 1, 1), H(((2, 1, 0), (1, 2, 0), (0, 0, 2))), H.diag(1, 1, 2)):
        brute = sum(1 for u in units if gram_transform(t, u) == t)
        assert automorph_count(t) == brute
    assert automorph_count(H.diag(1, 1, 1)) == 48


def test_short_vectors_against_box():
    t = H(((4, 1), (1, 6)))
    got = {v: q for v, q in short_vectors(t, 10)}
    want = {}
    for x in itertools.product(range(-6, 7), repeat=2):
        q = Fraction(sum(x[i] * t.doubled[i][j] * x[j] for i in range(2) for j in range(2)), 2)
        if q <= 10:
            want[x] = q
    assert got == want


# --- class enumeration ----------------------------------------------------

def brute_classes(det_bound: Fraction) -> list[tuple]:
    """Forms with det <= D split into GL2(Z)-orbits by graph search inside a box.

    Each form reaches its reduced representative by trace-decreasing moves, so
    one box component per class survives; no reduction code is used here.
    """
    box = 4 * det_bound + 4
    nodes = set()
    for a in range(1, int(box) + 1):
        for c in range(1, int(box) + 1):
            for b in range(-2 * int(box), 2 * int(box) + 1):
                if 0 < 4 * a * c - b * b <= 4 * det_bound:
                    nodes.add((a, b, c))
    moves = [
        lambda a, b, c: (c, b, a),                    # swap
        lambda a, b, c: (a, -b, c),                   # sign
        lambda a, b, c: (a, b + 2 * a, a + b + c),    # shear by +1
        lambda a, b, c: (a, b - 2 * a, a - b + c),    # shear by -1
    ]
    seen, comps = set(), []
    for s in sorted(nodes):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            comp.append(x)
            for mv in moves:
                y = mv(*x)
                if y in nodes and y not in seen:
                    seen.add(y)
                    stack.append(y)
        comps.append(comp)
    return comps


@pytest.mark.parametrize("bound", [Fraction(1), Fraction(3), Fraction(15, 2), Fraction(12)])
def test_enumerate_classes_matches_orbit_oracle(bound):
    comps = brute_classes(bound)
    reps = enumerate_classes(2, bound)
    assert len(reps) == len(comps)
    where = {x: i for i, comp in enumerate(comps) for x in comp}
    hit = sorted(where[(t.doubled[0][0] // 2, t.doubled[0][1], t.doubled[1][1] // 2)] for t in reps)
    assert hit == list(range(len(comps)))


def test_enumerate_classes_examples():
    assert [t.doubled for t in enumerate_classes(1, 3)] == [((2,),), ((4,),), ((6,),)]
    assert [t.doubled for t in enumerate_classes(2, 1)] == [((2, 0), (0, 2)), ((2, 1), (1, 2))]
    # det T = 3/4 is the smallest binary determinant; 0.5 admits no class
    assert enumerate_classes(2, Fraction(1, 2)) == []
    assert [t.doubled for t in enumerate_classes(2, Fraction(3, 4))] == [((2, 1), (1, 2))]
    with pytest.raises(UnsupportedDegree):
        enumerate_classes(3, 2)


def test_enumerate_classes_count_grows():
    counts = [len(enumerate_classes(2, d)) for d in (1, 5, 20, 100)]
    assert counts == sorted(counts) and counts[-1] > counts[0]
    assert len(enumerate_classes(2, 100)) == 936


def test_reduced_binary_forms_agrees_with_enumeration():
    reps, beyond = reduced_binary_forms(100, 0, 50)
    assert beyond == 0
    assert sorted(t.doubled for t in reps) == sorted(t.doubled for t in enumerate_classes(2, 50))
    reps, beyond = reduced_binary_forms(10, 0, 50)
    assert len(reps) + beyond == len(enumerate_classes(2, 50))
    assert all(t.trace <= 10 for t in reps)


# --- block embedding ------------------------------------------------------

def test_embed_block_examples():
    e = embed_block(H.diag(1), [[1]], H.diag(1))
    assert e.matrix.doubled == ((2, 1), (1, 2))
    assert e.det == e.det_schur == Fraction(3, 4)
    e = embed_block(H.diag(2), [[0]], H.diag(3))
    assert e.det == 6
    with pytest.raises(SingularM):
        schur_det([[1]], [[0]], [[0]])


def test_schur_identity_random_rational():
    rng = random.Random(2024)
    for _ in range(1000):
        s, r = rng.choice([(1, 1), (1, 2), (2, 1), (2, 2)])
        rat = lambda: Fraction(rng.randint(-9, 9), rng.randint(1, 6))
        a = [[rat() for _ in range(s)] for _ in range(s)]
        mu = [[rat() for _ in range(r)] for _ in range(s)]
        m = [[rat() for _ in range(r)] for _ in range(r)]
        if det_exact(m) == 0:
            continue
        assert schur_det(a, mu, m) == det_exact(block_matrix(a, mu, m))


def test_gram_transform_examples():
    t = H.diag(1, 1)
    assert gram_transform(t, UnimodularMatrix.identity(2)) == t
    assert gram_transform(t, UnimodularMatrix(((1, 1), (0, 1)))).doubled == ((2, 2), (2, 4))
    assert is_positive_definite(t)


@pytest.mark.parametrize("tb, lo, hi", [(3, 0, 200), (6, Fraction(7, 3), Fraction(1234567, 1000)), (1, 5, 60)])
def test_reduced_binary_forms_bulk_count(tb, lo, hi):
    reps, beyond = reduced_binary_forms(tb, lo, hi)
    want = [t for t in enumerate_classes(2, hi) if t.det >= lo]
    assert len(reps) + beyond == len(want)
    assert sorted(t.doubled for t in reps) == sorted(t.doubled for t in want if t.trace <= tb)
