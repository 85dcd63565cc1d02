import cmath
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cusplab.corpus import delta, eisenstein_deg1, unary_theta
from cusplab.errors import IncompatibleShapes, NonPositiveY, TruncationExceeded
from cusplab.matrices import HalfIntMatrix, UnimodularMatrix, gram_transform
from cusplab.qexp import (FourierExpansion, HalfWeight, add, constant, dilate, evaluate, evaluate_on_ray,
                          from_series, key_of, matrix_of, multiply, normalize_denominator, pullback,
                          rescale, restrict, scale, series, support_verdict, zero)

H = HalfIntMatrix


def psd_keys(n: int, tb: int) -> list[HalfIntMatrix]:
    """All positive semidefinite 2T with trace(T) <= tb, n = 1, 2."""
    if n == 1:
        return [H(((2 * a,),)) for a in range(tb + 1)]
    out = []
    for a in range(tb + 1):
        for c in range(tb + 1 - a):
            b = 0
            while b * b <= 4 * a * c:
                out.extend({H(((2 * a, b), (b, 2 * c))), H(((2 * a, -b), (-b, 2 * c)))})
                b += 1
    return out


def random_expansion(rng: random.Random, n: int, tb: int, twice_k: int = 0, density=0.5, frac=False):
    coeffs = {}
    for t in psd_keys(n, tb):
        if rng.random() < density:
            v = rng.randint(-5, 5)
            coeffs[t] = Fraction(v, rng.randint(1, 3)) if frac else v
    return FourierExpansion(n, HalfWeight(twice_k), 1, tb, coeffs)


def naive_product(f: FourierExpansion, g: FourierExpansion) -> dict:
    out = {}
    for t1, a in f.items():
        for t2, b in g.items():
            t = t1 + t2
            if t.trace <= min(f.trace_bound, g.trace_bound):
                out[t] = out.get(t, 0) + a * b
    return {t: v for t, v in out.items() if v}


def pullback_law_case(rng: random.Random, f: FourierExpansion, u, v) -> None:
    """pullback(pullback(F,U),V) = pullback(F, VU) where every step is inside the bound."""
    left = pullback(pullback(f, u), v)
    right = pullback(f, v @ u)
    b = f.trace_bound
    for t in psd_keys(2, b):
        tv = gram_transform(t, v)
        tvu = gram_transform(tv, u)
        if tv.trace <= b and tvu.trace <= b:
            want = f.coefficient(tvu)
            assert left.coefficient(t) == want
            assert right.coefficient(t) == want


GENS = [((1, 1), (0, 1)), ((1, 0), (1, 1)), ((0, 1), (1, 0)), ((-1, 0), (0, 1)), ((1, -1), (0, 1))]


def random_unimodular(rng) -> UnimodularMatrix:
    u = UnimodularMatrix.identity(2)
    for _ in range(rng.randint(0, 3)):
        u = u @ UnimodularMatrix(rng.choice(GENS))
    return u


# --- construction and invariants -------------------------------------------

def test_half_weight():
    w = HalfWeight.of(Fraction(1, 2))
    assert w.twice_k == 1 and w.k == Fraction(1, 2)
    assert (w + HalfWeight.of(4)).k == Fraction(9, 2)
    with pytest.raises(ValueError):
        HalfWeight.of(Fraction(1, 3))


def test_keys_validated():
    with pytest.raises(ValueError):
        FourierExpansion(2, 0, 1, 5, {H(((2, 3), (3, 2))): 1})
    with pytest.raises(TruncationExceeded):
        FourierExpansion(1, 0, 1, 2, {H(((6,),)): 1})
    with pytest.raises(IncompatibleShapes):
        FourierExpansion(2, 0, 1, 2, {(2,): 1})
    f = FourierExpansion(1, 0, 1, 3, {H(((2,),)): 0, H(((4,),)): 5})
    assert len(f) == 1


def test_key_roundtrip():
    for t in psd_keys(2, 4):
        assert matrix_of(key_of(t), 2) == t


def test_coefficient_access():
    f = from_series([1, 2, 0, 3], 0)
    assert f[1] == 2 and f[2] == 0 and f.coefficient(3) == 3
    with pytest.raises(TruncationExceeded):
        f.coefficient(4)
    assert series(f) == [1, 2, 0, 3]


# --- add / scale --------------------------------------------------------------

def test_add_scale_examples():
    f = delta(30)
    assert f + zero(1, 12, 1, 30) == f
    assert scale(f, 0).is_zero()
    assert add(f, scale(f, -1)).is_zero()
    with pytest.raises(IncompatibleShapes):
        add(f, eisenstein_deg1(4, 30))


def test_add_takes_min_bound():
    f = delta(30)
    g = delta(10)
    assert (f + g).trace_bound == 10
    assert (f + g) == scale(delta(10), 2)


# --- multiply ------------------------------------------------------------------

def test_multiply_examples():
    th = unary_theta(30)
    one = constant(1, 1, 0, 1, 30)
    assert multiply(th, one) == th
    sq = multiply(th, th)
    assert sq.k == 1
    assert sq[1] == 4 and sq[2] == 4 and sq[3] == 0 and sq[5] == 8
    # r_2(n) by pair counting
    for n in range(31):
        assert sq[n] == sum(1 for x in range(-6, 7) for y in range(-6, 7) if x * x + y * y == n)


@pytest.mark.parametrize("n, tb", [(1, 12), (2, 5)])
def test_multiply_matches_naive(n, tb):
    rng = random.Random(n * 100 + tb)
    for _ in range(15):
        f = random_expansion(rng, n, tb, 2, frac=True)
        g = random_expansion(rng, n, tb - rng.randint(0, 2), 3)
        p = multiply(f, g)
        assert p.coeffs == naive_product(f, g)
        assert p.weight.twice_k == 5
        assert p.trace_bound == g.trace_bound


def test_dense_product_path_matches_sparse():
    from cusplab import qexp
    rng = random.Random(5)
    f = random_expansion(rng, 2, 14, density=0.9)
    g = random_expansion(rng, 2, 14, density=0.9)
    bound = 14
    assert qexp._multiply_dense2(f, g, bound) == qexp._multiply_sparse(f, g, bound)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_ring_laws(seed, n):
    rng = random.Random(seed)
    tb = 8 if n == 1 else 3
    f, g, h = (random_expansion(rng, n, tb, frac=(i == 0)) for i in range(3))
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f + g) + h == f + (g + h)


def test_mixed_denominators():
    f = FourierExpansion(1, 0, 2, 4, {H(((2,),)): 1})    # q^{1/2}
    g = FourierExpansion(1, 0, 3, 4, {H(((2,),)): 1})    # q^{1/3}
    p = multiply(f, g)
    assert p.denom_M == 6
    assert p.coeffs == {H(((10,),)): 1}                   # q^{5/6}
    s = add(f, g)
    assert s.denom_M == 6 and len(s) == 2
    assert normalize_denominator(rescale(f, 8)) == f


def test_restrict():
    f = delta(40)
    assert restrict(f, 10) == delta(10)
    assert restrict(f, 50) is f


# --- dilate ---------------------------------------------------------------------

def test_dilate_examples():
    d = delta(40)
    assert dilate(d, 1) == d
    d2 = dilate(d, 2)
    assert d2[2] == 1 and d2[1] == 0 and d2[4] == -24
    t4 = dilate(unary_theta(100), 4)
    assert all(n % 4 == 0 and math.isqrt(n // 4) ** 2 == n // 4 for (n,) in
               ((k[0] // 2,) for k, _ in t4.items_raw()))


def test_dilate_keeps_denominator_bookkeeping():
    f = FourierExpansion(1, 0, 4, 8, {H(((2,),)): 1, H(((6,),)): 2})   # q^{1/4} + 2 q^{3/4}
    g = dilate(f, 2)                                                   # q^{1/2} + 2 q^{3/2}
    assert g.denom_M == 2
    assert g.coeffs == {H(((2,),)): 1, H(((6,),)): 2}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_dilate_is_multiplicative(seed, d):
    rng = random.Random(seed)
    f = random_expansion(rng, 1, 20)
    g = random_expansion(rng, 1, 20)
    assert dilate(multiply(f, g), d) == multiply(dilate(f, d), dilate(g, d))


def test_convolution_identity_small():
    f = eisenstein_deg1(4, 60)
    g = multiply(dilate(f, 4), unary_theta(60))
    a = series(f)
    for n in range(61):
        want = 0
        for m in range(-math.isqrt(n), math.isqrt(n) + 1):
            rest = n - m * m
            if rest % 4 == 0:
                want += a[rest // 4]
        assert g[n] == want


# --- pullback ---------------------------------------------------------------------

def test_pullback_identity_and_single_index():
    rng = random.Random(1)
    f = random_expansion(rng, 2, 4)
    assert pullback(f, UnimodularMatrix.identity(2)) == f
    one = FourierExpansion(2, 0, 1, 6, {H.diag(1, 1): 1})
    u = UnimodularMatrix(((1, 1), (0, 1)))
    p = pullback(one, u)
    # the coefficient at T is a(T[U]); I2[U^-1] is the unique T with T[U] = I2
    t = gram_transform(H.diag(1, 1), u.inverse())
    assert p.coeffs == {t: 1}
    assert gram_transform(t, u) == H.diag(1, 1)


def test_pullback_right_action():
    rng = random.Random(77)
    for _ in range(60):
        f = random_expansion(rng, 2, 5)
        pullback_law_case(rng, f, random_unimodular(rng), random_unimodular(rng))


def test_pullback_invariance_of_theta(d4_deg2):
    f = d4_deg2
    for u in (UnimodularMatrix(((1, 1), (0, 1))), UnimodularMatrix(((0, 1), (1, 0))),
              UnimodularMatrix(((1, 0), (-2, 1)))):
        p = pullback(f, u)
        checked = 0
        for t in psd_keys(2, f.trace_bound):
            if gram_transform(t, u).trace <= f.trace_bound:
                assert p.coefficient(t) == f.coefficient(t)
                checked += 1
        assert checked > 50


# --- support verdict ------------------------------------------------------------------

def test_support_verdict():
    assert support_verdict(delta(50)).all_positive_definite
    v = support_verdict(eisenstein_deg1(4, 10))
    assert not v.all_positive_definite and v.witness == H(((0,),))
    assert support_verdict(zero(2)).all_positive_definite


# --- evaluate -------------------------------------------------------------------------

def test_evaluate_trivial():
    assert evaluate(zero(2, 0, 1, 5), np.zeros((2, 2)), np.eye(2)) == 0
    c = constant(2, 1, 0, 1, 5)
    assert evaluate(c, [[0.3, 0.1], [0.1, -0.2]], [[1, 0.2], [0.2, 0.7]]) == 1
    with pytest.raises(NonPositiveY):
        evaluate(c, np.zeros((2, 2)), [[1, 2], [2, 1]])


def test_evaluate_theta_direct_sum():
    th = unary_theta(200)
    for x, y in ((0.0, 1.0), (0.3, 0.2), (-0.4, 0.05)):
        direct = sum(cmath.exp(2j * math.pi * m * m * complex(x, y)) for m in range(-60, 61))
        assert abs(evaluate(th, [[x]], [[y]]) - direct) < 1e-10


def test_evaluate_degree2_direct_sum(d4_deg2):
    # independent route: sum over pairs of D4 vectors, truncated by trace
    from cusplab.lattices import d4
    from cusplab.matrices import short_vectors
    lat = d4()
    tb = 4
    f = restrict(d4_deg2, tb)
    vecs = np.array([v for v, _ in short_vectors(lat.form, tb)], dtype=float)
    g = np.array(lat.gram, dtype=float)
    x = np.array([[0.1, 0.2], [0.2, -0.3]])
    y = np.array([[0.6, 0.1], [0.1, 0.5]])
    z = x + 1j * y
    inner = vecs @ g @ vecs.T / 2
    q = np.diag(inner)
    tr = q[:, None] + q[None, :]
    phase = q[:, None] * z[0, 0] + q[None, :] * z[1, 1] + 2 * inner * z[0, 1]
    total = np.exp(2j * np.pi * phase)[tr <= tb + 1e-9].sum()
    assert abs(evaluate(f, x, y) - total) < 1e-9


def test_evaluate_on_ray_matches_pointwise():
    f = delta(60)
    xs = np.array([[[0.1]], [[0.37]], [[-0.2]]])
    vals = evaluate_on_ray(f, xs, 0.3)
    for xv, v in zip(xs, vals):
        assert abs(v - evaluate(f, xv, [[0.3]])) < 1e-12
