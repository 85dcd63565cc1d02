"""Ground-truth forms built from first principles.

Degree 1: unary theta, Eisenstein series from divisor sums, the discriminant
from Euler's product.  Degree 2: lattice theta series, the ten even theta
constants and the weight-10 cusp form obtained from their squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import BadWeight, OddCharacteristic
from .lattices import d4, e8, lattice_theta
from .qexp import (FourierExpansion, HalfWeight, from_series, multiply, normalize_denominator,
                   scale, support_verdict)


def unary_theta(trace_bound: int) -> FourierExpansion:
    """theta(tau) = sum_{m in Z} q^{m^2}."""
    a = [0] * (trace_bound + 1)
    m = 0
    while m * m <= trace_bound:
        a[m * m] += 1 if m == 0 else 2
        m += 1
    return from_series(a, HalfWeight(1), trace_bound)


def divisor_sigma_table(power: int, n_max: int) -> list[int]:
    """sigma_power(n) for n = 0..n_max (entry 0 is 0)."""
    out = [0] * (n_max + 1)
    for d in range(1, n_max + 1):
        dp = d ** power
        for mult in range(d, n_max + 1, d):
            out[mult] += dp
    return out


@lru_cache(maxsize=None)
def bernoulli(m: int) -> Fraction:
    """B_m with B_1 = -1/2, from sum_{j<=m} C(m+1, j) B_j = 0."""
    if m == 0:
        return Fraction(1)
    s = sum((math.comb(m + 1, j) * bernoulli(j) for j in range(m)), Fraction(0))
    return -s / (m + 1)


def eisenstein_deg1(k: int, trace_bound: int, normalization: str = "raw") -> FourierExpansion:
    """Level-one Eisenstein series of even weight k >= 4.

    ``raw``:       -B_k/(2k) + sum sigma_{k-1}(n) q^n
    ``classical``: 1 - (2k/B_k) sum sigma_{k-1}(n) q^n
    The two differ by the scalar -2k/B_k.
    """
    if k < 4 or k % 2:
        raise BadWeight(f"Eisenstein series needs even k >= 4, got {k}")
    sig = divisor_sigma_table(k - 1, trace_bound)
    a: list = list(sig)
    a[0] = -bernoulli(k) / (2 * k)
    f = from_series(a, HalfWeight(2 * k), trace_bound)
    if normalization == "raw":
        return f
    if normalization == "classical":
        return scale(f, -Fraction(2 * k) / bernoulli(k))
    raise ValueError(f"unknown normalization {normalization!r}")


def _pentagonal(n_max: int) -> dict[int, int]:
    """prod_{n>=1} (1 - q^n) = sum_k (-1)^k q^{k(3k-1)/2}, k over Z."""
    out = {}
    k = 0
    while True:
        e1, e2 = k * (3 * k - 1) // 2, k * (3 * k + 1) // 2
        if e1 > n_max:
            break
        sgn = -1 if k % 2 else 1
        out[e1] = sgn
        if e2 <= n_max:
            out[e2] = sgn
        k += 1
    return out


def delta(trace_bound: int) -> FourierExpansion:
    """q prod (1 - q^n)^24, exact to q^trace_bound."""
    n = max(trace_bound - 1, 0)
    sparse = sorted(_pentagonal(n).items())
    acc = np.zeros(n + 1, dtype=object)
    acc[0] = 1
    for _ in range(24):
        new = np.zeros(n + 1, dtype=object)
        for e, s in sparse:
            new[e:] += s * acc[:n + 1 - e]
        acc = new
    a = [0] + [int(v) for v in acc]
    return from_series(a[:trace_bound + 1], HalfWeight(24), trace_bound)


# --- genus 2 theta constants -------------------------------------------------

@dataclass(frozen=True)
class ThetaCharacteristic:
    """Characteristic (a, b) with a, b in {0, 1/2}^2, stored as bit pairs 2a and 2b."""
    top: tuple[int, int]
    bottom: tuple[int, int]

    def __post_init__(self):
        if any(x not in (0, 1) for x in self.top + self.bottom):
            raise ValueError("characteristic bits must be 0 or 1")

    @property
    def a(self) -> tuple[Fraction, Fraction]:
        return tuple(Fraction(x, 2) for x in self.top)

    @property
    def b(self) -> tuple[Fraction, Fraction]:
        return tuple(Fraction(x, 2) for x in self.bottom)

    @property
    def is_even(self) -> bool:
        return (self.top[0] * self.bottom[0] + self.top[1] * self.bottom[1]) % 2 == 0

    @property
    def label(self) -> str:
        return "".join(map(str, self.top + self.bottom))


def all_characteristics() -> list[ThetaCharacteristic]:
    bits = [(0, 0), (0, 1), (1, 0), (1, 1)]
    return [ThetaCharacteristic(t, b) for t in bits for b in bits]


def even_characteristics() -> list[ThetaCharacteristic]:
    return [c for c in all_characteristics() if c.is_even]


def theta_constant(c: ThetaCharacteristic, trace_bound: int) -> FourierExpansion:
    """sum_{x in Z^2} e(((x+a)^t Z (x+a))/2 + (x+a)^t b), degree 2, weight 1/2, M = 8.

    With w = 2(x + a) the term is i^{w.2b} e(tr(w w^t Z)/8), so the index is
    w w^t and the bound is on |w|^2.
    """
    if not c.is_even:
        raise OddCharacteristic(f"characteristic {c.label} is odd")
    p, q = c.top, c.bottom
    r = math.isqrt(trace_bound) + 1
    coeffs: dict[tuple, int] = {}
    unit = (1, 0, -1, 0)   # real part of i^e
    for w1 in range(-r, r + 1):
        if (w1 - p[0]) % 2:
            continue
        for w2 in range(-r, r + 1):
            if (w2 - p[1]) % 2 or w1 * w1 + w2 * w2 > trace_bound:
                continue
            key = (2 * w1 * w1, 2 * w1 * w2, 2 * w2 * w2)
            coeffs[key] = coeffs.get(key, 0) + unit[(w1 * q[0] + w2 * q[1]) % 4]
    # the imaginary parts cancel between w and -w
    coeffs = {k: v for k, v in coeffs.items() if v}
    return FourierExpansion._raw(2, HalfWeight(1), 8, trace_bound, coeffs)


def genus2_cusp_candidate(trace_bound: int) -> FourierExpansion:
    """Product of the squares of the ten even theta constants, weight 10, M = 1.

    Scaled so the first nonzero coefficient (trace, then entries) is 1.  The
    result is certified here: all-positive-definite support and vanishing
    Siegel Phi within the truncation.
    """
    from .jacobi import siegel_phi

    tb8 = 8 * trace_bound
    acc = None
    for c in even_characteristics():
        th = theta_constant(c, tb8)
        for _ in range(2):
            acc = th if acc is None else multiply(acc, th)
    f = normalize_denominator(acc)
    if f.denom_M != 1 or f.trace_bound != trace_bound:
        raise AssertionError("theta product did not normalise to exponent denominator 1")
    items = f.items_raw()
    if items:
        f = scale(f, Fraction(1) / Fraction(items[0][1]))
    if not support_verdict(f).all_positive_definite or not siegel_phi(f).is_zero():
        raise AssertionError("theta product failed its cuspidality certificate")
    return f


# --- registry ---------------------------------------------------------------

@dataclass(frozen=True)
class CorpusSpec:
    label: str
    degree: int
    expected_cuspidal: bool
    build: Callable[[int], FourierExpansion]
    trace_cap: int | None = None
    description: str = ""

    def trace_for(self, trace: int) -> int:
        return trace if self.trace_cap is None else min(trace, self.trace_cap)


def _registry() -> list[CorpusSpec]:
    lat_e8, lat_d4 = e8(), d4()
    specs = [
        CorpusSpec("delta", 1, True, delta, description="discriminant, weight 12"),
        CorpusSpec("e4", 1, False, lambda b: eisenstein_deg1(4, b), description="Eisenstein k=4, sigma_3 coefficients"),
        CorpusSpec("e6", 1, False, lambda b: eisenstein_deg1(6, b), description="Eisenstein k=6, sigma_5 coefficients"),
        CorpusSpec("theta", 1, False, unary_theta, description="unary theta, weight 1/2"),
        CorpusSpec("theta-e8-deg1", 1, False, lambda b: lattice_theta(lat_e8, 1, b), description="E8 theta series"),
        CorpusSpec("theta-e8-deg2", 2, False, lambda b: lattice_theta(lat_e8, 2, b), trace_cap=20,
                   description="degree-2 E8 theta series"),
        CorpusSpec("theta-d4-deg2", 2, False, lambda b: lattice_theta(lat_d4, 2, b), trace_cap=16,
                   description="degree-2 D4 theta series"),
        CorpusSpec("genus2-cusp", 2, True, genus2_cusp_candidate, trace_cap=8,
                   description="product of squared even theta constants, weight 10"),
    ]
    for c in even_characteristics():
        specs.append(CorpusSpec(f"thetaconst-{c.label}", 2, False,
                                (lambda ch: (lambda b: theta_constant(ch, 8 * b)))(c), trace_cap=16,
                                description=f"theta constant, characteristic bits {c.label}, M=8"))
    return specs


CORPUS: list[CorpusSpec] = _registry()


def corpus_spec(label: str) -> CorpusSpec:
    for s in CORPUS:
        if s.label == label:
            return s
    raise KeyError(label)


def build_form(label: str, trace: int) -> FourierExpansion:
    s = corpus_spec(label)
    return s.build(s.trace_for(trace))
