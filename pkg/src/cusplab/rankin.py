"""Rankin-Selberg partial sums, pole bookkeeping and the Eisenstein zeta quotient."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corpus import bernoulli, unary_theta
from .errors import (InsufficientGrid, OutOfRegion, TruncationExceeded, UnsupportedDegree,
                     BadWeight)
from .growth import CUSP, INCONCLUSIVE, NONCUSP
from .matrices import automorph_count, reduced_binary_forms
from .qexp import FourierExpansion, dilate, key_of, multiply, series

RANKIN_MARGIN = 0.5


def partial_sum_deg1(f: FourierExpansion, x: int) -> int | Fraction:
    """sum_{1 <= n <= x} |a(n)|^2, exact."""
    if f.degree != 1:
        raise UnsupportedDegree("partial_sum_deg1 needs degree 1")
    if x > f.trace_bound:
        raise TruncationExceeded(f"x={x} exceeds trace bound {f.trace_bound}")
    return sum((v * v for (d,), v in f._c.items() if 2 <= d <= 2 * x), 0)


def partial_sums_deg1(f: FourierExpansion, xs: Sequence[int]) -> list[int | Fraction]:
    """P(x) for every x in xs from one cumulative pass."""
    if any(x > f.trace_bound for x in xs):
        raise TruncationExceeded(f"grid exceeds trace bound {f.trace_bound}")
    a = series(f)
    out, run, j = {}, 0, 1
    for x in sorted(set(xs)):
        while j <= x:
            run += a[j] * a[j]
            j += 1
        out[x] = run
    return [out[x] for x in xs]


def theta_lift(f: FourierExpansion) -> FourierExpansion:
    """f(4 tau) * theta(tau): weight goes up by 1/2, cusp forms stay cusp forms."""
    th = unary_theta(f.trace_bound * f.denom_M)
    return multiply(dilate(f, 4), th)


@dataclass
class RankinReport:
    xs: list[int]
    partial_sums: list
    slope: float | None
    constant: float | None
    reference: Fraction
    verdict: str
    margin: float = RANKIN_MARGIN
    lifts: int = 0
    weight: Fraction = Fraction(0)

    def to_dict(self) -> dict:
        return {"xs": self.xs, "partial_sums": [str(p) for p in self.partial_sums],
                "slope": self.slope, "constant": self.constant, "reference": str(self.reference),
                "verdict": self.verdict, "margin": self.margin, "lifts": self.lifts,
                "weight": str(self.weight)}


def asymp_fit(f: FourierExpansion, x_grid: Sequence[int], margin: float = RANKIN_MARGIN) -> RankinReport:
    """Log-log least squares of P(x) against x, compared with 2*kappa - 1.

    The asymptotic holds for weight >= 3/2; lighter forms are first lifted by
    f -> f(4 tau) theta(tau) until they reach that weight.
    """
    xs = sorted({int(x) for x in x_grid})
    if len(xs) < 5:
        raise InsufficientGrid("asymp_fit needs at least 5 distinct grid points")
    if xs[0] < 1:
        raise InsufficientGrid("grid points must be positive")
    g, lifts = f, 0
    while g.k < Fraction(3, 2):
        g = theta_lift(g)
        lifts += 1
    ps = partial_sums_deg1(g, xs)
    ref = 2 * g.k - 1
    pos = [(x, p) for x, p in zip(xs, ps) if p > 0]
    if len(pos) < 5:
        return RankinReport(xs, ps, None, None, ref, INCONCLUSIVE, margin, lifts, g.k)
    lx = np.log([x for x, _ in pos])
    lp = np.array([_log(p) for _, p in pos])
    slope, icpt = np.polyfit(lx, lp, 1)
    if abs(slope - float(ref)) <= margin:
        verdict = NONCUSP
    elif slope < float(ref) - margin:
        verdict = CUSP
    else:
        verdict = INCONCLUSIVE
    return RankinReport(xs, ps, float(slope), float(math.exp(icpt)), ref, verdict, margin, lifts, g.k)


def _log(p) -> float:
    # exact ints can exceed float range
    if isinstance(p, int):
        return math.log(p)
    return math.log(p.numerator) - math.log(p.denominator)


@dataclass
class MassReport:
    det_grid: list[Fraction]
    masses: list
    slope: float | None
    reference: Fraction


def partial_sum_degn(f: FourierExpansion, det_bound, sigma: float = 0.0):
    """sum over classes T with det(T) <= D of |a(T)|^2 / (eps(T) det(T)^sigma).

    Exact (a Fraction) when sigma = 0.  Every class representative must lie
    within the truncation of F.
    """
    if f.degree != 2:
        raise UnsupportedDegree("partial_sum_degn is implemented for degree 2")
    d = Fraction(det_bound).limit_denominator(10**9)
    reps, beyond = reduced_binary_forms(f.trace_bound, 0, d)
    if beyond:
        raise TruncationExceeded(f"{beyond} classes with det <= {d} lie beyond the truncation")
    total = Fraction(0) if sigma == 0 else 0.0
    for t in reps:
        v = f.get_key(key_of(t))
        if v:
            term = Fraction(v * v, automorph_count(t))
            total += term if sigma == 0 else float(term) / float(t.det) ** sigma
    return total


def max_det_within(f: FourierExpansion) -> Fraction:
    """Largest D such that every class with det <= D has its representative in the truncation."""
    # smallest det among reduced forms whose trace is one past the bound; the minimum
    # det over reduced forms grows with the trace, so everything below it is stored
    b = f.trace_bound
    best = Fraction(0)
    for a in range(1, b + 2):
        c = b + 1 - a
        if c < a:
            break
        best_b = a
        cand = Fraction(4 * a * c - best_b * best_b, 4)
        best = cand if best == 0 or cand < best else best
    return best - Fraction(1, 4)


def mass_fit(f: FourierExpansion, det_grid: Sequence | None = None) -> MassReport:
    """Exploratory: log-log slope of the degree-2 class mass against D."""
    n = f.degree
    if n != 2:
        raise UnsupportedDegree("mass_fit needs degree 2")
    ref = 2 * f.k - Fraction(n + 1, 2)
    if det_grid is None:
        top = max_det_within(f)
        det_grid = [top * Fraction(j, 8) for j in range(2, 9)]
    grid = [Fraction(x).limit_denominator(10**6) for x in det_grid]
    masses = [partial_sum_degn(f, d) for d in grid]
    pts = [(float(d), float(m)) for d, m in zip(grid, masses) if m > 0 and d > 0]
    slope = None
    if len(pts) >= 2:
        slope = float(np.polyfit(np.log([p[0] for p in pts]), np.log([p[1] for p in pts]), 1)[0])
    return MassReport(grid, masses, slope, ref)


# --- pole sets ---------------------------------------------------------------

@dataclass
class PoleSets:
    n: int
    k: Fraction
    A: list[Fraction]
    C: list[Fraction]

    @property
    def intersection(self) -> list[Fraction]:
        return sorted(set(self.A) & set(self.C))

    @property
    def disjoint(self) -> bool:
        return not self.intersection

    @property
    def rightmost(self) -> Fraction:
        return max(self.C)


def pole_sets(n: int, k) -> PoleSets:
    """A = {k - j/4 : 0 <= j <= 2n+2} and C = {2k - (n+j)/2 : 1 <= j <= n}."""
    k = Fraction(k)
    if (2 * k).denominator != 1:
        raise BadWeight(f"weight {k} is not in (1/2)Z")
    a = [k - Fraction(j, 4) for j in range(2 * n + 3)]
    c = [2 * k - Fraction(n + j, 2) for j in range(1, n + 1)]
    return PoleSets(n, k, a, c)


# --- zeta ----------------------------------------------------------------------

def zeta(s: float, terms: int = 12, corrections: int = 10) -> float:
    """Riemann zeta for real s > 1: direct sum plus Euler-Maclaurin tail."""
    if s <= 1:
        raise OutOfRegion(f"zeta is evaluated only for s > 1, got {s}")
    n = terms
    total = math.fsum(j ** -s for j in range(1, n))
    total += n ** (1 - s) / (s - 1) + 0.5 * n ** -s
    rising = s          # s (s+1) ... (s + 2j - 2)
    for j in range(1, corrections + 1):
        total += float(bernoulli(2 * j)) / math.factorial(2 * j) * rising * n ** (-s - 2 * j + 1)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    return total


def eisenstein_rankin_reference(k: int, s: float) -> float:
    """zeta(s) zeta(s-k+1)^2 zeta(s-2k+2) / zeta(2s-2k+2)."""
    if k < 4 or k % 2:
        raise BadWeight(f"needs even k >= 4, got {k}")
    if s <= 2 * k - 1:
        raise OutOfRegion(f"s={s} must exceed 2k-1={2 * k - 1}")
    return zeta(s) * zeta(s - k + 1) ** 2 * zeta(s - 2 * k + 2) / zeta(2 * s - 2 * k + 2)


def residue_at_rightmost(k: int) -> float:
    """zeta(2k-1) zeta(k)^2 / zeta(2k)."""
    if k < 4 or k % 2:
        raise BadWeight(f"needs even k >= 4, got {k}")
    return zeta(2 * k - 1) * zeta(k) ** 2 / zeta(2 * k)


def sigma_array(power: int, x: int) -> np.ndarray:
    """sigma_power(n), n = 0..x, as float64 via a divisor sieve."""
    out = np.zeros(x + 1, dtype=np.float64)
    for d in range(1, x + 1):
        out[d::d] += float(d) ** power
    return out


def eisenstein_dirichlet_partial(k: int, s: float, x: int) -> float:
    """sum_{n <= x} sigma_{k-1}(n)^2 / n^s in double precision."""
    sig = sigma_array(k - 1, x)[1:]
    n = np.arange(1, x + 1, dtype=np.float64)
    return float(math.fsum(sig ** 2 / n ** s))
