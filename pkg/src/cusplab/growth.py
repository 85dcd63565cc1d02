"""Numerical cuspidality detectors based on coefficient growth and boundary decay."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import CutoffInsufficient, EmptyWindow, TruncationDominates, UnsupportedDegree
from .matrices import HalfIntMatrix, enumerate_classes, is_positive_definite, reduced_binary_forms
from .qexp import FourierExpansion, _diag_positions, evaluate_on_ray, key_of, support_verdict

CUSP = "cusp_consistent"
NONCUSP = "non_cusp"
INCONCLUSIVE = "inconclusive"
GROWTH_MARGIN = 0.15
# Eisenstein-type blow-up fits nu = k up to float noise; only a clear gap counts
BOUNDARY_MARGIN = 0.5


def hecke_threshold(k: Fraction, n: int) -> Fraction:
    """k - (n+1)/2."""
    return Fraction(k) - Fraction(n + 1, 2)


@dataclass
class GrowthReport:
    form_id: str
    c_hat: float | None
    threshold: Fraction
    window: tuple[float, float]
    verdict: str
    margin: float
    samples: list[tuple[Fraction, int | Fraction]]
    skipped_beyond_truncation: int = 0
    support_witness: HalfIntMatrix | None = None

    def to_dict(self) -> dict:
        return {
            "form_id": self.form_id, "c_hat": self.c_hat, "threshold": str(self.threshold),
            "threshold_float": float(self.threshold), "window": list(self.window),
            "verdict": self.verdict, "margin": self.margin, "n_samples": len(self.samples),
            "skipped_beyond_truncation": self.skipped_beyond_truncation,
            "support_witness": None if self.support_witness is None else [list(r) for r in self.support_witness.doubled],
        }


def _class_samples(f: FourierExpansion, det_lo: float, det_hi: float):
    """(det, |a|, T) over reduced class representatives with det(T/M) in the window."""
    n, m = f.degree, f.denom_M
    scale = Fraction(m) ** n
    lo = max(Fraction(det_lo).limit_denominator(10**9), Fraction(1))
    hi = Fraction(det_hi).limit_denominator(10**9)
    out, skipped = [], 0
    if n == 1:
        reps = enumerate_classes(1, min(hi * scale, Fraction(f.trace_bound)))
        skipped = max(0, math.floor(hi * scale) - f.trace_bound)
    else:
        reps, skipped = reduced_binary_forms(f.trace_bound, lo * scale, hi * scale)
    for t in reps:
        d = t.det / scale
        if d <= 1 or d < lo or d > hi:
            continue
        v = f.get_key(key_of(t))
        if v:
            out.append((d, abs(v), t))
    return out, skipped


def growth_exponent(f: FourierExpansion, det_lo: float = 2, det_hi: float = 2000,
                    form_id: str = "", margin: float = GROWTH_MARGIN) -> GrowthReport:
    """c_hat = max log|a(T)| / log det(T) over class representatives in the window.

    det is measured for T/M, so the exponent refers to the normalised index.
    Verdict is non-cusp when c_hat >= k - (n+1)/2 - margin.
    """
    if f.degree not in (1, 2):
        raise UnsupportedDegree("growth_exponent needs degree 1 or 2")
    if det_hi <= 1 or det_hi < det_lo:
        raise EmptyWindow(f"window [{det_lo}, {det_hi}] contains no determinant above 1")
    samples, skipped = _class_samples(f, det_lo, det_hi)
    thr = hecke_threshold(f.k, f.degree)
    sv = support_verdict(f)
    if not samples:
        return GrowthReport(form_id, None, thr, (det_lo, det_hi), INCONCLUSIVE, margin, [], skipped, sv.witness)
    c_hat = max(math.log(abs(float(a))) / math.log(float(d)) for d, a, _ in samples)
    verdict = NONCUSP if c_hat >= float(thr) - margin else CUSP
    return GrowthReport(form_id, c_hat, thr, (det_lo, det_hi), verdict, margin,
                        [(d, a) for d, a, _ in samples], skipped, sv.witness)


# --- boundary probe ---------------------------------------------------------

@dataclass
class BoundaryReport:
    nu: float
    weight: Fraction
    intercept: float
    residual: float
    grid: list[tuple[float, float]]
    tail_estimates: list[float]
    cusp_signal: bool

    def to_dict(self) -> dict:
        return {"nu": self.nu, "weight": str(self.weight), "intercept": self.intercept,
                "residual": self.residual, "cusp_signal": self.cusp_signal,
                "grid": [list(p) for p in self.grid], "tail_estimates": self.tail_estimates}


def _x_grid(n: int, samples: int) -> np.ndarray:
    """Fixed lattice grid of symmetric X in [0,1)^{entries}; no randomness."""
    if n == 1:
        return (np.arange(samples) / samples).reshape(-1, 1, 1)
    per = max(2, round(samples ** (1 / 3)))
    pts = np.arange(per) / per
    xs = []
    for a in pts:
        for b in pts:
            for c in pts:
                xs.append([[a, b], [b, c]])
    return np.array(xs)


def _shell_totals(f: FourierExpansion) -> np.ndarray:
    pos = _diag_positions(f.degree)
    tot = np.zeros(f.trace_bound + 1)
    for k, v in f._c.items():
        tot[sum(k[p] for p in pos) // 2] += abs(float(v))
    return tot


def tail_estimate(f: FourierExpansion, y: float) -> float:
    """Rough size of the omitted terms sum_{trace > B} |a| e^{-2 pi y tr/M}.

    Shell totals are extrapolated by a power law fitted on the upper half of
    the known shells.
    """
    tot = _shell_totals(f)
    b = f.trace_bound
    idx = np.arange(b + 1)
    sel = (idx >= max(1, b // 2)) & (tot > 0)
    if sel.sum() >= 2:
        p = max(0.0, np.polyfit(np.log(idx[sel]), np.log(tot[sel]), 1)[0])
        top = tot[sel][-1] * (b / idx[sel][-1]) ** p
    elif tot.any():
        p, top = 0.0, tot.max()
    else:
        return 0.0
    rate = 2 * math.pi * y / f.denom_M
    total, j = 0.0, 1
    while True:
        term = top * ((b + j) / b) ** p * math.exp(-rate * (b + j)) if b else 0.0
        total += term
        if term < 1e-18 * max(total, 1e-300) or j > 10**6:
            break
        j += 1
    return total


def boundary_probe(f: FourierExpansion, y_grid: Sequence[float], x_samples: int = 400,
                   margin: float = BOUNDARY_MARGIN) -> BoundaryReport:
    """Fit sup_X |F(X + i y I)| ~ y^{-nu} on the given y values.

    The cusp signal is nu < k - margin.
    """
    if f.degree not in (1, 2):
        raise UnsupportedDegree("boundary_probe handles degree 1 and 2")
    xs = _x_grid(f.degree, x_samples)
    grid, tails = [], []
    for y in y_grid:
        if not 0 < y <= 1:
            raise ValueError("y values must lie in (0, 1]")
        sup = float(np.max(np.abs(evaluate_on_ray(f, xs, y))))
        tail = tail_estimate(f, y)
        if tail > sup:
            raise TruncationDominates(f"at y={y} the tail estimate {tail:.3g} exceeds the value {sup:.3g}")
        grid.append((float(y), sup))
        tails.append(tail)
    ly = np.log([g[0] for g in grid])
    ls = np.log([max(g[1], 1e-300) for g in grid])
    slope, intercept = np.polyfit(ly, ls, 1)
    resid = float(np.sqrt(np.mean((ls - (slope * ly + intercept)) ** 2)))
    nu = float(-slope)
    return BoundaryReport(nu, f.k, float(intercept), resid, grid, tails, nu < float(f.k) - margin)


# --- Lipschitz-type sum ------------------------------------------------------

def _det_power_shell(n: int, t: int, alpha: float) -> float:
    """sum of det(T)^alpha over positive definite T with trace t."""
    if n == 1:
        return float(t) ** alpha
    a = np.arange(1, t)
    c = t - a
    prod4 = 4 * a * c
    bmax = np.floor(np.sqrt(np.maximum(prod4 - 1, 0))).astype(int)
    total = 0.0
    for pa, bm in zip(prod4, bmax):
        b = np.arange(-bm, bm + 1)
        total += float(np.sum(((pa - b * b) / 4.0) ** alpha))
    return total


def lipschitz_sum(n: int, alpha: float, beta: float, y: float, max_trace: int = 100000) -> float:
    """S(yI) = sum over positive definite half-integral T of det(T)^alpha exp(-beta y tr T).

    Summed shell by shell in the trace; stops once a shell falls below 1e-14 of
    the running sum after the peak.
    """
    if n not in (1, 2):
        raise UnsupportedDegree("lipschitz_sum is implemented for n = 1, 2")
    if alpha <= 0 or beta <= 0 or y <= 0:
        raise ValueError("alpha, beta and y must be positive")
    total, prev = 0.0, 0.0
    for t in range(n, max_trace + 1):
        shell = _det_power_shell(n, t, alpha) * math.exp(-beta * y * t)
        total += shell
        if shell < prev and shell < 1e-14 * total:
            return total
        prev = shell
    raise CutoffInsufficient(f"no convergence below trace {max_trace} at y={y}")


def lipschitz_direct(n: int, alpha: float, beta: float, y: float, cutoff: int) -> float:
    """Plain nested-loop sum up to trace cutoff; a reference for tests."""
    total = 0.0
    if n == 1:
        return sum(t ** alpha * math.exp(-beta * y * t) for t in range(1, cutoff + 1))
    for a in range(1, cutoff):
        for c in range(1, cutoff - a + 1):
            for b in range(-2 * cutoff, 2 * cutoff + 1):
                d4 = 4 * a * c - b * b
                if d4 > 0:
                    total += (d4 / 4) ** alpha * math.exp(-beta * y * (a + c))
    return total


@dataclass
class LipschitzFit:
    n: int
    alpha: float
    beta: float
    slope: float
    ols_slope: float
    expected: float
    ys: list[float]
    sums: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def lipschitz_fit(n: int, alpha: float, beta: float, y_grid: Sequence[float] | None = None) -> LipschitzFit:
    """Leading exponent of S(yI) as y -> 0.

    S(yI) = y^{-e} (C0 + C1 y + C2 y^2 + ...), so log S is regressed on
    (1, log y, y, y^2); the log y coefficient estimates -e.  The plain
    log-log slope is reported alongside.
    """
    ys = np.geomspace(0.05, 0.5, 24) if y_grid is None else np.asarray(y_grid, dtype=float)
    sums = np.array([lipschitz_sum(n, alpha, beta, float(y)) for y in ys])
    ly, ls = np.log(ys), np.log(sums)
    design = np.column_stack([np.ones_like(ys), ly, ys, ys ** 2])
    coef, *_ = np.linalg.lstsq(design, ls, rcond=None)
    ols = np.polyfit(ly, ls, 1)[0]
    expected = -n * (alpha + (n + 1) / 2)
    return LipschitzFit(n, alpha, beta, float(coef[1]), float(ols), expected, ys.tolist(), sums.tolist())


# --- shell counts, thin sets, scalar rays ------------------------------------

@dataclass(frozen=True)
class ShellCount:
    count: int
    ratio: float


def shell_count(n: int, t_diag: Sequence[int]) -> ShellCount:
    """#{S positive definite with diagonal t_diag}, off-diagonals scanned exactly."""
    if n not in (2, 3) or len(t_diag) != n:
        raise UnsupportedDegree("shell_count handles n = 2, 3")
    t = [int(x) for x in t_diag]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    # doubled off-diagonal b_ij satisfies b_ij^2 < 4 t_i t_j
    ranges = [range(-math.isqrt(4 * t[i] * t[j]), math.isqrt(4 * t[i] * t[j]) + 1) for i, j in pairs]
    count = 0
    if n == 2:
        count = sum(1 for b in ranges[0] if 4 * t[0] * t[1] - b * b > 0)
    else:
        for bs in _product(ranges):
            d = [[2 * t[i] if i == j else 0 for j in range(n)] for i in range(n)]
            for (i, j), b in zip(pairs, bs):
                d[i][j] = d[j][i] = b
            if is_positive_definite(HalfIntMatrix._trusted(tuple(map(tuple, d)))):
                count += 1
    return ShellCount(count, count / float(np.prod(t)) ** ((n - 1) / 2))


def _product(ranges):
    import itertools
    return itertools.product(*ranges)


def thin_density(pred: Callable[[HalfIntMatrix], bool], x: float, n: int = 2) -> float:
    """#{classes in pred with det <= x} / #{classes with det <= x}."""
    if n not in (1, 2):
        raise UnsupportedDegree("thin_density needs n <= 2")
    classes = enumerate_classes(n, Fraction(x).limit_denominator(10**9))
    if not classes:
        return 0.0
    return sum(1 for t in classes if pred(t)) / len(classes)


def thin_density_grid(pred: Callable[[HalfIntMatrix], bool], xs: Sequence[float], n: int = 2) -> list[tuple[float, float]]:
    return [(float(x), thin_density(pred, x, n)) for x in xs]


def is_scalar(t: HalfIntMatrix) -> bool:
    d = t.doubled
    return all(d[i][j] == (d[0][0] if i == j else 0) for i in range(t.n) for j in range(t.n))


@dataclass
class ScalarRay:
    data: list[tuple[int, int | Fraction]]
    fitted_exponent: float | None
    reference: Fraction

    def to_dict(self) -> dict:
        return {"data": [[m, str(v)] for m, v in self.data], "fitted_exponent": self.fitted_exponent,
                "reference": str(self.reference)}


def scalar_ray_reference(n: int, k) -> Fraction:
    k = Fraction(k)
    return n * (k - Fraction(n + 1, 2)) - k + n + 1


def scalar_ray(f: FourierExpansion, m_max: int) -> ScalarRay:
    """|a(m I_n)| for m <= m_max within truncation, with a log-log fit (no verdict)."""
    n = f.degree
    if n < 2:
        raise UnsupportedDegree("scalar_ray needs degree >= 2")
    data = []
    for m in range(1, m_max + 1):
        if n * m > f.trace_bound:
            break
        v = f.get_key(key_of(HalfIntMatrix.diag(*([m] * n))))
        if v:
            data.append((m, abs(v)))
    fit = None
    if len(data) >= 2:
        fit = float(np.polyfit(np.log([m for m, _ in data]), np.log([float(v) for _, v in data]), 1)[0])
    return ScalarRay(data, fit, scalar_ray_reference(n, f.k))
