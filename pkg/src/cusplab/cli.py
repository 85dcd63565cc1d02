"""Command line front end.

    cusplab corpus build|list|verify
    cusplab analyze growth|rankin|boundary|lipschitz|thin|scalar-ray FORM
    cusplab fj slice|theta|roundtrip FORM r M
    cusplab plot-data FORM

Exit codes: 0 success, 1 verdict mismatch, 2 usage, 3 data error (a JSON
error record goes to stderr).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .errors import CuspLabError, UnsupportedDegree
from .growth import (CUSP, NONCUSP, boundary_probe, growth_exponent, is_scalar, lipschitz_fit,
                     scalar_ray, thin_density_grid)
from .jacobi import first_mismatch, fj_slice, reconstruct, theta_components, siegel_phi
from .matrices import HalfIntMatrix
from .rankin import asymp_fit
from .serialize import dumps_components, dumps_slice, read_expansion, write_expansion

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3
DEFAULT_TRACE = 40


class UsageError(Exception):
    pass


def corpus_dir(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get("CUSPLAB_CORPUS_DIR", "corpus"))


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, default=str))
    else:
        print(text)


# --- corpus -------------------------------------------------------------------

def cmd_corpus(args) -> int:
    out = corpus_dir(args.out or args.corpus)
    if args.action == "build":
        out.mkdir(parents=True, exist_ok=True)
        manifest = []
        for spec in corpus_mod.CORPUS:
            trace = args.trace2 if (spec.degree == 2 and args.trace2) else args.trace
            b = trace if (spec.degree == 2 and args.trace2) else spec.trace_for(trace)
            f = spec.build(b)
            path = write_expansion(out / f"{spec.label}.jsonl", f, spec.label, spec.expected_cuspidal)
            manifest.append({"label": spec.label, "file": path.name, "degree": f.degree,
                             "weight": str(f.weight), "twice_weight": f.weight.twice_k,
                             "denom_M": f.denom_M, "trace_bound": f.trace_bound, "build_trace": b,
                             "expected_cuspidal": spec.expected_cuspidal, "description": spec.description})
            if args.format == "text":
                print(f"wrote {path} ({len(f)} terms, trace <= {f.trace_bound})")
        (out / "manifest.json").write_text(json.dumps({"forms": manifest}, indent=2) + "\n")
        if args.format == "json":
            print(json.dumps({"corpus_dir": str(out), "forms": manifest}, indent=2))
        return EXIT_OK
    if args.action == "list":
        mpath = out / "manifest.json"
        if mpath.exists():
            rows = json.loads(mpath.read_text())["forms"]
        else:
            rows = [{"label": s.label, "degree": s.degree, "weight": "-", "trace_bound": "-",
                     "expected_cuspidal": s.expected_cuspidal} for s in corpus_mod.CORPUS]
        if args.format == "json":
            print(json.dumps(rows, indent=2))
        else:
            print(f"{'label':<20} {'deg':>3} {'weight':>6} {'trace':>6}  cusp")
            for r in rows:
                print(f"{r['label']:<20} {r['degree']:>3} {r['weight']:>6} {r['trace_bound']:>6}  "
                      f"{'yes' if r['expected_cuspidal'] else 'no'}")
        return EXIT_OK
    if args.action == "verify":
        results = verify_anchors(out)
        ok = all(r["pass"] for r in results)
        _emit(args, {"anchors": results, "pass": ok},
              "\n".join(f"{'PASS' if r['pass'] else 'FAIL'}  {r['name']}: {r['detail']}" for r in results))
        if not ok:
            failed = [r["name"] for r in results if not r["pass"]]
            _error("AnchorMismatch", f"anchors failed: {', '.join(failed)}")
            return EXIT_DATA
        return EXIT_OK
    raise UsageError(f"unknown corpus action {args.action}")


def verify_anchors(directory: Path | None = None) -> list[dict]:
    from .lattices import e8, lattice_theta
    res = []

    def check(name, got, want):
        res.append({"name": name, "pass": got == want, "detail": f"got {got}, expected {want}"})

    check("E8 root count", lattice_theta(e8(), 1, 1, route="gram")[1], 240)
    check("tau(2)", corpus_mod.delta(3)[2], -24)
    check("tau(3)", corpus_mod.delta(3)[3], 252)
    e4 = corpus_mod.eisenstein_deg1(4, 3)
    check("sigma_3(1..3)", [e4[1], e4[2], e4[3]], [1, 9, 28])
    check("sigma_5(2)", corpus_mod.eisenstein_deg1(6, 2)[2], 33)
    th2 = lattice_theta(e8(), 2, 2)
    check("Phi(E8 degree 2) = E8 degree 1", siegel_phi(th2).same_coefficients(lattice_theta(e8(), 1, 2)), True)
    g = corpus_mod.genus2_cusp_candidate(4)
    check("genus-2 candidate leading coefficient", g[HalfIntMatrix([[2, 1], [1, 2]])], 1)
    if directory is not None and (directory / "manifest.json").exists():
        manifest = json.loads((directory / "manifest.json").read_text())["forms"]
        for entry in manifest:
            path = directory / entry["file"]
            try:
                f, head = read_expansion(path)
                spec = corpus_mod.corpus_spec(entry["label"])
                fresh = spec.build(entry.get("build_trace", f.trace_bound))
                check(f"file {entry['file']} matches a fresh build", f == fresh, True)
            except (CuspLabError, OSError, KeyError) as exc:
                res.append({"name": f"file {entry['file']}", "pass": False, "detail": str(exc)})
    return res


# --- analyze ---------------------------------------------------------------------

def resolve_form(name: str, cdir: str | None) -> Path:
    p = Path(name)
    if p.exists():
        return p
    base = corpus_dir(cdir)
    for cand in (base / name, base / f"{name}.jsonl"):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"form file {name} not found (also looked in {base})")


def _parse_grid(spec: str | None, lo: float, hi: float, count: int = 20, integer: bool = False) -> list:
    if spec:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise UsageError("grid must be LO:HI:COUNT or a comma list")
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        else:
            vals = [float(v) for v in spec.split(",") if v.strip()]
            return sorted({int(round(v)) for v in vals}) if integer else vals
    pts = np.geomspace(lo, hi, count)
    return sorted({int(round(v)) for v in pts}) if integer else [float(v) for v in pts]


def _write_series(out: str | None, stem: str, header: list[str], rows: list, sidecar: dict) -> None:
    if not out:
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    (d / f"{stem}.json").write_text(json.dumps(sidecar, indent=2, default=str) + "\n")


def _expect_code(args, verdict: str | None) -> int:
    if not args.expect:
        return EXIT_OK
    if verdict is None:
        raise UsageError("--expect needs an analysis that produces a verdict")
    want = CUSP if args.expect == "cusp" else NONCUSP
    return EXIT_OK if verdict == want else EXIT_MISMATCH


def cmd_analyze(args) -> int:
    kind = args.kind
    if kind in ("lipschitz", "thin"):
        return _analyze_formless(args)
    if not args.form:
        raise UsageError(f"analyze {kind} needs a FORM")
    f, head = read_expansion(resolve_form(args.form, args.corpus))
    label = head.get("label") or Path(args.form).stem
    if kind == "growth":
        hi = args.det_hi if args.det_hi is not None else 2000
        rep = growth_exponent(f, args.det_lo, hi, label)
        _write_series(args.out, f"{label}-growth", ["det", "abs_coeff", "log_ratio"],
                      [[float(d), str(a), math.log(float(a)) / math.log(float(d))] for d, a in rep.samples],
                      rep.to_dict())
        c = "n/a" if rep.c_hat is None else f"{rep.c_hat:.4f}"
        _emit(args, rep.to_dict(), f"{label}: c_hat = {c}, threshold k-(n+1)/2 = {rep.threshold} "
                                   f"(margin {rep.margin}), samples {len(rep.samples)} -> {rep.verdict}")
        return _expect_code(args, rep.verdict)
    if kind == "rankin":
        if f.degree != 1:
            raise UnsupportedDegree("analyze rankin handles degree-1 forms")
        top = f.trace_bound
        xs = _parse_grid(args.grid, max(1, min(500, top // 10)), min(5000, top), 20, integer=True)
        rep = asymp_fit(f, xs)
        fit = [rep.constant * x ** rep.slope if rep.slope is not None else "" for x in rep.xs]
        _write_series(args.out, f"{label}-rankin", ["x", "P", "fit"],
                      [[x, str(p), c] for x, p, c in zip(rep.xs, rep.partial_sums, fit)], rep.to_dict())
        s = "n/a" if rep.slope is None else f"{rep.slope:.4f}"
        _emit(args, rep.to_dict(), f"{label}: slope = {s}, reference 2*kappa-1 = {rep.reference} "
                                   f"(lifts {rep.lifts}) -> {rep.verdict}")
        return _expect_code(args, rep.verdict)
    if kind == "boundary":
        ys = _parse_grid(args.grid, 0.05, 0.5, 10)
        rep = boundary_probe(f, ys, args.x_samples)
        _write_series(args.out, f"{label}-boundary", ["y", "sup_abs"], [list(p) for p in rep.grid], rep.to_dict())
        verdict = CUSP if rep.cusp_signal else NONCUSP
        _emit(args, {**rep.to_dict(), "verdict": verdict},
              f"{label}: nu = {rep.nu:.4f} vs k = {rep.weight} (residual {rep.residual:.3g}) -> {verdict}")
        return _expect_code(args, verdict)
    if kind == "scalar-ray":
        rep = scalar_ray(f, args.m_max)
        _write_series(args.out, f"{label}-scalar-ray", ["m", "abs_coeff"], [[m, str(v)] for m, v in rep.data],
                      rep.to_dict())
        fe = "n/a" if rep.fitted_exponent is None else f"{rep.fitted_exponent:.4f}"
        _emit(args, rep.to_dict(), f"{label}: fitted exponent {fe}, reference {rep.reference} "
                                   f"({len(rep.data)} points)")
        return _expect_code(args, None)
    raise UsageError(f"unknown analysis {kind}")


def _analyze_formless(args) -> int:
    if args.kind == "lipschitz":
        ys = _parse_grid(args.grid, 0.05, 0.5, 24)
        n = args.n or 1
        fit = lipschitz_fit(n, args.alpha, args.beta, ys)
        _write_series(args.out, f"lipschitz-n{n}", ["y", "S"], list(zip(fit.ys, fit.sums)), fit.to_dict())
        _emit(args, fit.to_dict(), f"n={fit.n} alpha={fit.alpha}: slope {fit.slope:.4f} "
                                   f"(plain log-log {fit.ols_slope:.4f}), expected {fit.expected}")
        return _expect_code(args, None)
    preds = {"all": lambda t: True, "empty": lambda t: False, "scalar": is_scalar,
             "diagonal": lambda t: all(t.doubled[i][j] == 0 for i in range(t.n) for j in range(t.n) if i != j)}
    if args.set not in preds:
        raise UsageError(f"--set must be one of {sorted(preds)}")
    xs = _parse_grid(args.grid, 10, 1000, 8)
    n = args.n or 2
    data = thin_density_grid(preds[args.set], xs, n)
    _write_series(args.out, f"thin-{args.set}", ["X", "density"], data, {"set": args.set, "n": n})
    _emit(args, {"set": args.set, "grid": data},
          "\n".join(f"X={x:g}  density={d:.5f}" for x, d in data))
    return _expect_code(args, None)


# --- fj --------------------------------------------------------------------------

def parse_index(spec: list[str], r: int) -> HalfIntMatrix:
    vals = [int(v) for s in spec for v in s.replace(",", " ").split()]
    if r == 1 and len(vals) == 1:
        return HalfIntMatrix.scalar(vals[0])
    if len(vals) != r * (r + 1) // 2:
        raise UsageError(f"M needs one integer (r=1) or the {r * (r + 1) // 2} upper-triangle entries of 2M")
    rows = [[0] * r for _ in range(r)]
    it = iter(vals)
    for i in range(r):
        for j in range(i, r):
            rows[i][j] = rows[j][i] = next(it)
    return HalfIntMatrix(rows)


def cmd_fj(args) -> int:
    f, head = read_expansion(resolve_form(args.form, args.corpus))
    label = head.get("label") or Path(args.form).stem
    if f.degree < 2:
        raise UnsupportedDegree(f"Fourier-Jacobi slicing needs degree >= 2, {label} has degree {f.degree}")
    m = parse_index(args.index, args.r)
    sl = fj_slice(f, args.r, m)
    stem = f"{label}-r{args.r}-M{'_'.join(str(x) for row in m.doubled for x in row)}"
    if args.action == "slice":
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / f"{stem}-slice.jsonl").write_text(dumps_slice(sl, label))
        _emit(args, {"entries": len(sl.entries), "trace_bound": sl.trace_bound},
              f"{label}: slice at 2M={[list(r) for r in m.doubled]} has {len(sl.entries)} entries")
        return EXIT_OK
    tc = theta_components(sl)
    if args.action == "theta":
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / f"{stem}-theta.jsonl").write_text(dumps_components(tc, label))
        expected = abs(int(Fraction(m.det) * 2 ** m.n)) ** tc.s
        payload = {"coset_count": tc.coset_count, "expected": expected,
                   "nonzero_components": sum(1 for c in tc.components.values() if c.entries)}
        _emit(args, payload, f"{label}: {tc.coset_count} components (det(2M)^(n-r) = {expected}), "
                             f"{payload['nonzero_components']} nonzero")
        return EXIT_OK if tc.coset_count == expected else EXIT_MISMATCH
    if args.action == "roundtrip":
        mm = first_mismatch(sl, reconstruct(tc))
        if mm is None:
            _emit(args, {"result": "exact"}, "exact")
            return EXIT_OK
        l, mu, a, b = mm
        _emit(args, {"result": "mismatch", "l": [list(r) for r in l.doubled], "mu": [list(r) for r in mu],
                     "slice": str(a), "reconstructed": str(b)},
              f"mismatch at l={[list(r) for r in l.doubled]} mu={[list(r) for r in mu]}: {a} vs {b}")
        return EXIT_MISMATCH
    raise UsageError(f"unknown fj action {args.action}")


def cmd_plot_data(args) -> int:
    """Write every series that applies to the form: growth, Rankin, boundary."""
    f, head = read_expansion(resolve_form(args.form, args.corpus))
    label = head.get("label") or Path(args.form).stem
    out = args.out or "plot-data"
    written = []
    rep = growth_exponent(f, 2, 2000, label)
    _write_series(out, f"{label}-growth", ["det", "abs_coeff"], [[float(d), str(a)] for d, a in rep.samples],
                  rep.to_dict())
    written.append(f"{label}-growth")
    if f.degree == 1 and f.trace_bound >= 10:
        xs = _parse_grid(None, max(1, min(500, f.trace_bound // 10)), min(5000, f.trace_bound), 20, integer=True)
        rr = asymp_fit(f, xs)
        _write_series(out, f"{label}-rankin", ["x", "P"], [[x, str(p)] for x, p in zip(rr.xs, rr.partial_sums)],
                      rr.to_dict())
        written.append(f"{label}-rankin")
    try:
        br = boundary_probe(f, _parse_grid(None, 0.05, 0.5, 10), 400 if f.degree == 1 else 216)
        _write_series(out, f"{label}-boundary", ["y", "sup_abs"], [list(p) for p in br.grid], br.to_dict())
        written.append(f"{label}-boundary")
    except CuspLabError as exc:
        print(f"boundary series skipped: {exc}", file=sys.stderr)
    _emit(args, {"out": out, "series": written}, f"wrote {', '.join(written)} to {out}")
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--out", help="output directory")
    common.add_argument("--corpus", help="corpus directory (default $CUSPLAB_CORPUS_DIR or ./corpus)")

    p = argparse.ArgumentParser(prog="cusplab", description="Exact Fourier-coefficient lab for cusp form detection.")
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("corpus", parents=[common], help="build, list or verify the corpus")
    pc.add_argument("action", choices=["build", "list", "verify"])
    pc.add_argument("--trace", type=int, default=DEFAULT_TRACE, help="trace bound for the forms")
    pc.add_argument("--trace2", type=int, default=None, help="override the capped degree-2 trace bounds")

    pa = sub.add_parser("analyze", parents=[common], help="run a detector")
    pa.add_argument("kind", choices=["growth", "rankin", "boundary", "lipschitz", "thin", "scalar-ray"])
    pa.add_argument("form", nargs="?")
    pa.add_argument("--det-lo", type=float, default=2.0)
    pa.add_argument("--det-hi", type=float, default=None)
    pa.add_argument("--grid", help="LO:HI:COUNT (geometric) or a comma list")
    pa.add_argument("--expect", choices=["cusp", "noncusp"])
    pa.add_argument("--x-samples", type=int, default=400)
    pa.add_argument("--m-max", type=int, default=50)
    pa.add_argument("--n", type=int, default=None, help="degree (lipschitz default 1, thin default 2)")
    pa.add_argument("--alpha", type=float, default=1.0)
    pa.add_argument("--beta", type=float, default=2 * math.pi)
    pa.add_argument("--set", default="scalar", help="thin set: all, empty, scalar, diagonal")

    pf = sub.add_parser("fj", parents=[common], help="Fourier-Jacobi slices and theta decomposition")
    pf.add_argument("action", choices=["slice", "theta", "roundtrip"])
    pf.add_argument("form")
    pf.add_argument("r", type=int)
    pf.add_argument("index", nargs="+", help="m for r=1, else upper triangle of 2M")

    pp = sub.add_parser("plot-data", parents=[common], help="emit CSV series for plotting")
    pp.add_argument("form")
    return p


def _error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    handlers = {"corpus": cmd_corpus, "analyze": cmd_analyze, "fj": cmd_fj, "plot-data": cmd_plot_data}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _error("UsageError", str(exc))
        return EXIT_USAGE
    except FileNotFoundError as exc:
        _error("FileNotFound", str(exc))
        return EXIT_DATA
    except CuspLabError as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
