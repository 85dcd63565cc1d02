"""JSONL files for expansions, slices and theta components.

Line 1 is a header object, every further line one coefficient record.
Rationals are written as decimal strings so nothing passes through a float.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import CuspLabError
from .jacobi import JacobiSlice, ThetaComponentSet
from .matrices import HalfIntMatrix
from .qexp import FourierExpansion, HalfWeight, key_of, matrix_of

FORMAT_VERSION = 1


class FormatError(CuspLabError):
    pass


def _num_den(v) -> tuple[str, str]:
    q = Fraction(v)
    return str(q.numerator), str(q.denominator)


def _value(rec: dict):
    q = Fraction(int(rec["coeff_num"]), int(rec["coeff_den"]))
    return q.numerator if q.denominator == 1 else q


def expansion_header(f: FourierExpansion, label: str = "", expected_cuspidal: bool | None = None) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": "expansion", "degree": f.degree,
            "twice_weight": f.weight.twice_k, "denom_M": f.denom_M, "trace_bound": f.trace_bound,
            "label": label, "expected_cuspidal": expected_cuspidal}


def dumps_expansion(f: FourierExpansion, label: str = "", expected_cuspidal: bool | None = None) -> str:
    lines = [json.dumps(expansion_header(f, label, expected_cuspidal))]
    for t, v in f.items():
        num, den = _num_den(v)
        lines.append(json.dumps({"doubled_matrix": [list(r) for r in t.doubled],
                                 "coeff_num": num, "coeff_den": den}))
    return "\n".join(lines) + "\n"


def write_expansion(path, f: FourierExpansion, label: str = "", expected_cuspidal: bool | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_expansion(f, label, expected_cuspidal))
    return path


def loads_expansion(text: str) -> tuple[FourierExpansion, dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty expansion file")
    try:
        header = json.loads(lines[0])
        if header.get("kind", "expansion") != "expansion":
            raise FormatError(f"expected an expansion file, found kind {header.get('kind')!r}")
        if header.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"unsupported format_version {header.get('format_version')!r}")
        n = int(header["degree"])
        coeffs = {}
        prev = None
        for ln in lines[1:]:
            rec = json.loads(ln)
            t = HalfIntMatrix(rec["doubled_matrix"])
            if t.n != n:
                raise FormatError(f"record {rec['doubled_matrix']} has the wrong size")
            v = _value(rec)
            if v == 0:
                raise FormatError("zero coefficients are not stored")
            sk = t.sort_key()
            if prev is not None and sk <= prev:
                raise FormatError("records are not sorted by (trace, entries)")
            prev = sk
            coeffs[t] = v
        f = FourierExpansion(n, HalfWeight(int(header["twice_weight"])), int(header["denom_M"]),
                             int(header["trace_bound"]), coeffs)
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed expansion file: {exc}") from exc
    return f, header


def read_expansion(path) -> tuple[FourierExpansion, dict]:
    return loads_expansion(Path(path).read_text())


def dumps_slice(sl: JacobiSlice, label: str = "") -> str:
    head = {"format_version": FORMAT_VERSION, "kind": "jacobi_slice", "parent_degree": sl.parent_degree,
            "r": sl.r, "index_doubled": [list(r) for r in sl.index.doubled],
            "twice_weight": sl.weight.twice_k, "denom_M": sl.denom_M, "trace_bound": sl.trace_bound,
            "label": label}
    lines = [json.dumps(head)]
    for l, mu, v in sl.items():
        num, den = _num_den(v)
        lines.append(json.dumps({"l": [list(r) for r in l.doubled], "mu": [list(r) for r in mu],
                                 "coeff_num": num, "coeff_den": den}))
    return "\n".join(lines) + "\n"


def loads_slice(text: str) -> JacobiSlice:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        h = json.loads(lines[0])
        if h.get("kind") != "jacobi_slice":
            raise FormatError("not a slice file")
        entries = {}
        for ln in lines[1:]:
            rec = json.loads(ln)
            entries[(key_of(HalfIntMatrix(rec["l"])), tuple(tuple(r) for r in rec["mu"]))] = _value(rec)
        return JacobiSlice(h["parent_degree"], h["r"], HalfIntMatrix(h["index_doubled"]),
                           HalfWeight(h["twice_weight"]), h["denom_M"], h["trace_bound"], entries)
    except (KeyError, IndexError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed slice file: {exc}") from exc


def dumps_components(tc: ThetaComponentSet, label: str = "") -> str:
    head = {"format_version": FORMAT_VERSION, "kind": "theta_components", "parent_degree": tc.parent_degree,
            "r": tc.r, "index_doubled": [list(r) for r in tc.index.doubled],
            "twice_weight": tc.weight.twice_k, "denom_M": tc.denom_M, "trace_bound": tc.trace_bound,
            "coset_count": tc.coset_count, "label": label}
    lines = [json.dumps(head)]
    s = tc.s
    for mu0, comp in tc.components.items():
        offset = [[str(x) for x in row] for row in comp.offset]
        for lk in sorted(comp.entries, key=lambda k: matrix_of(k, s).sort_key()):
            num, den = _num_den(comp.entries[lk])
            lines.append(json.dumps({"mu0": [list(r) for r in mu0], "offset": offset,
                                     "l0": [list(r) for r in matrix_of(lk, s).doubled],
                                     "coeff_num": num, "coeff_den": den}))
    return "\n".join(lines) + "\n"
