"""Deterministic JSON and CSV renderings of analysis results.

Exact values are written as ``"num/den"`` strings (authoritative) next to a
decimal rendering with a fixed number of significant digits (advisory).
"""
from __future__ import annotations

import csv
import io
import json
from decimal import Decimal, localcontext
from fractions import Fraction

import mpmath

from . import __version__
from .extension import Bracket, ExtensionReport, Verdict
from .sampler import Deviation, EmpiricalStats

FORMAT = "bratteli-report/1"
DIGITS = 12


def fraction_str(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(s: str) -> Fraction:
    return Fraction(s)


def decimal_str(x, digits: int = DIGITS) -> str:
    if isinstance(x, (Fraction, int)):
        x = Fraction(x)
        with localcontext() as ctx:
            ctx.prec = digits + 10
            d = Decimal(x.numerator) / Decimal(x.denominator)
            return format(d, f".{digits}g")
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, digits)
    return format(float(x), f".{digits}g")


def value(x, bound=None, digits: int = DIGITS):
    """One number: exact fraction plus decimal, or decimal plus error bound."""
    if x is None:
        return None
    if isinstance(x, bool):
        return x
    if isinstance(x, (Fraction, int)):
        return {"fraction": fraction_str(x), "decimal": decimal_str(x, digits)}
    out = {"decimal": decimal_str(x, digits)}
    if bound is not None:
        out["bound"] = decimal_str(bound, 3)
    return out


def bracket(b: Bracket | None, bound=None, digits: int = DIGITS):
    if b is None:
        return None
    return {"lo": value(b.lo, bound, digits), "hi": value(b.hi, bound, digits)}


def _generic(x, digits: int = DIGITS):
    if isinstance(x, dict):
        return {str(k): _generic(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_generic(v, digits) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    return value(x, digits=digits)


def verdict_dict(v: Verdict, digits: int = DIGITS) -> dict:
    return {
        "kind": v.kind.value,
        "rule": v.rule,
        "proved": v.proved,
        "depth": v.depth,
        "total": value(v.total, digits=digits),
        "numbers": _generic(v.numbers, digits),
    }


def provenance(command: str, digest: str, **extra) -> dict:
    out = {"format": FORMAT, "command": command, "input_sha256": digest, "version": __version__}
    out.update(extra)
    return out


def analysis_dict(rep: ExtensionReport, prov: dict, digits: int = DIGITS) -> dict:
    bound = rep.residual if rep.numeric_mode != "exact" else None

    def seq(xs):
        return [value(x, bound, digits) for x in xs]

    r = rep.ratios
    ext = rep.extension
    return {
        "provenance": prov,
        "numeric_mode": rep.numeric_mode,
        "depth": rep.depth,
        "verdict": verdict_dict(rep.verdict, digits),
        "positivity": {
            "holds": rep.positivity,
            "violations": [[n, w + 1, v + 1] for n, w, v in rep.positivity_violations[:50]],
        },
        "extension": {
            "depth": ext.depth,
            "total": bracket(ext.total, bound, digits),
            "unbounded_at_depth": [[n, v + 1] for n, v in sorted(ext.unbounded)],
        },
        "observed_C": value(r.observed_C, digits=digits),
        "sequences": {
            "S": seq(rep.S),
            "d": seq(rep.d),
            "t3": seq(rep.t3),
            "s4": seq(rep.s4),
            "u5": seq(rep.u5),
            "m7": seq(rep.m7),
            "r7": seq(rep.r7),
            "rho": [bracket(b, bound, digits) for b in r.rho],
            "rho_prime": [bracket(b, bound, digits) for b in r.rho_prime],
            "sigma": [bracket(b, bound, digits) for b in r.sigma],
            "prop_bound": seq(r.bound),
        },
        "notes": r.notes,
    }


CSV_COLUMNS = ["n", "S_n", "d_n", "t3_n", "s4_n", "u5_n", "m7_n", "r7_n", "rho_n", "rho'_n", "sigma_n"]


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Bracket):
        return _cell(x.lo)
    if isinstance(x, (Fraction, int)):
        return fraction_str(x)
    return decimal_str(x)


def analysis_csv(rep: ExtensionReport) -> str:
    """One row per level; ratio columns hold the lower ends of their brackets."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    r = rep.ratios
    for i in range(rep.depth):
        w.writerow([i + 1] + [_cell(col[i]) for col in (
            rep.S, rep.d, rep.t3, rep.s4, rep.u5, rep.m7, rep.r7,
            r.rho, r.rho_prime, r.sigma)])
    return buf.getvalue()


def sample_dict(stats: EmpiricalStats, rows: list[Deviation], prov: dict) -> dict:
    return {
        "provenance": prov,
        "depth": stats.depth,
        "count": stats.count,
        "seed": stats.seed,
        "counts": stats.counts,
        "comparison": [
            {
                "level": d.level,
                "vertex": d.vertex + 1,
                "exact": value(d.exact),
                "frequency": fraction_str(d.frequency),
                "stderr": decimal_str(d.stderr, 6),
                "z": decimal_str(d.z, 6),
                "flagged": d.flagged,
            }
            for d in rows
        ],
        "flagged": sum(d.flagged for d in rows),
    }


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
