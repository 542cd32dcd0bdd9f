"""JSON problem files: diagram, selection, measure and analysis settings.

Vertex indices in files are 1-based; they are converted to 0-based on load
and back on dump.  Numbers that must stay exact (eigenvalues, table entries)
may be written as integers or ``"num/den"`` strings.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema
import mpmath

from .diagram import DiagramError, DiagramSpec, VertexSelection, restrict
from .measure import (
    EXACT,
    FLOAT,
    CylinderMeasure,
    MeasureError,
    PFEigendata,
    default_dps,
    explicit_measure,
    pf_eigendata,
    stationary_measure,
    verify_eigendata,
)

_number = {"oneOf": [{"type": "integer", "minimum": 0}, {"type": "string", "pattern": r"^\s*\d+(\s*/\s*\d+)?\s*$"}]}
_matrix = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["diagram"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "diagram": {
            "type": "object",
            "required": ["provider", "matrices"],
            "additionalProperties": False,
            "properties": {
                "provider": {"enum": ["stationary", "cyclic", "explicit"]},
                "matrices": {"type": "array", "minItems": 1, "items": _matrix},
                "root_edges": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
            },
        },
        "selection": {
            "type": "object",
            "required": ["provider", "subsets"],
            "additionalProperties": False,
            "properties": {
                "provider": {"enum": ["stationary", "explicit"]},
                "subsets": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
                },
            },
        },
        "measure": {
            "type": "object",
            "required": ["type"],
            "oneOf": [
                {
                    "additionalProperties": False,
                    "properties": {
                        "type": {"const": "stationary-pf"},
                        "lambda": _number,
                        "eigenvector": {"type": "array", "minItems": 1, "items": _number},
                    },
                },
                {
                    "required": ["levels"],
                    "additionalProperties": False,
                    "properties": {
                        "type": {"const": "explicit-table"},
                        "levels": {
                            "type": "array",
                            "minItems": 2,
                            "items": {"type": "array", "minItems": 1, "items": _number},
                        },
                    },
                },
            ],
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "depth": {"type": "integer", "minimum": 1},
                "numeric_mode": {"enum": [EXACT, FLOAT]},
                "tolerance": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "null"}]},
                "window": {"type": "integer", "minimum": 2},
            },
        },
    },
}


class SpecFileError(ValueError):
    """Schema or semantic error, carrying a JSON-pointer path."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"


@dataclass
class AnalysisConfig:
    depth: int = 40
    numeric_mode: str = EXACT
    tolerance: float | None = None
    window: int = 10


@dataclass
class Problem:
    diagram: DiagramSpec
    selection: VertexSelection | None
    measure: dict | None
    analysis: AnalysisConfig
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def digest(self) -> str:
        return input_digest(self.raw)


def input_digest(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def parse(raw: dict) -> Problem:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise SpecFileError(_pointer(err.absolute_path), err.message)
    d = raw["diagram"]
    try:
        diagram = DiagramSpec.from_dict(d)
    except DiagramError as exc:
        raise SpecFileError(_locate_diagram_error(d), str(exc)) from exc
    selection = None
    if "selection" in raw:
        selection = VertexSelection.from_dict(raw["selection"])
        for k, subset in enumerate(selection.subsets):
            level = k + 1
            if not diagram.has_level(level):
                raise SpecFileError(f"/selection/subsets/{k}", f"level {level} does not exist in the diagram")
            if subset[-1] >= diagram.size(level):
                raise SpecFileError(
                    f"/selection/subsets/{k}",
                    f"vertex index {subset[-1] + 1} out of range (level {level} has {diagram.size(level)} vertices)",
                )
    a = raw.get("analysis", {})
    analysis = AnalysisConfig(
        a.get("depth", 40), a.get("numeric_mode", EXACT), a.get("tolerance"), a.get("window", 10)
    )
    if analysis.numeric_mode == FLOAT and analysis.tolerance is None:
        raise SpecFileError("/analysis/tolerance", "float numeric mode requires a tolerance")
    return Problem(diagram, selection, raw.get("measure"), analysis, copy.deepcopy(raw))


def _locate_diagram_error(d: dict) -> str:
    mats = d.get("matrices", [])
    for k in range(len(mats) - 1):
        if mats[k + 1] and mats[k] and len(mats[k + 1][0]) != len(mats[k]):
            return f"/diagram/matrices/{k + 1}"
    if "root_edges" in d:
        return "/diagram/root_edges"
    return "/diagram/matrices"


def load(path: str | Path) -> Problem:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecFileError("/", f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SpecFileError("/", "top level must be an object")
    return parse(raw)


def dump(problem: Problem) -> dict:
    out: dict = {}
    for key in ("name", "description"):
        if key in problem.raw:
            out[key] = problem.raw[key]
    out["diagram"] = problem.diagram.to_dict()
    if problem.selection is not None:
        out["selection"] = problem.selection.to_dict()
    if problem.measure is not None:
        out["measure"] = copy.deepcopy(problem.measure)
    a = problem.analysis
    out["analysis"] = {"depth": a.depth, "numeric_mode": a.numeric_mode, "tolerance": a.tolerance, "window": a.window}
    return out


def target_diagram(problem: Problem, depth: int) -> DiagramSpec:
    """The diagram carrying the measure: the subdiagram if a selection is given."""
    if problem.selection is None:
        return problem.diagram
    return restrict(problem.diagram, problem.selection, depth=depth)


def build_measure(problem: Problem, depth: int, mode: str | None = None,
                  tol: float | None = None) -> CylinderMeasure:
    mode = mode or problem.analysis.numeric_mode
    tol = tol if tol is not None else (problem.analysis.tolerance or 1e-12)
    if problem.measure is None:
        raise MeasureError("problem file has no measure")
    target = target_diagram(problem, depth)
    m = problem.measure
    if m["type"] == "explicit-table":
        return explicit_measure(target, m["levels"], mode=mode, tol=tol)
    if target.provider != "stationary":
        raise MeasureError("stationary-pf measures need a stationary (sub)diagram")
    F = target.matrices[0]
    if "lambda" in m or "eigenvector" in m:
        if "lambda" not in m or "eigenvector" not in m:
            raise MeasureError("give both lambda and eigenvector, or neither")
        lam = Fraction(m["lambda"])
        x = tuple(Fraction(v) for v in m["eigenvector"])
        if mode == EXACT:
            if not verify_eigendata(F, lam, x):
                raise MeasureError("supplied eigendata does not satisfy F^T x = lambda x with x >= 0")
            eig = PFEigendata(lam, x, "exact-verified")
        else:
            dps = default_dps(tol)
            with mpmath.workdps(dps):
                lam_f = mpmath.mpf(lam.numerator) / lam.denominator
                x_f = tuple(mpmath.mpf(v.numerator) / v.denominator for v in x)
                mt = F.transpose()
                resid = max(abs(a - lam_f * b) for a, b in zip(mt.apply(x_f), x_f)) / max(x_f)
            if resid > tol:
                raise MeasureError(f"supplied eigendata residual {float(resid):.3g} exceeds tolerance")
            eig = PFEigendata(lam_f, x_f, "float-residual", float(resid), dps)
    else:
        eig = pf_eigendata(F, mode=mode, tol=tol)
    return stationary_measure(target, eig)


EXAMPLES: dict[str, dict] = {
    "infinite-extension": {
        "name": "infinite-extension",
        "description": "Stationary diagram whose extension is infinite although the necessary series converges.",
        "diagram": {"provider": "stationary", "matrices": [[[3, 0, 0], [1, 2, 0], [0, 1, 3]]], "root_edges": [1, 1, 1]},
        "selection": {"provider": "stationary", "subsets": [[2, 3]]},
        "measure": {"type": "stationary-pf", "lambda": "3", "eigenvector": ["1", "1"]},
        "analysis": {"depth": 40, "numeric_mode": "exact", "tolerance": None, "window": 10},
    },
    "finite-extension": {
        "name": "finite-extension",
        "description": "Stationary diagram with a finite extension although the sufficient series diverges.",
        "diagram": {"provider": "stationary", "matrices": [[[2, 0, 0], [1, 2, 0], [0, 1, 3]]], "root_edges": [1, 1, 1]},
        "selection": {"provider": "stationary", "subsets": [[2, 3]]},
        "measure": {"type": "stationary-pf", "lambda": "3", "eigenvector": ["1", "1"]},
        "analysis": {"depth": 80, "numeric_mode": "exact", "tolerance": None, "window": 10},
    },
}
