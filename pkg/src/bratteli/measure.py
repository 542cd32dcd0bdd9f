"""Tail-invariant measures on Bratteli path spaces.

A tail-invariant measure is determined by its cylinder values ``p_v^(n)``,
the mass of any single finite path from the root to ``v``.  They satisfy

    p_w^(n) = sum_v f^(n)_{v,w} p_v^(n+1)          (compatibility)
    sum_v h_v^(n) p_v^(n) = 1                      (probability)

Two backings are provided: the stationary family built from a
Perron-Frobenius eigenvector of ``F^T``, and explicit per-level tables.
Exact mode keeps ``Fraction`` values; float mode uses ``mpmath`` numbers
at a configurable working precision and tracks residuals.
"""
from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .diagram import DiagramSpec, IncidenceMatrix, heights
from .linalg import determinant, nullspace, primitive, strongly_connected

EXACT = "exact"
FLOAT = "float"


class MeasureError(ValueError):
    def __init__(self, message: str, level: int | None = None, vertex: int | None = None):
        super().__init__(message)
        self.level = level
        self.vertex = vertex


class EigenError(ValueError):
    pass


def default_dps(tol: float) -> int:
    digits = max(1, math.ceil(-math.log10(tol))) if tol > 0 else 15
    return max(2 * digits, 20)


# Perron-Frobenius eigendata ------------------------------------------------------


@dataclass(frozen=True)
class PFEigendata:
    lam: Fraction | mpmath.mpf
    x: tuple
    certification: str  # "exact-verified" | "float-residual"
    residual: float = 0.0
    dps: int | None = None
    tolerance: float = 0.0

    @property
    def exact(self) -> bool:
        return self.certification == "exact-verified"


def _block_radius(block: list[list[int]]) -> int | None:
    """Exact spectral radius of an irreducible block, if it is an integer."""
    n = len(block)
    if n == 1:
        return block[0][0]
    bound = min(max(sum(r) for r in block), max(sum(c) for c in zip(*block)))
    for k in range(bound, 0, -1):
        shifted = [[block[i][j] - (k if i == j else 0) for j in range(n)] for i in range(n)]
        if determinant(shifted) != 0:
            continue
        # largest integer root found; it is the radius iff its eigenvector is positive
        basis = nullspace([list(r) for r in zip(*shifted)])
        if len(basis) == 1:
            v = basis[0]
            if all(x > 0 for x in v) or all(x < 0 for x in v):
                return k
        return None
    return None


def exact_spectral_radius(m: IncidenceMatrix | Sequence[Sequence[int]]) -> int | None:
    """Spectral radius of a nonnegative integer matrix when it is an integer.

    Uses the Frobenius normal form: the radius is the maximum over the
    irreducible diagonal blocks.  Returns ``None`` if some block has an
    irrational radius that could exceed the rational ones.
    """
    rows = [list(r) for r in IncidenceMatrix.of(m).entries]
    best = 0
    unknown = []
    for comp in strongly_connected(rows):
        block = [[rows[i][j] for j in comp] for i in comp]
        if len(comp) == 1 and block[0][0] == 0:
            continue
        r = _block_radius(block)
        if r is None:
            unknown.append(block)
        else:
            best = max(best, r)
    for block in unknown:
        # an irreducible block with a non-integer radius: only harmless if it
        # is certainly below `best`, i.e. its row sums bound it strictly
        if max(sum(r) for r in block) >= best and max(sum(c) for c in zip(*block)) >= best:
            return None
    return best


def _nonnegative_eigenvector(mt: list[list[int]], lam: int) -> list[Fraction] | None:
    shifted = [[mt[i][j] - (lam if i == j else 0) for j in range(len(mt))] for i in range(len(mt))]
    basis = nullspace(shifted)
    candidates = list(basis)
    if len(basis) > 1:
        candidates.append([sum(col) for col in zip(*basis)])
    for v in candidates:
        for sign in (1, -1):
            w = [sign * x for x in v]
            if all(x >= 0 for x in w) and any(w):
                return primitive(w)
    return None


def verify_eigendata(m, lam, x) -> bool:
    m = IncidenceMatrix.of(m)
    mt = m.transpose()
    if len(x) != m.rows:
        return False
    if any(v < 0 for v in x) or not any(x):
        return False
    return all(a == lam * b for a, b in zip(mt.apply(x), x))


def pf_eigendata(
    m,
    mode: str = EXACT,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    dps: int | None = None,
) -> PFEigendata:
    """Dominant eigenvalue ``lam`` of ``m`` with ``m^T x = lam x``, ``x >= 0``.

    Exact mode succeeds when the radius is an integer and a nonnegative
    eigenvector exists in the rational eigenspace; otherwise it falls back to
    float mode with the residual ``|m^T x - lam x|_inf / |x|_inf`` reported.
    """
    m = IncidenceMatrix.of(m)
    if m.rows != m.cols:
        raise EigenError("pf_eigendata needs a square matrix")
    if not any(any(r) for r in m.entries):
        raise EigenError("matrix is zero")
    if mode == EXACT:
        lam = exact_spectral_radius(m)
        if lam is not None and lam > 0:
            x = _nonnegative_eigenvector([list(r) for r in m.transpose().entries], lam)
            if x is not None and verify_eigendata(m, lam, x):
                return PFEigendata(Fraction(lam), tuple(x), "exact-verified")
    elif mode != FLOAT:
        raise ValueError(f"unknown numeric mode {mode!r}")
    return _float_pf(m, tol, max_iter, dps or default_dps(tol))


def _float_pf(m: IncidenceMatrix, tol: float, max_iter: int, dps: int) -> PFEigendata:
    n = m.rows
    with mpmath.workdps(dps):
        # shift by I so periodic irreducible blocks still converge
        a = mpmath.matrix([[m[j][i] + (1 if i == j else 0) for j in range(n)] for i in range(n)])
        x = mpmath.matrix([1] * n)
        lam = mpmath.mpf(0)
        # aim well below tol so errors compounding over many levels stay inside it
        target = min(tol, mpmath.mpf(10) ** (5 - dps))
        mt = mpmath.matrix([[m[j][i] for j in range(n)] for i in range(n)])
        for _ in range(max_iter):
            y = a * x
            norm = max(abs(v) for v in y)
            if norm == 0:
                raise EigenError("spectral radius is zero")
            x = y / norm
            z = mt * x
            lam = max(z[i] / x[i] for i in range(n) if x[i] > 0) if any(x[i] > 0 for i in range(n)) else 0
            resid = max(abs(z[i] - lam * x[i]) for i in range(n)) / max(abs(v) for v in x)
            if resid <= target:
                break
        else:
            if resid > tol:
                raise EigenError(f"power iteration did not reach tolerance {tol} in {max_iter} steps")
        if lam <= 0:
            raise EigenError("spectral radius is zero")
        xs = tuple(max(v, mpmath.mpf(0)) for v in x)
        return PFEigendata(+lam, xs, "float-residual", float(resid), dps, tol)


# measures -------------------------------------------------------------------------


@dataclass
class CylinderMeasure:
    """Cylinder values ``p_v^(n)`` on the path space of ``spec``."""

    spec: DiagramSpec
    mode: str = EXACT
    tolerance: float = 0.0
    dps: int | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    backing = "abstract"
    depth = None

    @property
    def is_exact(self) -> bool:
        return self.mode == EXACT

    def vector(self, n: int) -> tuple:
        if n < 1:
            raise MeasureError(f"level out of range: {n}", n)
        if self.depth is not None and n > self.depth:
            raise MeasureError(f"insufficient table depth: level {n} requested, table has {self.depth}", n)
        if n not in self._cache:
            self._cache.setdefault(n, self._compute(n))
        return self._cache[n]

    def _compute(self, n: int) -> tuple:
        raise NotImplementedError

    def p(self, n: int, v: int):
        return self.vector(n)[v]

    def towers(self, n: int) -> tuple:
        return tuple(h * p for h, p in zip(heights(self.spec, n), self.vector(n)))

    def tower(self, n: int, v: int):
        return heights(self.spec, n)[v] * self.p(n, v)

    def to_table(self, depth: int) -> list[tuple]:
        return [self.vector(n) for n in range(1, depth + 1)]


@dataclass
class StationaryMeasure(CylinderMeasure):
    """``p_w^(n) = c * lam^(1-n) * x_w`` on a stationary diagram."""

    eig: PFEigendata | None = None
    backing = "stationary-pf"

    def __post_init__(self) -> None:
        eig = self.eig
        if self.spec.provider != "stationary":
            raise MeasureError("stationary measures need a stationary diagram")
        if eig is None or eig.lam <= 0:
            raise MeasureError("eigenvalue must be positive")
        if any(v < 0 for v in eig.x):
            raise MeasureError("eigenvector has a negative entry")
        if len(eig.x) != self.spec.size(1):
            raise MeasureError("eigenvector length does not match the diagram")
        self.mode = EXACT if eig.exact else FLOAT
        if eig.exact:
            if not verify_eigendata(self.spec.matrices[0], eig.lam, eig.x):
                raise MeasureError("eigendata does not satisfy F^T x = lam x exactly")
            self.lam = Fraction(eig.lam)
            x = tuple(Fraction(v) for v in eig.x)
            mass = sum(r * v for r, v in zip(self.spec.root_edges, x))
        else:
            self.dps = self.dps or eig.dps or 30
            self.tolerance = self.tolerance or eig.tolerance or max(eig.residual, 1e-300)
            with mpmath.workdps(self.dps):
                self.lam = mpmath.mpf(eig.lam)
                x = tuple(mpmath.mpf(v) for v in eig.x)
                mass = mpmath.fsum(r * v for r, v in zip(self.spec.root_edges, x))
        if mass == 0:
            raise MeasureError("eigenvector vanishes on every root edge; cannot normalize")
        self.x = x
        self.c = 1 / mass

    def _compute(self, n: int) -> tuple:
        if self.is_exact:
            scale = self.c / self.lam ** (n - 1)
            return tuple(scale * v for v in self.x)
        with mpmath.workdps(self.dps):
            scale = self.c / self.lam ** (n - 1)
            return tuple(scale * v for v in self.x)


@dataclass
class TableMeasure(CylinderMeasure):
    """Explicit per-level cylinder values for levels ``1..len(levels)``."""

    levels: tuple = ()
    backing = "explicit-table"

    def __post_init__(self) -> None:
        conv = _to_fraction if self.mode == EXACT else _to_mpf
        if self.mode == FLOAT:
            self.dps = self.dps or default_dps(self.tolerance or 1e-12)
        self.levels = tuple(tuple(conv(v) for v in lvl) for lvl in self.levels)
        self.depth = len(self.levels)
        for n, lvl in enumerate(self.levels, start=1):
            if not self.spec.has_level(n) or len(lvl) != self.spec.size(n):
                raise MeasureError(f"table level {n} has the wrong number of vertices", n)
            for v, x in enumerate(lvl):
                if x < 0:
                    raise MeasureError(f"negative cylinder value at level {n}, vertex {v + 1}", n, v)

    def _compute(self, n: int) -> tuple:
        return self.levels[n - 1]


def _to_fraction(v) -> Fraction:
    if isinstance(v, float):
        raise MeasureError("exact tables need integers, fractions or 'num/den' strings")
    return Fraction(v)


def _to_mpf(v):
    if isinstance(v, (str, Fraction)):
        f = Fraction(v)
        return mpmath.mpf(f.numerator) / f.denominator
    return mpmath.mpf(v)


def stationary_measure(sub: DiagramSpec, eig: PFEigendata) -> StationaryMeasure:
    return StationaryMeasure(sub, eig=eig)


def explicit_measure(
    spec: DiagramSpec,
    table: Sequence[Sequence],
    mode: str = EXACT,
    tol: float = 1e-12,
) -> TableMeasure:
    """Wrap a per-level table and reject it unless it is a compatible probability measure."""
    if len(table) < 2:
        raise MeasureError("table depth must be at least 2")
    mu = TableMeasure(spec, mode=mode, tolerance=tol if mode == FLOAT else 0.0, levels=tuple(table))
    report = check_compatibility(mu, spec, len(table))
    if not report.clean:
        first = report.violations[0]
        raise MeasureError(first.message, first.level, first.vertex)
    return mu


# compatibility ---------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureViolation:
    level: int
    vertex: int | None
    kind: str
    residual: object
    message: str


@dataclass
class CompatibilityReport:
    depth: int
    mode: str
    tolerance: float
    max_residual: object = 0
    violations: list[MeasureViolation] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations


def check_compatibility(mu: CylinderMeasure, spec: DiagramSpec, depth: int) -> CompatibilityReport:
    """Check compatibility and normalization of ``mu`` level by level up to ``depth``."""
    tol = mu.tolerance if not mu.is_exact else 0
    report = CompatibilityReport(depth, mu.mode, tol)
    ctx = mpmath.workdps(mu.dps) if mu.dps else nullcontext()
    with ctx:
        for n in range(1, depth + 1):
            p = mu.vector(n)
            h = heights(spec, n)
            total = sum(a * b for a, b in zip(h, p))
            resid = abs(total - 1)
            report.max_residual = max(report.max_residual, resid)
            if resid > tol:
                kind = "normalization"
                msg = (f"not a probability measure: sum_v h_v p_v = {_show(total)} at level {n}")
                report.violations.append(MeasureViolation(n, None, kind, resid, msg))
            if n < depth:
                q = mu.vector(n + 1)
                pushed = spec.incidence(n).transpose().apply(q)
                for w, (a, b) in enumerate(zip(p, pushed)):
                    r = abs(a - b)
                    report.max_residual = max(report.max_residual, r)
                    if r > tol * max(1, abs(a)):
                        msg = (f"compatibility violated at level {n}, vertex {w + 1}: "
                               f"p = {_show(a)} but sum_v f p^(n+1) = {_show(b)}")
                        report.violations.append(MeasureViolation(n, w, "compatibility", r, msg))
    return report


def tower_measure(mu: CylinderMeasure, spec: DiagramSpec, n: int, v: int):
    """Mass ``h_v^(n) p_v^(n)`` of the tower of paths through ``v`` at level ``n``."""
    if not 0 <= v < spec.size(n):
        raise MeasureError(f"vertex {v + 1} not present at level {n}", n, v)
    return heights(spec, n)[v] * mu.p(n, v)


def float_dominant(m) -> float:
    """Floating-point spectral radius, for diagnostics only."""
    arr = np.array(IncidenceMatrix.of(m).entries, dtype=float)
    return float(max(abs(np.linalg.eigvals(arr))))


def _show(x) -> str:
    return str(x) if isinstance(x, Fraction) else mpmath.nstr(x, 15)

