"""Bratteli diagrams given by level-indexed incidence matrices.

Levels are numbered from 1; level 0 is the root ``v0``.  ``F_n`` maps level
``n`` to level ``n + 1`` and has shape ``|V_{n+1}| x |V_n|``; entry
``F_n[v][w]`` counts the edges from ``w`` (level ``n``) to ``v`` (level ``n+1``).
The edges from the root are given by ``root_edges`` (default: one edge to
every vertex of level 1).  Vertex indices are 0-based throughout the library.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = tuple[tuple[int, ...], ...]


class DiagramError(ValueError):
    """Raised for malformed diagrams or out-of-range level requests."""


class RestrictionError(DiagramError):
    """A vertex selection does not define a valid subdiagram."""

    def __init__(self, message: str, level: int | None = None, index: int | None = None):
        super().__init__(message)
        self.level = level
        self.index = index


@dataclass(frozen=True)
class IncidenceMatrix:
    entries: Matrix

    def __post_init__(self) -> None:
        rows = tuple(tuple(r) for r in self.entries)
        if not rows or not rows[0]:
            raise DiagramError("incidence matrix must be non-empty")
        width = len(rows[0])
        for r in rows:
            if len(r) != width:
                raise DiagramError("incidence matrix rows have unequal lengths")
            for x in r:
                if isinstance(x, bool) or not isinstance(x, int) or x < 0:
                    raise DiagramError(f"entries must be nonnegative integers, got {x!r}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def of(cls, m: "IncidenceMatrix | Sequence[Sequence[int]]") -> "IncidenceMatrix":
        return m if isinstance(m, IncidenceMatrix) else cls(tuple(tuple(r) for r in m))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def __getitem__(self, idx: int) -> tuple[int, ...]:
        return self.entries[idx]

    def transpose(self) -> "IncidenceMatrix":
        return IncidenceMatrix(tuple(zip(*self.entries)))

    def __matmul__(self, other: "IncidenceMatrix") -> "IncidenceMatrix":
        if self.cols != other.rows:
            raise DiagramError("dimension mismatch in matrix product")
        cols = list(zip(*other.entries))
        return IncidenceMatrix(
            tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.entries)
        )

    def apply(self, vec: Sequence) -> tuple:
        return tuple(sum(a * b for a, b in zip(row, vec)) for row in self.entries)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "IncidenceMatrix":
        return IncidenceMatrix(tuple(tuple(self.entries[i][j] for j in cols) for i in rows))

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]


PROVIDERS = ("stationary", "cyclic", "explicit")


@dataclass(frozen=True)
class DiagramSpec:
    """A Bratteli diagram.

    ``provider`` is one of ``stationary`` (one matrix repeated), ``cyclic``
    (a finite list repeated) or ``explicit`` (finitely many levels).
    """

    provider: str
    matrices: tuple[IncidenceMatrix, ...]
    root_edges: tuple[int, ...]
    max_materialized_level: int = 2000
    _heights: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.provider not in PROVIDERS:
            raise DiagramError(f"unknown provider {self.provider!r}")
        mats = tuple(IncidenceMatrix.of(m) for m in self.matrices)
        if not mats:
            raise DiagramError("at least one incidence matrix is required")
        if self.provider == "stationary" and len(mats) != 1:
            raise DiagramError("stationary diagrams take exactly one matrix")
        object.__setattr__(self, "matrices", mats)
        root = tuple(self.root_edges)
        object.__setattr__(self, "root_edges", root)
        for k in range(len(mats) - 1):
            if mats[k + 1].cols != mats[k].rows:
                raise DiagramError(f"matrix dimensions do not chain at level {k + 2}")
        if self.provider != "explicit" and mats[0].cols != mats[-1].rows:
            raise DiagramError("repeated matrices must chain back onto themselves")
        if len(root) != mats[0].cols:
            raise DiagramError(f"root_edges has length {len(root)}, level 1 has {mats[0].cols} vertices")
        if any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in root):
            raise DiagramError("root_edges must be nonnegative integers")
        if not any(root):
            raise DiagramError("root_edges needs at least one positive entry")

    # constructors -----------------------------------------------------------

    @classmethod
    def stationary(cls, matrix, root_edges: Sequence[int] | None = None) -> "DiagramSpec":
        m = IncidenceMatrix.of(matrix)
        return cls("stationary", (m,), tuple(root_edges) if root_edges is not None else (1,) * m.cols)

    @classmethod
    def cyclic(cls, matrices, root_edges: Sequence[int] | None = None) -> "DiagramSpec":
        mats = tuple(IncidenceMatrix.of(m) for m in matrices)
        return cls("cyclic", mats, tuple(root_edges) if root_edges is not None else (1,) * mats[0].cols)

    @classmethod
    def explicit(cls, matrices, root_edges: Sequence[int] | None = None) -> "DiagramSpec":
        mats = tuple(IncidenceMatrix.of(m) for m in matrices)
        return cls("explicit", mats, tuple(root_edges) if root_edges is not None else (1,) * mats[0].cols)

    # structure ----------------------------------------------------------------

    @property
    def max_level(self) -> int | None:
        """Deepest level with known vertices (``None`` if unbounded)."""
        return len(self.matrices) + 1 if self.provider == "explicit" else None

    def has_level(self, n: int) -> bool:
        return n >= 1 and (self.max_level is None or n <= self.max_level)

    def incidence(self, n: int) -> IncidenceMatrix:
        """The matrix ``F_n`` between levels ``n`` and ``n + 1``."""
        if n < 1:
            raise DiagramError(f"level out of range: {n}")
        if self.provider == "stationary":
            return self.matrices[0]
        if self.provider == "cyclic":
            return self.matrices[(n - 1) % len(self.matrices)]
        if n > len(self.matrices):
            raise DiagramError(f"level out of range: {n} (explicit diagram has {len(self.matrices)} matrices)")
        return self.matrices[n - 1]

    def size(self, n: int) -> int:
        """Number of vertices at level ``n`` (``1`` at the root)."""
        if n == 0:
            return 1
        if n == 1:
            return self.matrices[0].cols
        return self.incidence(n - 1).rows

    def heights(self, n: int) -> tuple[int, ...]:
        return heights(self, n)

    def to_dict(self) -> dict:
        return {
            "provider": self.provider,
            "matrices": [m.tolist() for m in self.matrices],
            "root_edges": list(self.root_edges),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiagramSpec":
        mats = tuple(IncidenceMatrix.of(m) for m in data["matrices"])
        root = data.get("root_edges")
        return cls(data["provider"], mats, tuple(root) if root is not None else (1,) * mats[0].cols)


def incidence(spec: DiagramSpec, n: int) -> IncidenceMatrix:
    return spec.incidence(n)


def heights(spec: DiagramSpec, n: int) -> tuple[int, ...]:
    """Number of finite paths from the root to each vertex of level ``n``."""
    if n < 1:
        raise DiagramError(f"level out of range: {n}")
    if n > spec.max_materialized_level:
        raise DiagramError(f"level {n} exceeds max_materialized_level={spec.max_materialized_level}")
    cache = spec._heights
    if n in cache:
        return cache[n]
    start = max((k for k in cache if k < n), default=None)
    if start is None:
        h, start = spec.root_edges, 1
        cache.setdefault(1, h)
    else:
        h = cache[start]
    for k in range(start, n):
        h = spec.incidence(k).apply(h)
        cache.setdefault(k + 1, h)
    return cache[n]


def stochastic(spec: DiagramSpec, n: int) -> tuple[tuple[Fraction, ...], ...]:
    """``q_{v,w} = f_{v,w} h_w^(n) / h_v^(n+1)``; every row sums to 1."""
    f = spec.incidence(n)
    h, h1 = heights(spec, n), heights(spec, n + 1)
    return tuple(
        tuple(Fraction(f[v][w] * h[w], h1[v]) for w in range(f.cols)) for v in range(f.rows)
    )


# validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    level: int
    kind: str
    index: int | None
    message: str
    severity: str = "error"


@dataclass
class ValidationReport:
    depth: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def valid(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "valid": self.valid,
            "violations": [
                {"level": v.level, "kind": v.kind, "index": v.index, "severity": v.severity, "message": v.message}
                for v in self.violations
            ],
        }


def validate(spec: DiagramSpec, depth: int) -> ValidationReport:
    """Check the diagram axioms up to ``depth`` levels.

    Each level ``n < depth`` is inspected for zero rows (a vertex with no
    incoming edge) and zero columns (a vertex with no outgoing edge).
    A vertex with a single path running all the way to ``depth`` is
    reported as a warning: the path space would have an isolated point.
    """
    if depth < 1:
        raise DiagramError("depth must be >= 1")
    report = ValidationReport(depth)
    for v, e in enumerate(spec.root_edges):
        if e == 0:
            report.violations.append(Violation(
                1, "zero-root-edge", v,
                f"row without positive entry: vertex {v + 1} of level 1 has no edge from the root (r⁻¹(v')≠∅)",
            ))
    last =depth if spec.max_level is None else min(depth, spec.max_level)
    distinct = range(1, last) if spec.provider == "explicit" else range(1, min(last, len(spec.matrices) + 1))
    for n in distinct:
        f = spec.incidence(n)
        for v in range(f.rows):
            if not any(f[v]):
                report.violations.append(Violation(
                    n + 1, "zero-row", v,
                    f"row without positive entry: vertex {v + 1} of level {n + 1} has no incoming edge (r⁻¹(v')≠∅)",
                ))
        for w in range(f.cols):
            if not any(f[v][w] for v in range(f.rows)):
                report.violations.append(Violation(
                    n, "zero-column", w,
                    f"column without positive entry: vertex {w + 1} of level {n} has no outgoing edge (s⁻¹(v)≠∅)",
                ))
    if report.errors:
        return report
    # paths from each vertex down to level `last`
    g = (1,) * spec.size(last)
    forced: dict[int, tuple[int, ...]] = {last: g}
    for n in range(last - 1, 0, -1):
        g = spec.incidence(n).transpose().apply(g)
        forced[n] = g
    for n in range(1, max(1, last // 2) + 1):
        if n == last:
            break
        for v, count in enumerate(forced[n]):
            if count == 1:
                report.violations.append(Violation(
                    n, "isolated-path", v,
                    f"vertex {v + 1} of level {n} has a single path down to level {last}; "
                    "path space may not be a Cantor set",
                    severity="warning",
                ))
    return report


# selections ----------------------------------------------------------------


@dataclass(frozen=True)
class VertexSelection:
    """Per-level vertex subsets ``W_n`` (0-based), starting at level 1."""

    provider: str
    subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.provider not in ("stationary", "explicit"):
            raise DiagramError(f"unknown selection provider {self.provider!r}")
        subsets = tuple(tuple(sorted(set(s))) for s in self.subsets)
        if not subsets:
            raise DiagramError("selection needs at least one subset")
        if self.provider == "stationary" and len(subsets) != 1:
            raise DiagramError("stationary selections take exactly one subset")
        for s in subsets:
            if not s:
                raise DiagramError("selection subsets must be non-empty")
            if any(i < 0 for i in s):
                raise DiagramError("selection indices must be nonnegative")
        object.__setattr__(self, "subsets", subsets)

    @classmethod
    def stationary(cls, subset: Sequence[int]) -> "VertexSelection":
        return cls("stationary", (tuple(subset),))

    @classmethod
    def explicit(cls, subsets: Sequence[Sequence[int]]) -> "VertexSelection":
        return cls("explicit", tuple(tuple(s) for s in subsets))

    @property
    def max_level(self) -> int | None:
        return len(self.subsets) if self.provider == "explicit" else None

    def at(self, n: int) -> tuple[int, ...]:
        if n < 1:
            raise DiagramError("selections start at level 1")
        if self.provider == "stationary":
            return self.subsets[0]
        if n > len(self.subsets):
            raise DiagramError(f"level out of range: {n} (selection has {len(self.subsets)} levels)")
        return self.subsets[n - 1]

    def to_dict(self) -> dict:
        return {"provider": self.provider, "subsets": [[i + 1 for i in s] for s in self.subsets]}

    @classmethod
    def from_dict(cls, data: dict) -> "VertexSelection":
        return cls(data["provider"], tuple(tuple(i - 1 for i in s) for s in data["subsets"]))


def complement(sel: VertexSelection, n: int, count: int) -> tuple[int, ...]:
    chosen = set(sel.at(n))
    return tuple(i for i in range(count) if i not in chosen)


def check_selection(spec: DiagramSpec, sel: VertexSelection, n: int) -> tuple[int, ...]:
    """Return ``W_n`` after checking it is a proper, in-range subset."""
    w = sel.at(n)
    count = spec.size(n)
    if w[-1] >= count:
        raise RestrictionError(f"selection index {w[-1] + 1} out of range at level {n} ({count} vertices)", n, w[-1])
    if len(w) == count:
        raise RestrictionError(f"selection must be proper: W_{n} contains every vertex", n)
    return w


def _common_depth(*bounds: int | None) -> int | None:
    finite = [b for b in bounds if b is not None]
    return min(finite) if finite else None


def restrict(spec: DiagramSpec, sel: VertexSelection, depth: int | None = None) -> DiagramSpec:
    """The vertex subdiagram on ``W = (W_n)``.

    Stationary selections on stationary or cyclic diagrams give diagrams of
    the same kind; anything else gives an explicit diagram, limited by the
    shorter of the two inputs (or ``depth`` levels if both are unbounded).
    """
    top = _common_depth(spec.max_level, sel.max_level)
    if sel.provider == "stationary" and spec.provider in ("stationary", "cyclic"):
        period = len(spec.matrices)
        levels = range(1, period + 1)
        provider = spec.provider
    else:
        if top is None:
            if depth is None:
                raise RestrictionError("restriction of unbounded inputs needs a depth")
            top = depth
        elif depth is not None:
            top = min(top, depth)
        if top < 2:
            raise RestrictionError("restriction needs at least two levels")
        levels = range(1, top)
        provider = "explicit"
    mats = []
    for n in levels:
        rows, cols = check_selection(spec, sel, n + 1), check_selection(spec, sel, n)
        sub = spec.incidence(n).submatrix(rows, cols)
        for i, row in enumerate(sub.entries):
            if not any(row):
                raise RestrictionError(
                    f"subdiagram vertex {rows[i] + 1} of level {n + 1} has no incoming edge inside W", n + 1, rows[i])
        for j in range(sub.cols):
            if not any(sub[i][j] for i in range(sub.rows)):
                raise RestrictionError(
                    f"subdiagram vertex {cols[j] + 1} of level {n} has no outgoing edge inside W", n, cols[j])
        mats.append(sub)
    w1 = check_selection(spec, sel, 1)
    root = tuple(spec.root_edges[i] for i in w1)
    if not any(root):
        raise RestrictionError("no root edge reaches W_1", 1)
    return DiagramSpec(provider, tuple(mats), root, spec.max_materialized_level)


# telescoping ------------------------------------------------------------------


def _product(spec: DiagramSpec, lo: int, hi: int) -> IncidenceMatrix:
    """``F_{hi-1} ... F_lo``: edge counts from level ``lo`` to level ``hi``."""
    m = spec.incidence(lo)
    for k in range(lo + 1, hi):
        m = spec.incidence(k) @ m
    return m


def telescope(spec: DiagramSpec, levels: Sequence[int]) -> DiagramSpec:
    """Keep only the given levels; new level ``i`` is old level ``levels[i-1]``."""
    levels = list(levels)
    if len(levels) < 2:
        raise DiagramError("telescoping needs at least two levels")
    if levels[0] < 1 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise DiagramError("levels must be strictly increasing and start at >= 1")
    if spec.max_level is not None and levels[-1] > spec.max_level:
        raise DiagramError(f"level out of range: {levels[-1]}")
    mats = tuple(_product(spec, a, b) for a, b in zip(levels, levels[1:]))
    return DiagramSpec("explicit", mats, heights(spec, levels[0]), spec.max_materialized_level)


def telescope_every(spec: DiagramSpec, step: int, start: int = 1) -> DiagramSpec:
    """Keep levels ``start, start + step, ...`` of a stationary or cyclic diagram."""
    if spec.provider == "explicit":
        raise DiagramError("use telescope() with a level list for explicit diagrams")
    if step < 1 or start < 1:
        raise DiagramError("step and start must be >= 1")
    period = len(spec.matrices)
    blocks = period // gcd(period, step)
    mats = tuple(_product(spec, start + k * step, start + (k + 1) * step) for k in range(blocks))
    root = heights(spec, start)
    if len(set(mats)) == 1:
        return DiagramSpec("stationary", mats[:1], root, spec.max_materialized_level)
    return DiagramSpec("cyclic", mats, root, spec.max_materialized_level)

