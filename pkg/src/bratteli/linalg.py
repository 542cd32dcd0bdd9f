"""Small exact linear algebra over ``Fraction`` for dense matrices."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Rows = list[list[Fraction]]


def to_fractions(m: Sequence[Sequence]) -> Rows:
    return [[Fraction(x) for x in row] for row in m]


def rref(m: Sequence[Sequence]) -> tuple[Rows, list[int]]:
    a = to_fractions(m)
    rows, cols = len(a), len(a[0]) if a else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                k = a[i][c]
                a[i] = [x - k * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a, pivots


def nullspace(m: Sequence[Sequence]) -> list[list[Fraction]]:
    a, pivots = rref(m)
    cols = len(m[0])
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for row, p in zip(a, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def determinant(m: Sequence[Sequence]) -> Fraction:
    a = to_fractions(m)
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if a[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            a[c], a[pivot] = a[pivot], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            if a[i][c] != 0:
                k = a[i][c] / a[c][c]
                a[i] = [x - k * y for x, y in zip(a[i], a[c])]
    return det


def inverse(m: Sequence[Sequence]) -> Rows | None:
    """Exact inverse, or ``None`` if ``m`` is singular."""
    n = len(m)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(to_fractions(m))]
    a, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        return None
    return [row[n:] for row in a[:n]]


def primitive(v: Sequence[Fraction]) -> list[Fraction]:
    """Rescale a rational vector to coprime integers (sign kept)."""
    from math import gcd, lcm

    den = 1
    for x in v:
        den = lcm(den, Fraction(x).denominator)
    ints = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return [Fraction(x, g or 1) for x in ints]


def strongly_connected(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """SCCs of the digraph with an edge ``j -> i`` whenever ``adj[i][j] > 0``."""
    n = len(adj)
    succ = [[i for i in range(n) if adj[i][j]] for j in range(n)]
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    stack: list[int] = []
    on_stack = set()
    out: list[list[int]] = []
    counter = 0

    def visit(v: int) -> None:
        nonlocal counter
        index[v] = low[v] = counter
        counter += 1
        stack.append(v)
        on_stack.add(v)
        for w in succ[v]:
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            out.append(sorted(comp))

    for v in range(n):
        if v not in index:
            visit(v)
    return out


def reachable(adj: Sequence[Sequence[int]], sources: Sequence[int], forward: bool = True) -> set[int]:
    """Vertices reachable from ``sources`` along ``j -> i`` edges (``adj[i][j] > 0``)."""
    n = len(adj)
    seen = set(sources)
    todo = list(sources)
    while todo:
        u = todo.pop()
        nbrs = (i for i in range(n) if adj[i][u]) if forward else (j for j in range(n) if adj[u][j])
        for v in nbrs:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen
