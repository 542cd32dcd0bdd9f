"""Extension of a subdiagram measure to the tail saturation, and finiteness tests.

Given a diagram ``B``, a vertex selection ``W = (W_n)`` and a probability
measure ``mu`` on the subdiagram, the extension ``mu_hat`` gives any finite
path of ``B`` ending in ``w in W_n`` the subdiagram value ``p_w^(n)``.  Its
total mass is the limit of

    S_n = sum_{w in W_n} h_w^(n) p_w^(n)

with full-diagram heights ``h`` and subdiagram cylinder values ``p``.  The
increments ``S_{n+1} - S_n`` count the paths that enter ``W`` for good at
level ``n + 1``; they equal the criterion terms ``u_n`` exactly.

All sequences are indexed from ``n = 1`` (Python index ``n - 1``).
"""
from __future__ import annotations

from contextlib import nullcontext
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import mpmath

from .diagram import (
    DiagramError,
    DiagramSpec,
    VertexSelection,
    check_selection,
    complement,
    heights,
    restrict,
    stochastic,
)
from .linalg import inverse, reachable
from .measure import CylinderMeasure, StationaryMeasure, exact_spectral_radius, float_dominant


class AnalysisError(ValueError):
    pass


class PositivityError(AnalysisError):
    def __init__(self, violations: list[tuple[int, int, int]]):
        n, w, v = violations[0]
        super().__init__(
            f"positivity assumption violated: f_(w,v) = 0 for w = {w + 1} (level {n + 1}), "
            f"v = {v + 1} (level {n}); telescope the diagram first"
        )
        self.violations = violations


class VerdictKind(str, Enum):
    FINITE_PROVED = "FiniteProved"
    INFINITE_PROVED = "InfiniteProved"
    FINITE_TREND = "FiniteTrend"
    DIVERGENT_TREND = "DivergentTrend"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class Verdict:
    kind: VerdictKind
    rule: str
    depth: int | None = None
    total: Fraction | None = None
    numbers: dict = field(default_factory=dict)

    @property
    def proved(self) -> bool:
        return self.kind in (VerdictKind.FINITE_PROVED, VerdictKind.INFINITE_PROVED)


@dataclass(frozen=True)
class Bracket:
    """Closed interval ``[lo, hi]``; ``hi is None`` means no upper bound is known."""

    lo: object
    hi: object | None

    @property
    def exact(self) -> bool:
        return self.hi is not None and self.hi == self.lo

    @property
    def width(self):
        return None if self.hi is None else self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x and (self.hi is None or x <= self.hi)


def _bmin(bs: list[Bracket]) -> Bracket:
    his = [b.hi for b in bs if b.hi is not None]
    return Bracket(min(b.lo for b in bs), min(his) if his else None)


def _bmax(bs: list[Bracket]) -> Bracket:
    his = [b.hi for b in bs]
    return Bracket(max(b.lo for b in bs), None if any(h is None for h in his) else max(his))


def _bdiv(num: Bracket, den: Bracket) -> Bracket | None:
    """Bracket of ``num / den`` for nonnegative operands; ``None`` if ``den`` may vanish."""
    if den.lo <= 0:
        return None
    lo = 0 * num.lo if den.hi is None else num.lo / den.hi
    hi = None if num.hi is None else num.hi / den.lo
    return Bracket(lo, hi)


# shared setup ---------------------------------------------------------------------


class _Frame:
    """Selection sets, heights and subdiagram values for one analysis run."""

    def __init__(self, spec: DiagramSpec, sel: VertexSelection, mu: CylinderMeasure, levels: int):
        self.spec, self.sel, self.mu = spec, sel, mu
        try:
            self.sub = restrict(spec, sel, depth=levels)
        except DiagramError as exc:
            raise AnalysisError(f"selection does not define a subdiagram: {exc}") from exc
        _check_match(self.sub, mu, levels)

    def W(self, n: int) -> tuple[int, ...]:
        return check_selection(self.spec, self.sel, n)

    def Wp(self, n: int) -> tuple[int, ...]:
        return complement(self.sel, n, self.spec.size(n))

    def S(self, n: int):
        h = heights(self.spec, n)
        return sum(h[w] * p for w, p in zip(self.W(n), self.mu.vector(n)))

    def cross(self, n: int) -> list:
        """``sum_{v in W'_n} q^(n)_{w,v}`` for each ``w in W_{n+1}``."""
        q = stochastic(self.spec, n)
        wp = self.Wp(n)
        return [sum(q[w][v] for v in wp) for w in self.W(n + 1)]


def _check_match(sub: DiagramSpec, mu: CylinderMeasure, levels: int) -> None:
    other = mu.spec
    if other.root_edges != sub.root_edges:
        raise AnalysisError("measure/selection mismatch: root edges differ from the restricted diagram")
    for n in range(1, levels):
        if not (other.has_level(n + 1) and sub.has_level(n + 1)):
            break
        if other.incidence(n) != sub.incidence(n):
            raise AnalysisError(f"measure/selection mismatch: incidence matrices differ at level {n}")


def _ctx(mu: CylinderMeasure):
    return mpmath.workdps(mu.dps) if mu.dps else nullcontext()


# term sequences -------------------------------------------------------------------


def partial_masses(spec, sel, mu, N: int) -> list:
    """``S_1 .. S_N``: mass of the paths lying in ``W`` from level ``n`` on."""
    fr = _Frame(spec, sel, mu, N)
    with _ctx(mu):
        return [fr.S(n) for n in range(1, N + 1)]


def tower_entry_terms(spec, sel, mu, N: int) -> list:
    """``sum_{w in W_{n+1}} sum_{v in W'_n} q_{w,v} mu(Xbar_w^(n+1))`` (subdiagram tower mass)."""
    fr = _Frame(spec, sel, mu, N + 1)
    out = []
    with _ctx(mu):
        for n in range(1, N + 1):
            towers = mu.towers(n + 1)
            out.append(sum(c * t for c, t in zip(fr.cross(n), towers)))
    return out


def stochastic_entry_terms(spec, sel, N: int) -> list[Fraction]:
    """Measure-free terms ``sum_{w in W_{n+1}} sum_{v in W'_n} q_{w,v}``."""
    out = []
    for n in range(1, N + 1):
        q = stochastic(spec, n)
        wp = complement(sel, n, spec.size(n))
        out.append(sum((q[w][v] for w in check_selection(spec, sel, n + 1) for v in wp), Fraction(0)))
    return out


def criterion_terms(spec, sel, mu, N: int) -> tuple[list, list]:
    """``(u, d)`` with ``u_n`` the entry mass at level ``n + 1`` and ``d_n = S_{n+1} - S_n``."""
    fr = _Frame(spec, sel, mu, N + 1)
    u, d = [], []
    with _ctx(mu):
        S = [fr.S(n) for n in range(1, N + 2)]
        for n in range(1, N + 1):
            h = heights(spec, n + 1)
            p = mu.vector(n + 1)
            u.append(sum(c * h[w] * pw for c, w, pw in zip(fr.cross(n), fr.W(n + 1), p)))
            d.append(S[n] - S[n - 1])
    return u, d


@dataclass
class MinMaxTerms:
    q_terms: list[Fraction]
    height_terms: list[Fraction]
    positive: bool
    violations: list[tuple[int, int, int]]


def minmax_terms(spec, sel, N: int, require_positive: bool = False) -> MinMaxTerms:
    """``min_{w in W_{n+1}} max_{v in W'_n}`` of ``q_{w,v}`` and of ``h_v^(n) / h_w^(n+1)``.

    The height-ratio form only bounds the stochastic form when every
    ``f_{w,v}`` between ``W_{n+1}`` and ``W'_n`` is positive; offending
    ``(n, w, v)`` triples are collected and raise when ``require_positive``.
    """
    qs, rs, bad = [], [], []
    for n in range(1, N + 1):
        f = spec.incidence(n)
        q = stochastic(spec, n)
        h, h1 = heights(spec, n), heights(spec, n + 1)
        wp = complement(sel, n, spec.size(n))
        ws = check_selection(spec, sel, n + 1)
        bad.extend((n, w, v) for w in ws for v in wp if f[w][v] == 0)
        qs.append(min(max(q[w][v] for v in wp) for w in ws))
        rs.append(min(max(Fraction(h[v], h1[w]) for v in wp) for w in ws))
    if require_positive and bad:
        raise PositivityError(bad)
    return MinMaxTerms(qs, rs, not bad, bad)


# the extended measure ----------------------------------------------------------


@dataclass
class ExtendedMeasure:
    """Truncated extension ``mu_hat`` with lower bounds and residual brackets.

    ``lower[n]`` holds, for every vertex of level ``n``, the mass of a single
    cylinder restricted to paths that stay in ``W`` from some level
    ``<= depth`` on.  It is additive (``lower[n] = F_n^T lower[n+1]``) and
    converges upward to ``mu_hat``.  Summed over a level it gives exactly
    ``S_depth``; the shortfall of any tower is at most ``total - S_depth``.
    """

    depth: int
    W: dict
    heights: dict
    lower: dict
    total: Bracket
    unbounded: set = field(default_factory=set)

    @property
    def residual(self):
        return None if self.total.hi is None else self.total.hi - self.total.lo

    def _check(self, n: int) -> None:
        if not 1 <= n < self.depth:
            raise AnalysisError(f"extension depth {self.depth} < {n + 1}: deepen the truncation")

    def p_hat(self, n: int, v: int) -> Bracket:
        self._check(n)
        lo = self.lower[n][v]
        r = self.residual
        return Bracket(lo, None if r is None else lo + r / self.heights[n][v])

    def tower(self, n: int, v: int) -> Bracket:
        self._check(n)
        lo = self.heights[n][v] * self.lower[n][v]
        r = self.residual
        return Bracket(lo, None if r is None else lo + r)

    def level_mass(self, n: int):
        self._check(n)
        return sum(h * x for h, x in zip(self.heights[n], self.lower[n]))


def _lower_bounds(spec, fr: _Frame, depth: int, upto: int) -> dict:
    size = spec.size(depth)
    vec = [0 * fr.mu.p(depth, 0)] * size
    for w, p in zip(fr.W(depth), fr.mu.vector(depth)):
        vec[w] = p
    out = {depth: tuple(vec)}
    for n in range(depth - 1, upto - 1, -1):
        out[n] = spec.incidence(n).transpose().apply(out[n + 1])
    return out


def extend_measure(
    spec,
    sel,
    mu,
    depth: int,
    total: Fraction | None = None,
    cap=Fraction(10**6),
    window: int | None = None,
) -> ExtendedMeasure:
    """Extend ``mu`` to the saturation, truncated at ``depth``.

    ``total`` is the best known upper bound for the total mass (exact when a
    finiteness proof is available); without it the upper ends of the
    brackets are unknown.  A complement vertex is marked unbounded-at-depth
    when its tower lower bound exceeds ``cap`` or keeps growing by
    non-decreasing amounts over successive windows of truncation depth.
    """
    if depth < 2:
        raise AnalysisError("extension depth must be at least 2")
    fr = _Frame(spec, sel, mu, depth)
    with _ctx(mu):
        lower = _lower_bounds(spec, fr, depth, 1)
        hts = {n: heights(spec, n) for n in range(1, depth + 1)}
        s_depth = fr.S(depth)
        if total is not None and total < s_depth:
            raise AnalysisError("total-mass bound is below the truncated mass")
        ext = ExtendedMeasure(depth, {n: fr.W(n) for n in range(1, depth + 1)}, hts, lower,
                              Bracket(s_depth, total))
        win = window or max(1, depth // 4)
        if not mu.is_exact:
            cap = mpmath.mpf(Fraction(cap).numerator) / Fraction(cap).denominator
        if total is None and depth - 2 * win >= 2:
            mid = _lower_bounds(spec, fr, depth - win, 1)
            early = _lower_bounds(spec, fr, depth - 2 * win, 1)
            for n in range(1, depth - 2 * win):
                for v in fr.Wp(n):
                    h = hts[n][v]
                    a, b, c = h * early[n][v], h * mid[n][v], h * lower[n][v]
                    if c > cap or (c - b > 0 and c - b >= b - a):
                        ext.unbounded.add((n, v))
    return ext


# ratio diagnostics ------------------------------------------------------------------


@dataclass
class RatioDiagnostics:
    """Per-level ratio sequences; ``None`` entries are undefined at that level."""

    rho: list  # min_{W'} mu_hat(X_v) / max_W mu(Xbar_w)
    rho_prime: list  # min_{W'} mu_hat(X_v) / max_W mu_hat(X_w)
    sigma: list  # max_{W'} mu_hat(X_v) / min_W mu_hat(X_w)
    bound: list  # |W_n| (total - sum_W mu_hat(X_w)) / |W'_n|
    size_ratio: list
    observed_C: Fraction
    notes: list = field(default_factory=list)


def ratio_diagnostics(spec, sel, mu, N: int, ext: ExtendedMeasure | None = None,
                      total: Fraction | None = None) -> RatioDiagnostics:
    if ext is None:
        ext = extend_measure(spec, sel, mu, depth=max(2 * N, N + 1), total=total)
    if ext.depth <= N:
        raise AnalysisError(f"extension depth {ext.depth} must exceed {N}")
    fr = _Frame(spec, sel, mu, N)
    rho, rho_p, sigma, bound, sizes, notes = [], [], [], [], [], []
    with _ctx(mu):
        for n in range(1, N + 1):
            W, Wp = fr.W(n), fr.Wp(n)
            off = [ext.tower(n, v) for v in Wp]
            on = [ext.tower(n, w) for w in W]
            bar = max(mu.towers(n))
            sizes.append(Fraction(len(W), len(Wp)))
            rho.append(_bdiv(_bmin(off), Bracket(bar, bar)))
            rho_p.append(_bdiv(_bmin(off), _bmax(on)))
            s = _bdiv(_bmax(off), _bmin(on))
            if s is None:
                notes.append(f"sigma undefined at level {n}: a W-tower bracket contains 0")
            sigma.append(s)
            top = ext.total.hi
            bound.append(None if top is None else len(W) * (top - sum(b.lo for b in on)) / len(Wp))
    return RatioDiagnostics(rho, rho_p, sigma, bound, sizes, max(sizes), notes)


# verdicts ----------------------------------------------------------------------------


def stationary_verdict(spec, sel, mu, evidence: int = 40) -> Verdict:
    """Exact finiteness decision for a stationary diagram, selection and PF measure.

    With ``p_w^(n) = c lam^(1-n) x_w`` the entry masses are
    ``u_n = (c / lam) a M^(n-1) b`` where ``M = F / lam``, ``b`` are the root
    edges and ``a_v = sum_{w in W} f_{w,v} x_w`` on ``W'``.  Only vertices on
    walks from ``supp b`` to ``supp a`` matter; on that set ``S`` the series
    converges iff ``rho(M_S) < 1``, which for a nonnegative matrix holds iff
    ``I - M_S`` is invertible with a nonnegative inverse.  The total is then
    ``1 + (c / lam) a_S (I - M_S)^(-1) b_S``.
    """
    if spec.provider != "stationary" or sel.provider != "stationary":
        raise AnalysisError("stationary_verdict needs a stationary diagram and selection")
    if not isinstance(mu, StationaryMeasure):
        raise AnalysisError("stationary_verdict needs a stationary Perron-Frobenius measure")
    if not mu.is_exact:
        raise AnalysisError("float-mode measures cannot yield a proved verdict")
    _Frame(spec, sel, mu, 2)
    F = spec.matrices[0]
    W, Wp = check_selection(spec, sel, 1), complement(sel, 1, spec.size(1))
    lam, c = mu.lam, mu.c
    a = [Fraction(0)] * F.cols
    for v in Wp:
        a[v] = sum((F[w][v] * x for w, x in zip(W, mu.x)), Fraction(0))
    b = spec.root_edges
    rows = [list(r) for r in F.entries]
    core = sorted(
        reachable(rows, [j for j, e in enumerate(b) if e])
        & reachable(rows, [v for v, x in enumerate(a) if x], forward=False)
    )
    numbers: dict = {"lambda": lam, "core": [v + 1 for v in core]}
    u = []
    for n in range(1, evidence + 1):
        h = heights(spec, n)
        u.append(c / lam**n * sum(x * hv for x, hv in zip(a, h)))
    numbers["u_head"] = u[:5]
    if u[-1] and u[-2]:
        numbers["last_ratio"] = u[-1] / u[-2]
    if not core:
        return Verdict(VerdictKind.FINITE_PROVED, "no-cross-mass", evidence, Fraction(1), numbers)
    FS = [[rows[i][j] for j in core] for i in core]
    delta = exact_spectral_radius(FS)
    numbers["delta"] = Fraction(delta) if delta is not None else float_dominant(FS)
    numbers["delta_exact"] = delta is not None
    A = [[Fraction(int(i == j)) - Fraction(FS[i][j]) / lam for j in range(len(core))] for i in range(len(core))]
    inv = inverse(A)
    if inv is not None and all(x >= 0 for row in inv for x in row):
        aS = [a[i] for i in core]
        bS = [b[j] for j in core]
        series = sum(aS[i] * inv[i][j] * bS[j] for i in range(len(core)) for j in range(len(core)))
        total = 1 + c / lam * series
        numbers["tail_after_evidence"] = total - 1 - sum(u[:-1])
        return Verdict(VerdictKind.FINITE_PROVED, "stationary-eigenvalue-comparison", evidence, total, numbers)
    return Verdict(VerdictKind.INFINITE_PROVED, "stationary-eigenvalue-comparison", evidence, None, numbers)


def trend_verdict(S_last, d: list, window: int = 10, floor=Fraction(1, 2), eps=0,
                  slow=Fraction(9, 10)) -> Verdict:
    """Classify the increment sequence ``d`` over its last ``window`` terms.

    Trend kinds are not proofs.  ``S_last`` is ``S_{N+1}`` for ``N = len(d)``;
    increments with ``|d_n| <= eps`` count as zero (float rounding).  Ratios
    that keep climbing and end above ``slow`` look sub-geometric (harmonic-like)
    and give no bound.
    """
    N = len(d)
    if window < 2 or N < window:
        return Verdict(VerdictKind.INCONCLUSIVE, "depth-exhausted", N)
    tail = d[-window:]
    if all(abs(x) <= eps for x in tail):
        return Verdict(VerdictKind.FINITE_TREND, "vanishing-increments", N,
                       numbers={"tail_bound": 0 * tail[0], "total_bracket": (S_last, S_last)})
    if min(tail) > eps:
        steps = [y / x for x, y in zip(tail, tail[1:])]
        if min(tail) >= floor * max(tail) or min(steps) >= 1:
            return Verdict(VerdictKind.DIVERGENT_TREND, "constant-increment-divergence", N,
                           numbers={"min_increment": min(tail), "window": window})
        r = max(steps)
        creeping = all(a < b for a, b in zip(steps, steps[1:])) and steps[-1] >= slow
        if r < 1 and not creeping:
            bound = tail[-1] * r / (1 - r)
            return Verdict(VerdictKind.FINITE_TREND, "geometric-tail-bound", N,
                           numbers={"ratio": r, "tail_bound": bound, "window": window,
                                    "total_bracket": (S_last, S_last + bound)})
    return Verdict(VerdictKind.INCONCLUSIVE, "depth-exhausted", N)


# full report ---------------------------------------------------------------------------


@dataclass
class ExtensionReport:
    depth: int
    numeric_mode: str
    S: list
    d: list
    t3: list
    s4: list
    u5: list
    m7: list
    r7: list
    positivity: bool
    positivity_violations: list
    ratios: RatioDiagnostics
    verdict: Verdict
    extension: ExtendedMeasure
    residual: object = 0


def analyze(
    spec,
    sel,
    mu,
    N: int,
    window: int = 10,
    extension_depth: int | None = None,
    require_positive: bool = False,
) -> ExtensionReport:
    """Evaluate every term sequence to depth ``N`` and classify the extension."""
    if N < 1:
        raise AnalysisError("depth must be >= 1")
    fr = _Frame(spec, sel, mu, N + 1)
    with _ctx(mu):
        S_all = [fr.S(n) for n in range(1, N + 2)]
    u, d = criterion_terms(spec, sel, mu, N)
    t3 = tower_entry_terms(spec, sel, mu, N)
    s4 = stochastic_entry_terms(spec, sel, N)
    mm = minmax_terms(spec, sel, N, require_positive)
    if (spec.provider == "stationary" and sel.provider == "stationary"
            and isinstance(mu, StationaryMeasure) and mu.is_exact):
        verdict = stationary_verdict(spec, sel, mu, evidence=max(N, 2))
    else:
        with _ctx(mu):
            eps = 0 if mu.is_exact else mu.tolerance * max(1, abs(S_all[-1]))
            verdict = trend_verdict(S_all[-1], d, window, eps=eps)
    total = verdict.total if verdict.kind == VerdictKind.FINITE_PROVED else None
    ext = extend_measure(spec, sel, mu, extension_depth or max(2 * N, N + 1), total=total)
    ratios = ratio_diagnostics(spec, sel, mu, N, ext=ext)
    residual = 0
    if not mu.is_exact:
        with _ctx(mu):
            residual = max(abs(x - y) for x, y in zip(u, d))
    return ExtensionReport(
        N, mu.mode, S_all[:N], d, t3, s4, u, mm.q_terms, mm.height_terms,
        mm.positive, mm.violations, ratios, verdict, ext, residual,
    )
