"""Monte Carlo sampling of paths under a tail-invariant probability measure.

A path at ``w`` (level ``n``) continues along one of the ``f_{v,w}`` edges to
``v`` with probability ``f_{v,w} p_v^(n+1) / p_w^(n)``; the first edge goes
to ``w`` with probability ``root_edges[w] p_w^(1)``.  These laws are exact
rationals and are sampled through integer Walker/Vose alias tables, so the
intended distribution is reproduced exactly.

Random numbers come from :class:`random.Random` (MT19937) seeded per chunk
with ``sha256(f"{seed}:{chunk}")``; the streams are integer-only and
platform independent.
"""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .diagram import DiagramSpec
from .measure import CylinderMeasure


class SamplerError(ValueError):
    pass


class AliasTable:
    """Exact integer alias table for weights with a common denominator."""

    def __init__(self, weights: list[int]):
        k = len(weights)
        total = sum(weights)
        if k == 0 or total <= 0 or any(w < 0 for w in weights):
            raise SamplerError("alias table needs nonnegative weights with positive sum")
        self.k, self.total = k, total
        scaled = [w * k for w in weights]
        self.prob = [total] * k
        self.alias = list(range(k))
        small = [i for i, s in enumerate(scaled) if s < total]
        large = [i for i, s in enumerate(scaled) if s >= total]
        while small and large:
            s, g = small.pop(), large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = g
            scaled[g] -= total - scaled[s]
            (small if scaled[g] < total else large).append(g)
        for i in small + large:
            self.prob[i] = total

    def draw(self, rng: random.Random) -> int:
        i = rng.randrange(self.k)
        return i if rng.randrange(self.total) < self.prob[i] else self.alias[i]


def _table(probs: list[Fraction], where: str) -> AliasTable:
    if sum(probs) != 1:
        raise SamplerError(f"transition probabilities at {where} sum to {sum(probs)}, not 1")
    den = 1
    for p in probs:
        den = lcm(den, p.denominator)
    return AliasTable([int(p * den) for p in probs])


@dataclass
class SamplerConfig:
    spec: DiagramSpec
    measure: CylinderMeasure
    depth: int
    count: int
    seed: int = 0
    chunk_size: int = 10_000

    def __post_init__(self) -> None:
        if self.count < 1:
            raise SamplerError("count must be >= 1")
        if self.depth < 1:
            raise SamplerError("depth must be >= 1")
        if not self.measure.is_exact:
            raise SamplerError("sampling needs an exact-mode measure")


@dataclass
class EmpiricalStats:
    depth: int
    count: int
    seed: int
    counts: list[list[int]] = field(default_factory=list)  # counts[n-1][v]

    def frequency(self, n: int, v: int) -> Fraction:
        return Fraction(self.counts[n - 1][v], self.count)

    def to_dict(self) -> dict:
        return {"depth": self.depth, "count": self.count, "seed": self.seed, "counts": self.counts}


def _chunk_rng(seed: int, chunk: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{chunk}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


def transition_tables(spec: DiagramSpec, mu: CylinderMeasure, depth: int):
    root = _table([r * p for r, p in zip(spec.root_edges, mu.vector(1))], "the root")
    steps = []
    for n in range(1, depth):
        f = spec.incidence(n)
        p, q = mu.vector(n), mu.vector(n + 1)
        level = []
        for w in range(f.cols):
            if p[w] == 0:
                level.append(None)  # never reached under a valid measure
                continue
            probs = [Fraction(f[v][w]) * q[v] / p[w] for v in range(f.rows)]
            level.append(_table(probs, f"level {n}, vertex {w + 1}"))
        steps.append(level)
    return root, steps


def sample(config: SamplerConfig) -> EmpiricalStats:
    spec, mu, depth = config.spec, config.measure, config.depth
    root, steps = transition_tables(spec, mu, depth)
    counts = [[0] * spec.size(n) for n in range(1, depth + 1)]
    chunks = math.ceil(config.count / config.chunk_size)
    for chunk in range(chunks):
        rng = _chunk_rng(config.seed, chunk)
        todo = min(config.chunk_size, config.count - chunk * config.chunk_size)
        for _ in range(todo):
            v = root.draw(rng)
            counts[0][v] += 1
            for n in range(1, depth):
                table = steps[n - 1][v]
                if table is None:
                    raise SamplerError(f"reached zero-probability vertex {v + 1} at level {n}")
                v = table.draw(rng)
                counts[n][v] += 1
    return EmpiricalStats(depth, config.count, config.seed, counts)


@dataclass(frozen=True)
class Deviation:
    level: int
    vertex: int
    exact: Fraction
    frequency: Fraction
    stderr: float
    z: float

    @property
    def flagged(self) -> bool:
        return abs(self.z) > 4


def compare(stats: EmpiricalStats, mu: CylinderMeasure, spec: DiagramSpec) -> list[Deviation]:
    """z-scores of empirical tower frequencies against exact tower masses."""
    rows = []
    for n in range(1, stats.depth + 1):
        towers = mu.towers(n)
        for v, t in enumerate(towers):
            freq = stats.frequency(n, v)
            se = math.sqrt(float(t * (1 - t)) / stats.count)
            if se > 0:
                z = float(freq - t) / se
            else:
                z = 0.0 if freq == t else math.inf
            rows.append(Deviation(n, v, Fraction(t), freq, se, z))
    return rows
