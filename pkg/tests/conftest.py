import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bratteli.diagram import DiagramSpec, VertexSelection, restrict  # noqa: E402
from bratteli.measure import pf_eigendata, stationary_measure  # noqa: E402

EX1 = [[3, 0, 0], [1, 2, 0], [0, 1, 3]]
EX2 = [[2, 0, 0], [1, 2, 0], [0, 1, 3]]


def _setup(matrix):
    spec = DiagramSpec.stationary(matrix)
    sel = VertexSelection.stationary([1, 2])
    sub = restrict(spec, sel)
    mu = stationary_measure(sub, pf_eigendata(sub.matrices[0]))
    return spec, sel, sub, mu


@pytest.fixture
def ex1():
    return _setup(EX1)


@pytest.fixture
def ex2():
    return _setup(EX2)


@pytest.fixture
def disjoint():
    """A selection with no edges from its complement into it."""
    spec = DiagramSpec.stationary([[2, 0], [0, 3]])
    sel = VertexSelection.stationary([1])
    sub = restrict(spec, sel)
    mu = stationary_measure(sub, pf_eigendata(sub.matrices[0]))
    return spec, sel, sub, mu
