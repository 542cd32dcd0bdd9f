"""Bratteli diagrams, tail-invariant measures and their extensions from vertex subdiagrams."""

__version__ = "0.1.0"

from .diagram import (  # noqa: E402
    DiagramSpec,
    IncidenceMatrix,
    VertexSelection,
    complement,
    heights,
    incidence,
    restrict,
    stochastic,
    telescope,
    telescope_every,
    validate,
)
from .extension import (  # noqa: E402
    VerdictKind,
    analyze,
    criterion_terms,
    extend_measure,
    minmax_terms,
    partial_masses,
    ratio_diagnostics,
    stationary_verdict,
    stochastic_entry_terms,
    tower_entry_terms,
)
from .measure import (  # noqa: E402
    check_compatibility,
    explicit_measure,
    pf_eigendata,
    stationary_measure,
    tower_measure,
)

__all__ = [
    "DiagramSpec", "IncidenceMatrix", "VertexSelection", "complement", "heights", "incidence",
    "restrict", "stochastic", "telescope", "telescope_every", "validate", "VerdictKind", "analyze",
    "tower_entry_terms", "stochastic_entry_terms", "minmax_terms", "criterion_terms", "extend_measure",
    "partial_masses", "ratio_diagnostics", "stationary_verdict", "check_compatibility",
    "explicit_measure", "pf_eigendata", "stationary_measure", "tower_measure",
]
