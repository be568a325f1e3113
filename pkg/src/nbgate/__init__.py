"""Narrowband composite two-qubit XX / CPHASE gates: design equations,
solver, circuit emission and fidelity profiles."""

from .analysis import (
    FidelityProfile,
    crosstalk_metric,
    fidelity_to_identity,
    fidelity_to_target,
    fwhm,
    profile,
)
from .design import (
    DesignSpec,
    SolutionRecord,
    SolverOptions,
    canonicalize,
    nb_residuals,
    reference_table,
    solve,
)
from .sequence import (
    CompositeSequence,
    GateList,
    composite_jet,
    composite_propagator,
    cphase_from_xx,
    emit_gate_list,
)

__all__ = [
    "CompositeSequence", "DesignSpec", "FidelityProfile", "GateList", "SolutionRecord",
    "SolverOptions", "canonicalize", "composite_jet", "composite_propagator", "cphase_from_xx",
    "crosstalk_metric", "emit_gate_list", "fidelity_to_identity", "fidelity_to_target", "fwhm",
    "nb_residuals", "profile", "reference_table", "solve",
]
