"""Measurement-collapse simulation lab.

Three simulations built on a small dense-matrix quantum core:

* ``eraser`` -- which-path vs. erased-path photon statistics with
  coincidence counting, fringe metrics and a no-signaling check;
* ``chain`` -- a photon -> observer -> emitter measurement chain compared
  under linear (unitary) and collapse dynamics, with reset-fidelity sweeps;
* ``decoherence`` -- branch-dependent bath coupling that makes the two
  dynamics indistinguishable as the bath grows.

The ``collapse-lab`` command-line tool runs each simulation and the
acceptance suite; see the README for file formats.
"""

from .core import (
    ATOL,
    DensityMatrix,
    ImpossibleOutcomeError,
    Ket,
    Observable,
    Projector,
    UnitaryOp,
    basis_ket,
    basis_projector,
    born_probabilities,
    coherent_state,
    collapse,
    evolve,
    expectation,
    identity_op,
    number_operator,
    observable_from_projector,
    partial_trace,
    purity,
    state_from_json,
    state_to_json,
    tensor,
    trace_distance,
    unitary_from_hamiltonian,
)

__version__ = "0.1.0"

__all__ = [
    "ATOL",
    "DensityMatrix",
    "ImpossibleOutcomeError",
    "Ket",
    "Observable",
    "Projector",
    "UnitaryOp",
    "basis_ket",
    "basis_projector",
    "born_probabilities",
    "coherent_state",
    "collapse",
    "evolve",
    "expectation",
    "identity_op",
    "number_operator",
    "observable_from_projector",
    "partial_trace",
    "purity",
    "state_from_json",
    "state_to_json",
    "tensor",
    "trace_distance",
    "unitary_from_hamiltonian",
    "__version__",
]
