"""Measurement chain: photon -> internal observer -> emitter -> photon.

The chain lives on four 3-dimensional factors,

    photon_in (vac, one_A, one_B)
    observer  (ready, left, right)     an internal detector that responds
    box       (ready, gen_A, gen_B)    the trigger/emitter apparatus
    photon_out (vac, one_A, one_B)

and evolves in three steps: the incoming photon flips the observer out of
``ready``; the observer triggers the box and returns toward ``ready``;
the box emits the outgoing photon and returns toward ``ready``.  Each
step is a partial isometry on the physically visited subspace, extended
to a full unitary by a deterministic Gram-Schmidt completion over the
standard basis.

Two dynamics are compared.  ``run_linear`` applies the composed unitary
and traces down to the outgoing photon; a superposed input then leaves a
superposed output whenever the observer and box reset faithfully.
``run_collapse`` inserts a projective measurement of the observer after a
configurable step, either as the full dephasing channel or as a sampled
single trajectory, turning the superposition into a proper mixture.
Imperfect resetting is a one-parameter family: on the B branch the
observer and box each retain a residual component of the state they
visited, with overlap ``reset_overlap`` against ``ready``, which lowers
the output coherence to (overlap^2)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ATOL,
    DensityMatrix,
    ImpossibleOutcomeError,
    Projector,
    UnitaryOp,
    partial_trace,
    purity as state_purity,
)

FACTOR_NAMES = ("photon_in", "observer", "box", "photon_out")
FACTOR_LABELS = (
    ("vac", "one_A", "one_B"),
    ("ready", "left", "right"),
    ("ready", "gen_A", "gen_B"),
    ("vac", "one_A", "one_B"),
)
DIMS = (3, 3, 3, 3)
FULL_DIM = 81

_VAC, _A, _B = 0, 1, 2
_READY, _LEFT, _RIGHT = 0, 1, 2
_GEN_A, _GEN_B = 1, 2


def _e(i: int) -> np.ndarray:
    v = np.zeros(3, dtype=np.complex128)
    v[i] = 1.0
    return v


def _product_ket(factors) -> np.ndarray:
    ket = np.ones(1, dtype=np.complex128)
    for f in factors:
        ket = np.kron(ket, np.asarray(f, dtype=np.complex128))
    return ket


@dataclass(frozen=True, eq=False)
class StepMap:
    """Partial isometry given as (input, output) product-state pairs.

    Each side of a pair is one state per factor.  Inputs must be
    orthonormal, and so must outputs, which makes the map an isometry on
    its defined subspace.
    """

    pairs: tuple

    def __post_init__(self):
        pairs = tuple(
            (
                tuple(np.asarray(f, dtype=np.complex128) for f in pair[0]),
                tuple(np.asarray(f, dtype=np.complex128) for f in pair[1]),
            )
            for pair in self.pairs
        )
        if not pairs:
            raise ValueError("a step map needs at least one pair")
        for instate, outstate in pairs:
            for f in (*instate, *outstate):
                f.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        for name, kets in (("input", self.input_kets()), ("output", self.output_kets())):
            gram = kets @ kets.conj().T
            defect = float(np.max(np.abs(gram - np.eye(len(pairs)))))
            if defect > ATOL:
                raise ValueError(
                    f"step-map {name} states are not orthonormal (defect {defect:.3e})"
                )

    def input_kets(self) -> np.ndarray:
        return np.array([_product_ket(instate) for instate, _ in self.pairs])

    def output_kets(self) -> np.ndarray:
        return np.array([_product_ket(outstate) for _, outstate in self.pairs])


def _complement_basis(rows: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the complement of the rows' span.

    Standard basis vectors are orthogonalized against the span in fixed
    index order (with one re-orthogonalization pass), so the result is
    reproducible across runs and platforms.
    """
    span = [r for r in rows]
    extra = []
    for i in range(dim):
        if len(span) == dim:
            break
        v = np.zeros(dim, dtype=np.complex128)
        v[i] = 1.0
        for _ in range(2):
            for b in span:
                v = v - b * np.vdot(b, v)
        norm = float(np.linalg.norm(v))
        if norm > 1e-8:
            v = v / norm
            span.append(v)
            extra.append(v)
    if len(span) != dim:
        raise ValueError("failed to complete the isometry to a basis")
    return np.array(extra).reshape(len(extra), dim)


def complete_isometry(inputs: np.ndarray, outputs: np.ndarray) -> UnitaryOp:
    """Extend a partial isometry sum_j |out_j><in_j| to a full unitary.

    The orthogonal complement of the input span is mapped onto the
    complement of the output span, both built deterministically from the
    standard basis.
    """
    k, dim = inputs.shape
    if outputs.shape != (k, dim):
        raise ValueError("inputs and outputs must pair up with equal dimension")
    matrix = outputs.T @ inputs.conj()
    in_rest = _complement_basis(inputs, dim)
    out_rest = _complement_basis(outputs, dim)
    if len(in_rest):
        matrix = matrix + out_rest.T @ in_rest.conj()
    return UnitaryOp(dim, matrix)


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Three-step chain definition with collapse point and reset fidelity.

    ``steps`` defaults to the standard chain built from ``reset_overlap``;
    pass explicit step maps to model a different apparatus.
    ``collapse_point`` is the step index (1-3) after which the observer
    measurement is inserted by :func:`run_collapse`.
    """

    reset_overlap: float = 1.0
    collapse_point: int = 1
    steps: "tuple[StepMap, StepMap, StepMap] | None" = None
    factor_labels: tuple = FACTOR_LABELS

    def __post_init__(self):
        if not 0.0 <= self.reset_overlap <= 1.0:
            raise ValueError(f"reset_overlap must lie in [0, 1], got {self.reset_overlap}")
        if self.collapse_point not in (1, 2, 3):
            raise ValueError(f"collapse_point must be 1, 2 or 3, got {self.collapse_point}")
        if self.steps is None:
            object.__setattr__(self, "steps", _standard_steps(self.reset_overlap))
        else:
            steps = tuple(self.steps)
            if len(steps) != 3 or not all(isinstance(s, StepMap) for s in steps):
                raise ValueError("steps must be three StepMap instances")
            object.__setattr__(self, "steps", steps)


def _standard_steps(overlap: float) -> tuple:
    """The photon -> observer -> box -> photon step maps at a given reset fidelity.

    The A branch resets exactly; on the B branch the observer and box
    each keep a sqrt(1 - overlap^2) residual in the state they visited.
    The residual lives in the factor that already distinguished the
    branches, so the step outputs stay orthonormal for every overlap.
    """
    eps = float(overlap)
    residual = math.sqrt(max(0.0, 1.0 - eps * eps))
    observer_b = eps * _e(_READY) + residual * _e(_RIGHT)
    box_b = eps * _e(_READY) + residual * _e(_GEN_B)

    idle = (_e(_VAC), _e(_READY), _e(_READY), _e(_VAC))
    absorb = StepMap(
        (
            (idle, idle),
            ((_e(_A), _e(_READY), _e(_READY), _e(_VAC)), (_e(_VAC), _e(_LEFT), _e(_READY), _e(_VAC))),
            ((_e(_B), _e(_READY), _e(_READY), _e(_VAC)), (_e(_VAC), _e(_RIGHT), _e(_READY), _e(_VAC))),
        )
    )
    trigger = StepMap(
        (
            (idle, idle),
            ((_e(_VAC), _e(_LEFT), _e(_READY), _e(_VAC)), (_e(_VAC), _e(_READY), _e(_GEN_A), _e(_VAC))),
            ((_e(_VAC), _e(_RIGHT), _e(_READY), _e(_VAC)), (_e(_VAC), observer_b, _e(_GEN_B), _e(_VAC))),
        )
    )
    emit = StepMap(
        (
            (idle, idle),
            ((_e(_VAC), _e(_READY), _e(_GEN_A), _e(_VAC)), (_e(_VAC), _e(_READY), _e(_READY), _e(_A))),
            ((_e(_VAC), observer_b, _e(_GEN_B), _e(_VAC)), (_e(_VAC), observer_b, box_b, _e(_B))),
        )
    )
    return (absorb, trigger, emit)


def standard_chain(reset_overlap: float = 1.0, collapse_point: int = 1) -> ChainSpec:
    """The default chain; see :class:`ChainSpec`."""
    return ChainSpec(reset_overlap=reset_overlap, collapse_point=collapse_point)


def step_unitaries(spec: ChainSpec) -> tuple[UnitaryOp, UnitaryOp, UnitaryOp]:
    """Each step's partial isometry completed to an 81 x 81 unitary.

    Memoized on the (immutable) spec instance, since repeated runs of the
    same chain dominate sweeps and ensembles.
    """
    cached = getattr(spec, "_step_unitaries", None)
    if cached is None:
        cached = tuple(
            complete_isometry(s.input_kets(), s.output_kets()) for s in spec.steps
        )
        object.__setattr__(spec, "_step_unitaries", cached)
    return cached


def build_chain_unitary(spec: ChainSpec) -> UnitaryOp:
    """The composed chain unitary U3 U2 U1 (memoized per spec instance)."""
    cached = getattr(spec, "_chain_unitary", None)
    if cached is None:
        u1, u2, u3 = step_unitaries(spec)
        cached = UnitaryOp(FULL_DIM, u3.matrix @ u2.matrix @ u1.matrix)
        object.__setattr__(spec, "_chain_unitary", cached)
    return cached


def premeasurement_unitary(pointer_dim: int, system_dim: int = 2) -> UnitaryOp:
    """Pointer correlation |neutral>|k>  ->  |points to k>|k>, completed to a unitary.

    The pointer needs a neutral state plus one pointing state per system
    outcome, so ``pointer_dim`` must be at least ``system_dim + 1``.
    Applied to a superposition the result is entangled, not an eigenstate
    of any single-outcome projector: correlation alone is not a collapse.
    """
    if system_dim < 2:
        raise ValueError(f"system must have at least two outcomes, got {system_dim}")
    if pointer_dim < system_dim + 1:
        raise ValueError(
            f"pointer_dim must be at least {system_dim + 1} "
            f"(neutral plus one state per outcome), got {pointer_dim}"
        )
    dim = pointer_dim * system_dim

    def pair(pointer: int, system: int) -> np.ndarray:
        v = np.zeros(dim, dtype=np.complex128)
        v[pointer * system_dim + system] = 1.0
        return v

    inputs = np.array([pair(0, k) for k in range(system_dim)])
    outputs = np.array([pair(k + 1, k) for k in range(system_dim)])
    return complete_isometry(inputs, outputs)


# --- inputs and outcomes -----------------------------------------------------


def pure_photon_input(amp_a: complex, amp_b: complex) -> DensityMatrix:
    """Normalized one-photon input amp_a |one_A> + amp_b |one_B>."""
    vec = np.array([0.0, amp_a, amp_b], dtype=np.complex128)
    norm = np.linalg.norm(vec)
    if norm <= 0:
        raise ValueError("input amplitudes cannot both vanish")
    vec = vec / norm
    return DensityMatrix((3,), np.outer(vec, vec.conj()), (FACTOR_LABELS[0],))


def mixed_photon_input(weight_a: float, weight_b: float) -> DensityMatrix:
    """Classical mixture of the two one-photon inputs."""
    if weight_a < 0 or weight_b < 0 or weight_a + weight_b <= 0:
        raise ValueError("mixture weights must be nonnegative and not all zero")
    total = weight_a + weight_b
    m = np.diag([0.0, weight_a / total, weight_b / total]).astype(np.complex128)
    return DensityMatrix((3,), m, (FACTOR_LABELS[0],))


def _check_branch_support(rho_in: DensityMatrix) -> None:
    if rho_in.dims != (3,):
        raise ValueError(f"input photon state must have dims (3,), got {rho_in.dims}")
    vac_row = float(np.max(np.abs(rho_in.matrix[_VAC, :])))
    vac_col = float(np.max(np.abs(rho_in.matrix[:, _VAC])))
    if max(vac_row, vac_col) > ATOL:
        raise ValueError("input must be supported on the one-photon subspace")


def _embed_input(rho_in: DensityMatrix) -> DensityMatrix:
    m = rho_in.matrix
    for idx in (_READY, _READY, _VAC):
        anc = np.zeros((3, 3), dtype=np.complex128)
        anc[idx, idx] = 1.0
        m = np.kron(m, anc)
    return DensityMatrix(DIMS, m, FACTOR_LABELS)


@dataclass(frozen=True, eq=False)
class ChainOutcome:
    """Reduced output-photon state with its headline scalars.

    ``coherence`` is |<one_A| rho |one_B>|, at most 1/2 for a unit-trace
    two-branch state; ``trajectory_record`` lists the sampled observer
    outcomes when collapse was sampled rather than averaged.
    """

    rho_out: DensityMatrix
    purity: float
    coherence: float
    full_state: "DensityMatrix | None" = None
    trajectory_record: "tuple[str, ...] | None" = None


def _outcome_from_full(full: DensityMatrix, record=None) -> ChainOutcome:
    rho_out = partial_trace(full, keep={3})
    return ChainOutcome(
        rho_out=rho_out,
        purity=state_purity(rho_out),
        coherence=float(np.abs(rho_out.matrix[_A, _B])),
        full_state=full,
        trajectory_record=record,
    )


def run_linear(spec: ChainSpec, rho_in: DensityMatrix) -> ChainOutcome:
    """Evolve the embedded input through the chain unitarily and reduce."""
    _check_branch_support(rho_in)
    state = _embed_input(rho_in)
    u = build_chain_unitary(spec)
    evolved = DensityMatrix(
        DIMS, u.matrix @ state.matrix @ u.matrix.conj().T, FACTOR_LABELS
    )
    return _outcome_from_full(evolved)


def _observer_projectors() -> tuple[Projector, ...]:
    eye = np.eye(3, dtype=np.complex128)
    projs = []
    for i in range(3):
        p = np.zeros((3, 3), dtype=np.complex128)
        p[i, i] = 1.0
        projs.append(Projector(FULL_DIM, np.kron(np.kron(eye, p), np.kron(eye, eye))))
    return tuple(projs)


def _propagate_to_collapse(spec: ChainSpec, rho_in: DensityMatrix) -> tuple[np.ndarray, list]:
    _check_branch_support(rho_in)
    unitaries = step_unitaries(spec)
    m = _embed_input(rho_in).matrix
    for u in unitaries[: spec.collapse_point]:
        m = u.matrix @ m @ u.matrix.conj().T
    return m, [u.matrix for u in unitaries[spec.collapse_point :]]


def _finish(m: np.ndarray, remaining: list, record=None) -> ChainOutcome:
    for u in remaining:
        m = u @ m @ u.conj().T
    return _outcome_from_full(DensityMatrix(DIMS, m, FACTOR_LABELS), record)


def run_collapse(
    spec: ChainSpec,
    rho_in: DensityMatrix,
    mode: str = "channel",
    seed: "int | None" = None,
    force_outcome: "str | None" = None,
) -> ChainOutcome:
    """Insert a projective observer measurement at the collapse point.

    ``channel`` applies the full dephasing channel rho -> sum_i P_i rho P_i
    (a deterministic map); ``trajectory`` draws one Born-rule outcome and
    returns that collapsed branch together with its record.  A definite
    branch input is an eigenstate of the measurement, so both modes reduce
    to :func:`run_linear` on inputs without coherence.
    """
    if mode not in ("channel", "trajectory"):
        raise ValueError(f"mode must be 'channel' or 'trajectory', got {mode!r}")
    if mode == "channel" and force_outcome is not None:
        raise ValueError("forcing an outcome only makes sense in trajectory mode")
    m, remaining = _propagate_to_collapse(spec, rho_in)
    projectors = _observer_projectors()
    if mode == "channel":
        dephased = sum(p.matrix @ m @ p.matrix for p in projectors)
        return _finish(dephased, remaining)

    labels = FACTOR_LABELS[1]
    probs = np.array([float(np.real(np.trace(p.matrix @ m))) for p in projectors])
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    if force_outcome is not None:
        branch = labels.index(force_outcome)
    else:
        if seed is None:
            raise ValueError("trajectory mode needs a seed (or a forced outcome)")
        rng = np.random.default_rng(seed)
        branch = int(rng.choice(3, p=probs))
    if probs[branch] <= 1e-12:
        raise ImpossibleOutcomeError(
            f"observer outcome {labels[branch]!r} has probability {probs[branch]:.3e}"
        )
    p = projectors[branch].matrix
    collapsed = p @ m @ p / probs[branch]
    return _finish(collapsed, remaining, record=(labels[branch],))


def trajectory_ensemble(
    spec: ChainSpec, rho_in: DensityMatrix, n_runs: int, seed: int
) -> tuple[ChainOutcome, tuple[str, ...]]:
    """Average ``n_runs`` sampled trajectories and return the record.

    Each distinct observer outcome fixes the remainder of the evolution,
    so the per-outcome branch is computed once and the ensemble average
    weights the branches by their sampled frequencies; the statistics are
    identical to evolving every trajectory separately.
    """
    if n_runs < 1:
        raise ValueError("need at least one trajectory")
    m, remaining = _propagate_to_collapse(spec, rho_in)
    projectors = _observer_projectors()
    labels = FACTOR_LABELS[1]
    probs = np.array([float(np.real(np.trace(p.matrix @ m))) for p in projectors])
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()

    rng = np.random.default_rng(seed)
    draws = rng.choice(3, size=n_runs, p=probs)
    counts = np.bincount(draws, minlength=3)

    mean_out = np.zeros((3, 3), dtype=np.complex128)
    for branch, count in enumerate(counts):
        if count == 0:
            continue
        p = projectors[branch].matrix
        branch_outcome = _finish(p @ m @ p / probs[branch], remaining)
        mean_out += (count / n_runs) * branch_outcome.rho_out.matrix
    rho_mean = DensityMatrix((3,), mean_out, (FACTOR_LABELS[3],))
    record = tuple(labels[i] for i in draws)
    outcome = ChainOutcome(
        rho_out=rho_mean,
        purity=state_purity(rho_mean),
        coherence=float(np.abs(rho_mean.matrix[_A, _B])),
        full_state=None,
        trajectory_record=record,
    )
    return outcome, record


def reset_sweep(spec: ChainSpec, overlaps) -> list[tuple[float, float, float]]:
    """(overlap, coherence, purity) for the superposed input across reset fidelities.

    Sweeps the one-parameter reset family of the standard chain, keeping
    the collapse point of ``spec``; a perfect reset recovers coherence 1/2
    and purity 1, a total reset failure is indistinguishable from the
    collapse output.
    """
    rows = []
    for eps in overlaps:
        if not 0.0 <= eps <= 1.0:
            raise ValueError(f"reset overlap must lie in [0, 1], got {eps}")
        swept = ChainSpec(reset_overlap=float(eps), collapse_point=spec.collapse_point)
        outcome = run_linear(swept, pure_photon_input(1.0, 1.0))
        rows.append((float(eps), outcome.coherence, outcome.purity))
    return rows


def interference_readout(outcome: ChainOutcome, n_phases: int = 64) -> float:
    """Fringe visibility of the output photon under balanced two-mode mixing.

    Scans the relative phase of a 50/50 mixing unitary on the two branch
    modes and returns the largest port-population imbalance, which equals
    twice the branch coherence up to the phase-grid resolution.  Requires
    a vacuum-free output state.
    """
    rho = outcome.rho_out.matrix
    if float(np.real(rho[_VAC, _VAC])) > 1e-10:
        raise ValueError("output state has vacuum population; readout undefined")
    best = 0.0
    for phase in np.linspace(0.0, 2.0 * math.pi, n_phases, endpoint=False):
        mix = np.eye(3, dtype=np.complex128)
        phase_factor = np.exp(1j * phase)
        mix[1:, 1:] = np.array(
            [[1.0, phase_factor], [-np.conj(phase_factor), 1.0]]
        ) / math.sqrt(2.0)
        mixed = mix @ rho @ mix.conj().T
        imbalance = abs(float(np.real(mixed[_A, _A])) - float(np.real(mixed[_B, _B])))
        best = max(best, imbalance)
    return best


# --- JSON form ----------------------------------------------------------------


def _vector_entries(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in v]


def chain_spec_to_json(spec: ChainSpec) -> dict:
    """JSON document: factor labels, step-map pairs, collapse point, overlap."""
    return {
        "factor_labels": [list(f) for f in spec.factor_labels],
        "collapse_point": spec.collapse_point,
        "reset_overlap": spec.reset_overlap,
        "steps": [
            [
                {
                    "input": [_vector_entries(f) for f in instate],
                    "output": [_vector_entries(f) for f in outstate],
                }
                for instate, outstate in step.pairs
            ]
            for step in spec.steps
        ],
    }


def chain_spec_from_json(doc: dict) -> ChainSpec:
    def vec(entries):
        return np.array([complex(re, im) for re, im in entries], dtype=np.complex128)

    steps = tuple(
        StepMap(
            tuple(
                (
                    tuple(vec(f) for f in pair["input"]),
                    tuple(vec(f) for f in pair["output"]),
                )
                for pair in step
            )
        )
        for step in doc["steps"]
    )
    return ChainSpec(
        reset_overlap=float(doc["reset_overlap"]),
        collapse_point=int(doc["collapse_point"]),
        steps=steps,
        factor_labels=tuple(tuple(f) for f in doc["factor_labels"]),
    )
