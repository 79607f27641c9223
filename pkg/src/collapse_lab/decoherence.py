"""Branch-dependent bath coupling and its erasure of the collapse signature.

The chain output is coupled to a bath of independent qubits, each rotated
by +theta/2 or -theta/2 in its amplitude plane depending on which branch
the photon took.  Tracing the bath multiplies the branch coherence by the
product of single-qubit overlaps, cos(theta)^n, so the linear-dynamics
output converges exponentially fast to the collapse output as the bath
grows: with the qubit counts of any warm, uncontrolled environment the
two dynamics cannot be told apart in any feasible experiment.

``analytic`` mode applies the closed-form overlap directly and works for
arbitrarily large baths; ``full_tensor`` builds the joint chain-bath
state explicitly (n <= 12) and exists as a brute-force cross-check of
the analytic path.

Note the sign: for theta > pi/2 the single-qubit overlap cos(theta) is
negative and the surviving coherence alternates in sign with n, so
distances depend on |cos(theta)|^n.  The two branch bath states are
orthogonal (one qubit fully distinguishes the branches) at theta = pi/2,
not at theta = pi, where they coincide up to a global sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import (
    ChainOutcome,
    ChainSpec,
    build_chain_unitary,
    pure_photon_input,
    run_collapse,
    run_linear,
)
from .chain import FACTOR_LABELS, _A, _B, _READY, _VAC
from .core import DensityMatrix, purity as state_purity

FULL_TENSOR_MAX_QUBITS = 12


@dataclass(frozen=True)
class BathModel:
    """Bath of n qubits with branch-conditional rotation angle theta."""

    n: int
    theta: float
    mode: str = "analytic"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"bath needs at least one qubit, got n={self.n}")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if self.mode not in ("analytic", "full_tensor"):
            raise ValueError(f"mode must be 'analytic' or 'full_tensor', got {self.mode!r}")
        if self.mode == "full_tensor" and self.n > FULL_TENSOR_MAX_QUBITS:
            raise ValueError(
                f"full_tensor mode is limited to n <= {FULL_TENSOR_MAX_QUBITS} qubits"
            )


def branch_overlap(bath: BathModel) -> float:
    """Overlap cos(theta)^n between the two branch bath states (signed)."""
    return float(math.cos(bath.theta) ** bath.n)


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rotate_bath_qubits(block: np.ndarray, rot: np.ndarray, n: int) -> np.ndarray:
    """Apply the same 2x2 rotation to every bath qubit of (rows, 2^n) amplitudes."""
    rows = block.shape[0]
    out = block
    for q in range(n):
        pre = 2**q
        post = 2 ** (n - q - 1)
        out = out.reshape(rows * pre, 2, post)
        out = np.einsum("ab,rbp->rap", rot, out)
    return out.reshape(rows, 2**n)


def _decohered_pure_branch(
    chain_ket: np.ndarray, bath: BathModel
) -> np.ndarray:
    """Reduced output-photon matrix for one chain ket coupled to the bath.

    The joint state is a ket on chain (x) bath, so the reduction is a Gram
    matrix over the output-photon axis; nothing of size (81 * 2^n)^2 is
    ever built.
    """
    n = bath.n
    joint = np.kron(chain_ket, _bath_ground(n))  # (81 * 2^n,)
    joint = joint.reshape(3, 3, 3, 3, 2**n)
    for branch, sign in ((_A, +1.0), (_B, -1.0)):
        rot = _rotation(sign * bath.theta / 2.0)
        block = joint[:, :, :, branch, :].reshape(27, 2**n)
        joint[:, :, :, branch, :] = _rotate_bath_qubits(block, rot, n).reshape(
            3, 3, 3, 2**n
        )
    by_output = joint.transpose(3, 0, 1, 2, 4).reshape(3, -1)
    return by_output @ by_output.conj().T


def _bath_ground(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=np.complex128)
    v[0] = 1.0
    return v


def decohered_output(
    spec: ChainSpec, bath: BathModel, rho_in: DensityMatrix
) -> ChainOutcome:
    """Linear chain dynamics followed by branch-conditional bath coupling.

    The bath never touches the output populations; it only multiplies the
    branch coherence by :func:`branch_overlap`.
    """
    base = run_linear(spec, rho_in)
    if bath.mode == "analytic":
        overlap = branch_overlap(bath)
        m = base.rho_out.matrix.copy()
        m[_A, _B] *= overlap
        m[_B, _A] *= overlap
        rho_out = DensityMatrix((3,), m, (FACTOR_LABELS[3],))
    else:
        u = build_chain_unitary(spec)
        weights, vectors = np.linalg.eigh(rho_in.matrix)
        reduced = np.zeros((3, 3), dtype=np.complex128)
        for weight, vec in zip(weights, vectors.T):
            if weight <= 1e-14:
                continue
            embedded = vec
            for idx in (_READY, _READY, _VAC):
                anc = np.zeros(3, dtype=np.complex128)
                anc[idx] = 1.0
                embedded = np.kron(embedded, anc)
            chain_ket = u.matrix @ embedded
            reduced += weight * _decohered_pure_branch(chain_ket, bath)
        rho_out = DensityMatrix((3,), reduced, (FACTOR_LABELS[3],))
    return ChainOutcome(
        rho_out=rho_out,
        purity=state_purity(rho_out),
        coherence=float(np.abs(rho_out.matrix[_A, _B])),
        full_state=None,
    )


@dataclass(frozen=True)
class FappReport:
    """Smallest bath that hides the collapse below a target distance.

    ``sweep`` rows are (n, coherence, trace_distance_to_collapse); the
    coherence keeps the sign of cos(theta)^n while the distance uses its
    magnitude.  For very large answers the sweep is geometrically
    subsampled (first, last and ~100 intermediate sizes).
    """

    theta: float
    target: float
    minimal_n: int
    base_coherence: float
    sweep: tuple

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "target": self.target,
            "minimal_n": self.minimal_n,
            "base_coherence": self.base_coherence,
            "sweep_points": len(self.sweep),
        }


def _sweep_sizes(n_max: int, dense_limit: int = 1000) -> list[int]:
    if n_max <= dense_limit:
        return list(range(1, n_max + 1))
    log_sizes = np.unique(
        np.round(np.geomspace(1, n_max, 100)).astype(int)
    )
    return sorted(set(log_sizes) | {1, n_max})


def fapp_report(spec: ChainSpec, theta: float, target_distance: float) -> FappReport:
    """Minimal bath size n with (base coherence) * |cos(theta)|^n below target.

    The base coherence is what the chain's linear dynamics leaves in the
    output for the balanced superposition input (1/2 at perfect reset),
    which is exactly the linear-vs-collapse trace distance before any
    bath coupling.
    """
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    if not 0.0 < target_distance <= 0.5:
        raise ValueError(
            f"target distance must lie in (0, 0.5], got {target_distance}"
        )
    base = run_linear(spec, pure_photon_input(1.0, 1.0)).coherence
    overlap_magnitude = abs(math.cos(theta))
    if overlap_magnitude >= 1.0:
        raise ValueError(
            "target unreachable: the branch bath states coincide (up to sign) "
            f"at theta={theta}, so no bath size reduces the distance"
        )

    if overlap_magnitude == 0.0:
        minimal_n = 1
    else:
        guess = max(
            1,
            math.ceil(
                math.log(target_distance / base) / math.log(overlap_magnitude)
            ),
        )
        minimal_n = guess
        # The logarithm only seeds the search; the answer is pinned by
        # direct evaluation of the distance itself.
        while base * overlap_magnitude**minimal_n >= target_distance:
            minimal_n += 1
        while (
            minimal_n > 1
            and base * overlap_magnitude ** (minimal_n - 1) < target_distance
        ):
            minimal_n -= 1

    signed = math.cos(theta)
    sweep = tuple(
        (n, base * signed**n, base * overlap_magnitude**n)
        for n in _sweep_sizes(minimal_n)
    )
    return FappReport(
        theta=float(theta),
        target=float(target_distance),
        minimal_n=int(minimal_n),
        base_coherence=float(base),
        sweep=sweep,
    )


def distance_to_collapse(spec: ChainSpec, bath: BathModel) -> float:
    """Trace distance between the bath-coupled linear output and the collapse output."""
    from .core import trace_distance

    rho_in = pure_photon_input(1.0, 1.0)
    linear = decohered_output(spec, bath, rho_in)
    collapsed = run_collapse(spec, rho_in, mode="channel")
    return trace_distance(linear.rho_out, collapsed.rho_out)
