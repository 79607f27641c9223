"""Finite-dimensional Hilbert-space algebra: states, operators, measurement.

States and operators are immutable wrappers around dense complex numpy
arrays over a labeled tensor factorization.  Constructors validate the
defining invariants of each type (Hermiticity, unit trace, positivity,
unitarity, idempotence) and raise ``ValueError`` rather than silently
repairing bad data: a symmetrized or renormalized matrix would mask the
construction bug that produced it.  All operations are pure functions of
their inputs, so every value is safe to share across threads.

Units are natural (hbar = 1); Hamiltonians enter only as the product
H * dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Tolerance for structural invariants (Hermiticity, unitarity, trace).
ATOL = 1e-10
# Below this probability a measurement branch counts as impossible.
PROB_FLOOR = 1e-12

Labels = tuple[tuple[str, ...], ...] | None


class ImpossibleOutcomeError(ValueError):
    """Collapse was requested onto a branch of (numerically) zero probability."""


def _as_complex_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d amplitude vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _as_complex_matrix(values, dim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"factor dimensions must all be >= 1, got {dims}")
    return dims


def _check_labels(labels, dims) -> Labels:
    if labels is None:
        return None
    labels = tuple(tuple(str(name) for name in factor) for factor in labels)
    if len(labels) != len(dims) or any(
        len(factor) != d for factor, d in zip(labels, dims)
    ):
        raise ValueError("labels must name every basis state of every factor")
    return labels


def _hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


@dataclass(frozen=True, eq=False)
class Ket:
    """Complex amplitude vector over an ordered tensor factorization.

    ``dims`` lists the factor dimensions; ``amplitudes`` has length
    ``prod(dims)`` in row-major (left factor slowest) basis order.
    Factor order is positional and immutable; ``labels`` are metadata
    only.  Unit norm is not required at construction (truncated states
    such as finite coherent-state expansions carry norm < 1).
    """

    dims: tuple[int, ...]
    amplitudes: np.ndarray
    labels: Labels = None

    def __post_init__(self):
        object.__setattr__(self, "dims", _check_dims(self.dims))
        amps = _as_complex_vector(self.amplitudes)
        if amps.shape[0] != self.dim:
            raise ValueError(
                f"amplitude vector has length {amps.shape[0]}, "
                f"dims {self.dims} require {self.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", _check_labels(self.labels, self.dims))

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "Ket":
        n = self.norm
        if n <= PROB_FLOOR:
            raise ValueError("cannot normalize a (numerically) zero vector")
        return Ket(self.dims, self.amplitudes / n, self.labels)

    def to_density_matrix(self) -> "DensityMatrix":
        """Rank-1 density matrix |psi><psi| of a normalized ket."""
        return DensityMatrix(
            self.dims, np.outer(self.amplitudes, self.amplitudes.conj()), self.labels
        )


def basis_ket(dims, index, labels=None) -> Ket:
    """Standard basis ket |i0, i1, ...> with one index per factor."""
    dims = _check_dims(dims)
    index = (index,) if isinstance(index, int) else tuple(index)
    if len(index) != len(dims) or any(
        not 0 <= i < d for i, d in zip(index, dims)
    ):
        raise ValueError(f"basis index {index} out of range for dims {dims}")
    amps = np.zeros(math.prod(dims), dtype=np.complex128)
    amps[np.ravel_multi_index(index, dims)] = 1.0
    return Ket(dims, amps, labels)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix over labeled factors."""

    dims: tuple[int, ...]
    matrix: np.ndarray
    labels: Labels = None

    def __post_init__(self):
        object.__setattr__(self, "dims", _check_dims(self.dims))
        m = _as_complex_matrix(self.matrix, self.dim)
        defect = _hermiticity_defect(m)
        if defect > ATOL:
            raise ValueError(f"density matrix is not Hermitian (defect {defect:.3e})")
        tr = m.trace()
        if abs(tr - 1.0) > ATOL:
            raise ValueError(f"density matrix trace is {tr}, expected 1")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", _check_labels(self.labels, self.dims))

    @property
    def dim(self) -> int:
        return math.prod(self.dims)


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Unitary matrix; U+ U = 1 is enforced entrywise at construction."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        m = _as_complex_matrix(self.matrix, self.dim)
        defect = float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))
        if defect > ATOL:
            raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
        object.__setattr__(self, "matrix", m)


def identity_op(dim: int) -> UnitaryOp:
    return UnitaryOp(dim, np.eye(dim, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent matrix (P^2 = P)."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        m = _as_complex_matrix(self.matrix, self.dim)
        defect = _hermiticity_defect(m)
        if defect > ATOL:
            raise ValueError(f"projector is not Hermitian (defect {defect:.3e})")
        idem = float(np.max(np.abs(m @ m - m)))
        if idem > ATOL:
            raise ValueError(f"projector is not idempotent (defect {idem:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def rank(self) -> int:
        return int(round(float(np.real(self.matrix.trace()))))


def basis_projector(dim: int, indices) -> Projector:
    """Projector onto the span of the given standard basis indices."""
    indices = (indices,) if isinstance(indices, int) else tuple(indices)
    m = np.zeros((dim, dim), dtype=np.complex128)
    for i in indices:
        m[i, i] = 1.0
    return Projector(dim, m)


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator, optionally with its spectral decomposition attached.

    When ``eigenvalues``/``projectors`` are supplied they must form a complete
    family (sum of projectors = identity).
    """

    dim: int
    matrix: np.ndarray
    eigenvalues: "tuple[float, ...] | None" = None
    projectors: "tuple[Projector, ...] | None" = None

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        m = _as_complex_matrix(self.matrix, self.dim)
        defect = _hermiticity_defect(m)
        if defect > ATOL:
            raise ValueError(f"observable is not Hermitian (defect {defect:.3e})")
        object.__setattr__(self, "matrix", m)
        if (self.eigenvalues is None) != (self.projectors is None):
            raise ValueError("eigenvalues and projectors must be given together")
        if self.projectors is not None:
            object.__setattr__(
                self, "eigenvalues", tuple(float(a) for a in self.eigenvalues)
            )
            object.__setattr__(self, "projectors", tuple(self.projectors))
            if len(self.eigenvalues) != len(self.projectors):
                raise ValueError("one eigenvalue per projector required")
            total = sum(p.matrix for p in self.projectors)
            if float(np.max(np.abs(total - np.eye(self.dim)))) > ATOL:
                raise ValueError("spectral projectors do not sum to the identity")


_OPERATOR_TYPES = (UnitaryOp, Projector, Observable)


def tensor(a, b):
    """Kronecker product of two values of the same kind.

    The left operand supplies the leading factors of the result.  Mixed
    kinds (e.g. a ket with a density matrix) are rejected.
    """
    if type(a) is not type(b):
        raise ValueError(
            f"tensor requires operands of the same kind, "
            f"got {type(a).__name__} and {type(b).__name__}"
        )
    if isinstance(a, Ket):
        labels = a.labels + b.labels if a.labels and b.labels else None
        return Ket(a.dims + b.dims, np.kron(a.amplitudes, b.amplitudes), labels)
    if isinstance(a, DensityMatrix):
        labels = a.labels + b.labels if a.labels and b.labels else None
        return DensityMatrix(a.dims + b.dims, np.kron(a.matrix, b.matrix), labels)
    if isinstance(a, _OPERATOR_TYPES):
        # Spectral metadata does not survive a product; rebuild if needed.
        return type(a)(a.dim * b.dim, np.kron(a.matrix, b.matrix))
    raise ValueError(f"tensor does not support {type(a).__name__}")


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Trace out all factors except those in ``keep`` (original order kept)."""
    keep = sorted({int(k) for k in keep})
    n = len(rho.dims)
    if not keep:
        raise ValueError("keep set must not be empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    traced = [i for i in range(n) if i not in keep]
    tensor_form = rho.matrix.reshape(rho.dims + rho.dims)
    # Trace the highest factor index first so lower axis numbers stay valid.
    for i in sorted(traced, reverse=True):
        half = tensor_form.ndim // 2
        tensor_form = np.trace(tensor_form, axis1=i, axis2=i + half)
    kept_dims = tuple(rho.dims[i] for i in keep)
    d = math.prod(kept_dims)
    labels = tuple(rho.labels[i] for i in keep) if rho.labels else None
    return DensityMatrix(kept_dims, tensor_form.reshape(d, d), labels)


def evolve(state, u: UnitaryOp):
    """Unitary evolution: U|psi> for kets, U rho U+ for density matrices."""
    if isinstance(state, Ket):
        if state.dim != u.dim:
            raise ValueError(f"state dim {state.dim} != operator dim {u.dim}")
        return Ket(state.dims, u.matrix @ state.amplitudes, state.labels)
    if isinstance(state, DensityMatrix):
        if state.dim != u.dim:
            raise ValueError(f"state dim {state.dim} != operator dim {u.dim}")
        return DensityMatrix(
            state.dims, u.matrix @ state.matrix @ u.matrix.conj().T, state.labels
        )
    raise ValueError(f"evolve does not support {type(state).__name__}")


def unitary_from_hamiltonian(h: Observable, dt: float) -> UnitaryOp:
    """exp(-i H dt) in natural units, built from the eigendecomposition.

    Diagonalizing keeps the result unitary to machine precision for any dt,
    which a truncated series would not.
    """
    w, v = np.linalg.eigh(h.matrix)
    u = (v * np.exp(-1j * w * float(dt))) @ v.conj().T
    return UnitaryOp(h.dim, u)


def _check_projector_family(projs, dim: int) -> None:
    if not projs:
        raise ValueError("projector family must not be empty")
    total = np.zeros((dim, dim), dtype=np.complex128)
    for p in projs:
        if p.dim != dim:
            raise ValueError(f"projector dim {p.dim} != state dim {dim}")
        total += p.matrix
    if float(np.max(np.abs(total - np.eye(dim)))) > ATOL:
        raise ValueError("projector family is incomplete (sum != identity)")
    for i in range(len(projs)):
        for j in range(i + 1, len(projs)):
            cross = float(np.max(np.abs(projs[i].matrix @ projs[j].matrix)))
            if cross > ATOL:
                raise ValueError(
                    f"projectors {i} and {j} are not orthogonal (defect {cross:.3e})"
                )


def born_probabilities(state, projs) -> np.ndarray:
    """Outcome probabilities of a complete orthogonal projector family.

    For a ket, p_i = |P_i psi|^2 (the ket must be normalized); for a
    density matrix, p_i = Tr(P_i rho).
    """
    projs = tuple(projs)
    if isinstance(state, Ket):
        _check_projector_family(projs, state.dim)
        if abs(state.norm - 1.0) > ATOL:
            raise ValueError("Born probabilities require a normalized ket")
        probs = [
            float(np.linalg.norm(p.matrix @ state.amplitudes) ** 2) for p in projs
        ]
    elif isinstance(state, DensityMatrix):
        _check_projector_family(projs, state.dim)
        probs = [float(np.real(np.trace(p.matrix @ state.matrix))) for p in projs]
    else:
        raise ValueError(f"born_probabilities does not support {type(state).__name__}")
    return np.array([max(0.0, p) for p in probs])


def collapse(state, p: Projector):
    """Project onto a measurement branch and renormalize.

    Raises :class:`ImpossibleOutcomeError` when the branch probability is
    numerically zero; collapsing twice onto the same projector is a no-op.
    """
    if isinstance(state, Ket):
        if state.dim != p.dim:
            raise ValueError(f"state dim {state.dim} != projector dim {p.dim}")
        vec = p.matrix @ state.amplitudes
        weight = float(np.linalg.norm(vec) ** 2)
        if weight <= PROB_FLOOR:
            raise ImpossibleOutcomeError(
                f"collapse onto a branch of probability {weight:.3e}"
            )
        return Ket(state.dims, vec / math.sqrt(weight), state.labels)
    if isinstance(state, DensityMatrix):
        if state.dim != p.dim:
            raise ValueError(f"state dim {state.dim} != projector dim {p.dim}")
        m = p.matrix @ state.matrix @ p.matrix
        weight = float(np.real(m.trace()))
        if weight <= PROB_FLOOR:
            raise ImpossibleOutcomeError(
                f"collapse onto a branch of probability {weight:.3e}"
            )
        return DensityMatrix(state.dims, m / weight, state.labels)
    raise ValueError(f"collapse does not support {type(state).__name__}")


def observable_from_projector(p: Projector) -> Observable:
    """Two-outcome observable 2P - 1 with eigenvalues exactly +1 and -1.

    Both the zero projector and the identity are rejected: either one
    would leave a single possible outcome, not a two-outcome device.
    """
    rank = p.rank
    if rank == 0 or float(np.max(np.abs(p.matrix))) <= ATOL:
        raise ValueError("the zero projector does not define a two-outcome observable")
    if rank == p.dim:
        raise ValueError("the identity projector does not define a two-outcome observable")
    eye = np.eye(p.dim, dtype=np.complex128)
    complement = Projector(p.dim, eye - p.matrix)
    return Observable(
        p.dim,
        2.0 * p.matrix - eye,
        eigenvalues=(1.0, -1.0),
        projectors=(p, complement),
    )


def coherent_state(alpha: complex, cutoff: int) -> Ket:
    """Coherent-state expansion over Fock states |0> .. |cutoff>.

    The amplitude of |n> is exp(-|alpha|^2/2) alpha^n / sqrt(n!).  The
    truncated vector is returned as-is (norm <= 1, approaching 1 as the
    cutoff grows) so the truncation error stays visible to the caller.
    """
    cutoff = int(cutoff)
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    alpha = complex(alpha)
    amps = np.empty(cutoff + 1, dtype=np.complex128)
    amps[0] = math.exp(-abs(alpha) ** 2 / 2.0)
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return Ket((cutoff + 1,), amps)


def number_operator(cutoff: int) -> Observable:
    """Photon-number observable diag(0, 1, ..., cutoff) on the truncated Fock space."""
    diag = np.arange(cutoff + 1, dtype=np.complex128)
    return Observable(cutoff + 1, np.diag(diag))


def expectation(state, obs: Observable) -> float:
    """Real expectation value <A> of a Hermitian observable."""
    if isinstance(state, Ket):
        if state.dim != obs.dim:
            raise ValueError(f"state dim {state.dim} != observable dim {obs.dim}")
        return float(np.real(np.vdot(state.amplitudes, obs.matrix @ state.amplitudes)))
    if isinstance(state, DensityMatrix):
        if state.dim != obs.dim:
            raise ValueError(f"state dim {state.dim} != observable dim {obs.dim}")
        return float(np.real(np.trace(obs.matrix @ state.matrix)))
    raise ValueError(f"expectation does not support {type(state).__name__}")


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2); 1 for pure states, 1/d for the maximally mixed state."""
    # For Hermitian rho, Tr(rho^2) is the squared Frobenius norm.
    return float(np.real(np.vdot(rho.matrix, rho.matrix)))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the sum of |eigenvalues| of a - b; the maximal distinguishability."""
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    eigs = np.linalg.eigvalsh(a.matrix - b.matrix)
    return 0.5 * float(np.sum(np.abs(eigs)))


# ---------------------------------------------------------------------------
# JSON form: dims plus row-major complex entries as [re, im] pairs.
# ---------------------------------------------------------------------------

_JSON_KINDS = {
    Ket: "ket",
    DensityMatrix: "density_matrix",
    UnitaryOp: "unitary",
    Projector: "projector",
    Observable: "observable",
}


def _entries(arr: np.ndarray) -> list:
    flat = np.asarray(arr, dtype=np.complex128).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _from_entries(entries) -> np.ndarray:
    return np.array([complex(re, im) for re, im in entries], dtype=np.complex128)


def state_to_json(obj) -> dict:
    """JSON-serializable form of any state or operator in this module."""
    kind = _JSON_KINDS.get(type(obj))
    if kind is None:
        raise ValueError(f"cannot serialize {type(obj).__name__}")
    if isinstance(obj, Ket):
        doc = {"kind": kind, "dims": list(obj.dims), "entries": _entries(obj.amplitudes)}
        if obj.labels:
            doc["labels"] = [list(factor) for factor in obj.labels]
        return doc
    if isinstance(obj, DensityMatrix):
        doc = {"kind": kind, "dims": list(obj.dims), "entries": _entries(obj.matrix)}
        if obj.labels:
            doc["labels"] = [list(factor) for factor in obj.labels]
        return doc
    return {"kind": kind, "dims": [obj.dim], "entries": _entries(obj.matrix)}


def state_from_json(doc: dict):
    """Inverse of :func:`state_to_json`."""
    kind = doc["kind"]
    dims = tuple(int(d) for d in doc["dims"])
    flat = _from_entries(doc["entries"])
    labels = tuple(tuple(f) for f in doc["labels"]) if "labels" in doc else None
    d = math.prod(dims)
    if kind == "ket":
        return Ket(dims, flat, labels)
    if kind == "density_matrix":
        return DensityMatrix(dims, flat.reshape(d, d), labels)
    if kind == "unitary":
        return UnitaryOp(d, flat.reshape(d, d))
    if kind == "projector":
        return Projector(d, flat.reshape(d, d))
    if kind == "observable":
        return Observable(d, flat.reshape(d, d))
    raise ValueError(f"unknown kind {kind!r}")
