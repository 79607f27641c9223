"""Property tests for the core algebra, driven by hypothesis-chosen seeds."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from collapse_lab.core import (
    DensityMatrix,
    Ket,
    Projector,
    UnitaryOp,
    basis_projector,
    born_probabilities,
    coherent_state,
    collapse,
    evolve,
    partial_trace,
    purity,
    tensor,
    trace_distance,
    unitary_from_hamiltonian,
)
from collapse_lab.core import Observable

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.sampled_from([2, 3, 4, 5])


def random_ket(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return Ket((d,), v / np.linalg.norm(v))


def random_density(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return DensityMatrix((d,), m / m.trace())


def random_unitary(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return UnitaryOp(d, q * (np.diag(r) / np.abs(np.diag(r))))


def random_projector_family(rng, d):
    """Complete orthogonal family from the columns of a random unitary."""
    u = random_unitary(rng, d).matrix
    n_blocks = int(rng.integers(2, d + 1))
    cuts = sorted(rng.choice(range(1, d), size=n_blocks - 1, replace=False))
    blocks = np.split(np.arange(d), cuts)
    family = []
    for block in blocks:
        cols = u[:, block]
        family.append(Projector(d, cols @ cols.conj().T))
    return family


@given(seed=seeds, d=dims)
def test_hamiltonian_exponential_is_unitary(seed, d):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = Observable(d, g + g.conj().T)
    u = unitary_from_hamiltonian(h, dt=float(rng.uniform(-5, 5)))
    defect = np.max(np.abs(u.matrix.conj().T @ u.matrix - np.eye(d)))
    assert defect < 1e-10


@given(seed=seeds, d=dims)
def test_evolve_preserves_trace_hermiticity_and_purity(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d)
    out = evolve(rho, random_unitary(rng, d))
    assert abs(np.trace(out.matrix) - 1.0) < 1e-10
    assert np.max(np.abs(out.matrix - out.matrix.conj().T)) < 1e-10
    assert abs(purity(out) - purity(rho)) < 1e-10
    np.testing.assert_allclose(
        np.linalg.eigvalsh(out.matrix), np.linalg.eigvalsh(rho.matrix), atol=1e-10
    )


@given(seed=seeds, d=dims)
def test_born_probabilities_sum_to_one(seed, d):
    rng = np.random.default_rng(seed)
    family = random_projector_family(rng, d)
    for state in (random_ket(rng, d), random_density(rng, d)):
        probs = born_probabilities(state, family)
        assert np.all(probs >= 0) and np.all(probs <= 1 + 1e-12)
        assert abs(probs.sum() - 1.0) < 1e-10


@given(seed=seeds, d=dims)
def test_collapse_yields_one_hot_born_vector(seed, d):
    rng = np.random.default_rng(seed)
    family = random_projector_family(rng, d)
    state = random_ket(rng, d)
    probs = born_probabilities(state, family)
    branch = int(np.argmax(probs))
    collapsed = collapse(state, family[branch])
    assert abs(collapsed.norm - 1.0) < 1e-10
    one_hot = born_probabilities(collapsed, family)
    expected = np.zeros(len(family))
    expected[branch] = 1.0
    np.testing.assert_allclose(one_hot, expected, atol=1e-10)
    again = collapse(collapsed, family[branch])
    np.testing.assert_allclose(again.amplitudes, collapsed.amplitudes, atol=1e-10)


@given(seed=seeds, da=st.sampled_from([2, 3]), db=st.sampled_from([2, 3]))
def test_partial_trace_inverts_tensor_on_products(seed, da, db):
    rng = np.random.default_rng(seed)
    a = random_density(rng, da)
    b = random_density(rng, db)
    joint = tensor(a, b)
    np.testing.assert_allclose(partial_trace(joint, {0}).matrix, a.matrix, atol=1e-10)
    np.testing.assert_allclose(partial_trace(joint, {1}).matrix, b.matrix, atol=1e-10)
    assert abs(np.trace(joint.matrix) - 1.0) < 1e-10


@given(seed=seeds, d=dims)
@settings(max_examples=60)
def test_trace_distance_is_a_metric(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(rng, d) for _ in range(3))
    assert abs(trace_distance(a, b) - trace_distance(b, a)) < 1e-12
    assert trace_distance(a, a) < 1e-12
    assert trace_distance(a, b) <= trace_distance(a, c) + trace_distance(c, b) + 1e-9
    assert -1e-12 <= trace_distance(a, b) <= 1.0 + 1e-12


@given(alpha=st.floats(min_value=0.1, max_value=3.0), seed=seeds)
@settings(max_examples=40)
def test_coherent_norm_deficit_monotone_in_cutoff(alpha, seed):
    rng = np.random.default_rng(seed)
    phase = np.exp(1j * rng.uniform(0, 2 * math.pi))
    deficits = [
        1.0 - coherent_state(alpha * phase, cutoff=c).norm for c in range(1, 20)
    ]
    assert all(later <= earlier + 1e-15 for earlier, later in zip(deficits, deficits[1:]))


@given(seed=seeds)
@settings(max_examples=40)
def test_collapse_matches_born_weight_on_density_matrices(seed):
    rng = np.random.default_rng(seed)
    d = 4
    rho = random_density(rng, d)
    family = [basis_projector(d, i) for i in range(d)]
    probs = born_probabilities(rho, family)
    # Reassembling the collapsed branches with Born weights gives the dephased state.
    rebuilt = sum(
        p * collapse(rho, proj).matrix for p, proj in zip(probs, family) if p > 1e-9
    )
    np.testing.assert_allclose(rebuilt, np.diag(np.diag(rho.matrix)), atol=1e-9)
