"""Tests for bath-induced suppression of the linear/collapse distinction."""

import math

import numpy as np
import pytest

from collapse_lab.chain import (
    pure_photon_input,
    run_collapse,
    run_linear,
    standard_chain,
)
from collapse_lab.core import trace_distance
from collapse_lab.decoherence import (
    BathModel,
    branch_overlap,
    decohered_output,
    distance_to_collapse,
    fapp_report,
)


@pytest.fixture(scope="module")
def spec():
    return standard_chain()


@pytest.fixture(scope="module")
def rho_in():
    return pure_photon_input(1.0, 1.0)


# --- bath model -------------------------------------------------------------


def test_bath_model_validation():
    with pytest.raises(ValueError, match="qubit"):
        BathModel(0, 0.2)
    with pytest.raises(ValueError, match="theta"):
        BathModel(1, -0.1)
    with pytest.raises(ValueError, match="mode"):
        BathModel(1, 0.2, "approximate")
    with pytest.raises(ValueError, match="n <= 12"):
        BathModel(13, 0.2, "full_tensor")
    BathModel(10**20, 0.2, "analytic")  # astronomically many qubits are fine here


def test_branch_overlap_values():
    assert branch_overlap(BathModel(1, 0.0)) == 1.0
    assert branch_overlap(BathModel(7, 0.0)) == 1.0
    # One qubit rotated by +-pi/4 fully distinguishes the branches.
    assert abs(branch_overlap(BathModel(1, math.pi / 2))) < 1e-15

    # Oracle: explicit single-qubit states and their inner product, powered.
    theta = 0.2
    plus = np.array([math.cos(theta / 2), math.sin(theta / 2)])
    minus = np.array([math.cos(theta / 2), -math.sin(theta / 2)])
    single = float(plus @ minus)
    assert branch_overlap(BathModel(8, theta)) == pytest.approx(single**8, abs=1e-12)
    assert branch_overlap(BathModel(8, theta)) == pytest.approx(
        math.cos(0.2) ** 8, abs=1e-12
    )


def test_branch_overlap_sign_alternates_past_orthogonality():
    assert branch_overlap(BathModel(1, math.pi)) == pytest.approx(-1.0)
    assert branch_overlap(BathModel(2, math.pi)) == pytest.approx(1.0)


# --- decohered output ----------------------------------------------------------


def test_zero_angle_bath_is_inert(spec, rho_in):
    linear = run_linear(spec, rho_in)
    out = decohered_output(spec, BathModel(5, 0.0), rho_in)
    assert trace_distance(out.rho_out, linear.rho_out) < 1e-12
    out_full = decohered_output(spec, BathModel(5, 0.0, "full_tensor"), rho_in)
    assert trace_distance(out_full.rho_out, linear.rho_out) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 4, 8])
@pytest.mark.parametrize("theta", [0.0, 0.1, 0.2, 0.5, 1.0])
def test_full_tensor_matches_analytic(spec, rho_in, n, theta):
    analytic = decohered_output(spec, BathModel(n, theta, "analytic"), rho_in)
    brute = decohered_output(spec, BathModel(n, theta, "full_tensor"), rho_in)
    assert np.max(np.abs(analytic.rho_out.matrix - brute.rho_out.matrix)) < 1e-10


def test_full_tensor_handles_mixed_inputs(spec):
    rho = pure_photon_input(0.6, 0.8)
    analytic = decohered_output(spec, BathModel(6, 0.3, "analytic"), rho)
    brute = decohered_output(spec, BathModel(6, 0.3, "full_tensor"), rho)
    assert np.max(np.abs(analytic.rho_out.matrix - brute.rho_out.matrix)) < 1e-10


def test_bath_only_touches_coherence(spec, rho_in):
    linear = run_linear(spec, rho_in)
    for bath in (BathModel(3, 0.4), BathModel(8, 0.4, "full_tensor")):
        out = decohered_output(spec, bath, rho_in)
        np.testing.assert_allclose(
            np.diag(out.rho_out.matrix), np.diag(linear.rho_out.matrix), atol=1e-10
        )
        expected = 0.5 * branch_overlap(bath)
        assert out.coherence == pytest.approx(abs(expected), abs=1e-10)


def test_distance_to_collapse_matches_closed_form(spec, rho_in):
    collapse = run_collapse(spec, rho_in, mode="channel")
    for n in (1, 3, 10, 50):
        for theta in (0.1, 0.2, 1.0):
            out = decohered_output(spec, BathModel(n, theta), rho_in)
            distance = trace_distance(out.rho_out, collapse.rho_out)
            assert distance == pytest.approx(
                0.5 * abs(math.cos(theta)) ** n, abs=1e-10
            )


def test_distance_monotone_in_bath_size_and_angle(spec):
    sizes = [1, 2, 4, 8, 16, 64, 256]
    for theta in (0.1, 0.5, 1.2):
        distances = [distance_to_collapse(spec, BathModel(n, theta)) for n in sizes]
        assert all(a >= b - 1e-15 for a, b in zip(distances, distances[1:]))
    angles = [0.0, 0.2, 0.5, 1.0, math.pi / 2]
    dist_by_angle = [distance_to_collapse(spec, BathModel(4, t)) for t in angles]
    assert all(a >= b - 1e-15 for a, b in zip(dist_by_angle, dist_by_angle[1:]))


def test_huge_analytic_bath_reaches_fapp_regime(spec, rho_in):
    collapse = run_collapse(spec, rho_in, mode="channel")
    out = decohered_output(spec, BathModel(652, 0.2), rho_in)
    assert trace_distance(out.rho_out, collapse.rho_out) < 1e-6


# --- fapp report ------------------------------------------------------------------


def test_minimal_bath_size_at_reference_point(spec):
    # Oracle: ceil(ln(2e-6) / ln(cos 0.2)) with direct-evaluation confirmation.
    report = fapp_report(spec, theta=0.2, target_distance=1e-6)
    assert report.minimal_n == 652
    assert report.minimal_n == math.ceil(math.log(2e-6) / math.log(math.cos(0.2)))
    assert 0.5 * math.cos(0.2) ** 652 < 1e-6 <= 0.5 * math.cos(0.2) ** 651
    assert report.base_coherence == pytest.approx(0.5, abs=1e-10)
    assert len(report.sweep) == 652
    distances = [row[2] for row in report.sweep]
    assert all(a >= b for a, b in zip(distances, distances[1:]))
    assert distances[-1] < 1e-6 <= distances[-2]


def test_single_orthogonalizing_qubit_suffices_at_right_angle(spec):
    report = fapp_report(spec, theta=math.pi / 2, target_distance=1e-6)
    assert report.minimal_n == 1


def test_loose_target_needs_one_qubit(spec):
    report = fapp_report(spec, theta=0.3, target_distance=0.5)
    assert report.minimal_n == 1
    assert report.sweep[0][2] < 0.5


def test_unreachable_targets_raise(spec):
    with pytest.raises(ValueError, match="unreachable"):
        fapp_report(spec, theta=0.0, target_distance=0.1)
    with pytest.raises(ValueError, match="unreachable"):
        fapp_report(spec, theta=math.pi, target_distance=0.1)
    with pytest.raises(ValueError, match="target"):
        fapp_report(spec, theta=0.2, target_distance=0.0)
    with pytest.raises(ValueError, match="target"):
        fapp_report(spec, theta=0.2, target_distance=0.7)


def test_sweep_is_subsampled_for_tiny_angles(spec):
    report = fapp_report(spec, theta=0.005, target_distance=1e-4)
    assert report.minimal_n > 100_000
    assert len(report.sweep) <= 110
    assert report.sweep[0][0] == 1
    assert report.sweep[-1][0] == report.minimal_n


def test_report_distances_agree_with_simulated_bath(spec, rho_in):
    report = fapp_report(spec, theta=0.5, target_distance=1e-3)
    collapse = run_collapse(spec, rho_in, mode="channel")
    for n, _, distance in report.sweep[:6]:
        out = decohered_output(spec, BathModel(int(n), 0.5), rho_in)
        assert trace_distance(out.rho_out, collapse.rho_out) == pytest.approx(
            distance, abs=1e-10
        )
