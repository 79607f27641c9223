"""Acceptance suite: every headline claim of the lab, at pinned tolerances.

Each criterion is a self-contained callable with fixed seeds, so a run is
deterministic end to end.  ``run_criteria`` executes them in order and
returns structured results; the CLI ``check`` subcommand and the pytest
acceptance module both print one PASS/FAIL line per criterion from here.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import core
from .chain import (
    interference_readout,
    mixed_photon_input,
    pure_photon_input,
    reset_sweep,
    run_collapse,
    run_linear,
    standard_chain,
    trajectory_ensemble,
)
from .core import trace_distance
from .decoherence import BathModel, branch_overlap, decohered_output, fapp_report
from .eraser import (
    EraserParams,
    SetupKind,
    coincidence_histogram,
    conditional_pdf,
    expected_bin_counts,
    fringe_metrics,
    no_signaling_check,
    sample_events,
    sample_fringed_marginal,
    unconditional_pdf,
)

N_EVENTS = 1_000_000
ERASER_SEED = 42
WHICHPATH_SEED = 43
CONTROL_SEED = 44
TRAJECTORY_SEED = 7
PROPERTY_SEED = 20_240_811


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime_s: float
    details: str

    def format_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.number:2d}  {self.name}  [{self.runtime_s:.2f}s]  {self.details}"


class _Check:
    """Collects assertion outcomes without aborting on the first failure."""

    def __init__(self):
        self.failures: list[str] = []
        self.notes: list[str] = []

    def expect(self, condition: bool, description: str):
        if not condition:
            self.failures.append(description)

    def note(self, text: str):
        self.notes.append(text)

    def details(self) -> str:
        if self.failures:
            return "; ".join(self.failures)
        return "; ".join(self.notes) if self.notes else "ok"


@lru_cache(maxsize=4)
def _cached_run(setup_value: str, seed: int):
    params = EraserParams()
    events = sample_events(N_EVENTS, SetupKind(setup_value), params, seed)
    hist = coincidence_histogram(events, window=10.0)
    return params, events, hist


def _criterion_1(check: _Check):
    """Conditional histograms reproduce the closed-form densities."""
    start = time.perf_counter()
    params, _, hist = _cached_run("eraser", ERASER_SEED)
    expected_d3, expected_d4 = expected_bin_counts(params, N_EVENTS)
    elapsed = time.perf_counter() - start

    worst = 0.0
    chi2 = 0.0
    for observed, expected in ((hist.counts_d3, expected_d3), (hist.counts_d4, expected_d4)):
        pulls = (observed - expected) / np.sqrt(expected)
        worst = max(worst, float(np.max(np.abs(pulls))))
        chi2 += float(np.sum(pulls**2))
    reduced = chi2 / (2 * params.n_bins)

    check.expect(worst < 4.0, f"worst bin deviation {worst:.2f} sigma >= 4")
    check.expect(0.7 <= reduced <= 1.4, f"chi2/dof {reduced:.3f} outside [0.7, 1.4]")
    check.expect(elapsed < 10.0, f"runtime {elapsed:.1f}s >= 10s")
    check.note(f"max |pull| {worst:.2f} sigma, chi2/dof {reduced:.3f}, {elapsed:.1f}s")


def _criterion_2(check: _Check):
    """Conditioned fringes sit in anti-phase: pi/2 apart in beta*x."""
    params, _, hist = _cached_run("eraser", ERASER_SEED)
    report = fringe_metrics(hist, params)
    offset = abs(report.relative_phase - math.pi / 2)
    check.expect(offset <= 0.1, f"relative phase off by {offset:.3f} rad > 0.1")
    check.note(
        f"relative phase {report.relative_phase:.4f} (target {math.pi/2:.4f}), "
        f"V_d3 {report.visibility_d3:.3f}, V_d4 {report.visibility_d4:.3f}"
    )


def _criterion_3(check: _Check):
    """The unconditioned pattern is the bare envelope, with no fringes."""
    params, _, hist = _cached_run("eraser", ERASER_SEED)
    report = fringe_metrics(hist, params)
    check.expect(
        report.visibility_combined < 0.02,
        f"unconditioned visibility {report.visibility_combined:.4f} >= 0.02",
    )
    x = np.linspace(params.x_min, params.x_max, 10_000)
    weighted = 0.5 * conditional_pdf(x, "D3", params) + 0.5 * conditional_pdf(
        x, "D4", params
    )
    gap = float(np.max(np.abs(weighted - unconditional_pdf(x, params))))
    check.expect(gap < 1e-12, f"closed-form identity violated by {gap:.2e}")
    check.note(
        f"unconditioned visibility {report.visibility_combined:.4f}, identity gap {gap:.1e}"
    )


def _criterion_4(check: _Check):
    """Signal marginals are independent of the idler-side arrangement."""
    params, eraser_events, _ = _cached_run("eraser", ERASER_SEED)
    _, whichpath_events, _ = _cached_run("whichpath", WHICHPATH_SEED)
    same = no_signaling_check(whichpath_events, eraser_events)
    check.expect(same.p_value > 0.01, f"marginals rejected (p={same.p_value:.4f})")

    control = sample_fringed_marginal(N_EVENTS, params, CONTROL_SEED)
    injected = no_signaling_check(eraser_events, control)
    check.expect(
        injected.p_value < 1e-6,
        f"injected fringes not rejected (p={injected.p_value:.2e})",
    )
    check.note(f"p_same {same.p_value:.3f}, p_injected {injected.p_value:.1e}")


def _criterion_5(check: _Check):
    """Linear dynamics returns the superposed output at perfect reset."""
    out = run_linear(standard_chain(), pure_photon_input(1.0, 1.0))
    target_vec = np.array([0.0, 1.0, 1.0]) / math.sqrt(2)
    target = core.DensityMatrix((3,), np.outer(target_vec, target_vec))
    distance = trace_distance(out.rho_out, target)
    check.expect(distance < 1e-10, f"distance to superposed target {distance:.2e}")
    check.expect(abs(out.purity - 1.0) <= 1e-10, f"purity {out.purity}")
    check.expect(abs(out.coherence - 0.5) <= 1e-10, f"coherence {out.coherence}")
    check.note(
        f"distance {distance:.1e}, purity {out.purity:.12f}, coherence {out.coherence:.12f}"
    )


def _criterion_6(check: _Check):
    """Collapse dynamics yields the proper mixture, in channel and trajectory form."""
    spec = standard_chain()
    rho_in = pure_photon_input(1.0, 1.0)
    linear = run_linear(spec, rho_in)
    channel = run_collapse(spec, rho_in, mode="channel")
    check.expect(abs(channel.purity - 0.5) <= 1e-10, f"purity {channel.purity}")
    gap = trace_distance(linear.rho_out, channel.rho_out)
    check.expect(abs(gap - 0.5) <= 1e-10, f"linear/collapse distance {gap}")

    mean, record = trajectory_ensemble(spec, rho_in, 10_000, seed=TRAJECTORY_SEED)
    freq = record.count("left") / len(record)
    check.expect(abs(freq - 0.5) <= 0.015, f"branch frequency {freq:.4f} off by > 0.015")
    mix_gap = trace_distance(mean.rho_out, channel.rho_out)
    check.expect(mix_gap < 0.02, f"trajectory mean vs channel {mix_gap:.4f} >= 0.02")
    check.note(f"purity {channel.purity:.6f}, frequency {freq:.4f}, mean gap {mix_gap:.4f}")


def _criterion_7(check: _Check):
    """Without input coherence, collapse is operationally invisible."""
    spec = standard_chain()
    worst = 0.0
    for rho_in in (
        pure_photon_input(1.0, 0.0),
        pure_photon_input(0.0, 1.0),
        mixed_photon_input(0.5, 0.5),
        mixed_photon_input(0.3, 0.7),
        mixed_photon_input(0.7, 0.3),
    ):
        lin = run_linear(spec, rho_in)
        col = run_collapse(spec, rho_in, mode="channel")
        worst = max(worst, trace_distance(lin.rho_out, col.rho_out))
    check.expect(worst < 1e-10, f"diagonal input distinguishes dynamics by {worst:.2e}")
    check.note(f"worst distance {worst:.1e} over 5 diagonal inputs")


def _criterion_8(check: _Check):
    """Reset fidelity controls coherence and purity exactly."""
    spec = standard_chain()
    grid = (0.0, 0.25, 0.5, 0.75, 0.9, 1.0)
    worst_c = worst_p = worst_v = 0.0
    for (eps, coherence, pur) in reset_sweep(spec, grid):
        worst_c = max(worst_c, abs(coherence - 0.5 * eps**2))
        worst_p = max(worst_p, abs(pur - 0.5 * (1 + eps**4)))
        out = run_linear(standard_chain(eps), pure_photon_input(1.0, 1.0))
        worst_v = max(worst_v, abs(interference_readout(out) - 2 * coherence))
    check.expect(worst_c <= 1e-10, f"coherence error {worst_c:.2e}")
    check.expect(worst_p <= 1e-10, f"purity error {worst_p:.2e}")
    check.expect(worst_v <= 0.01, f"visibility vs 2*coherence error {worst_v:.2e}")
    check.note(
        f"coherence err {worst_c:.1e}, purity err {worst_p:.1e}, visibility err {worst_v:.1e}"
    )


def _criterion_9(check: _Check):
    """Bath coupling hides the collapse signature at the closed-form rate."""
    spec = standard_chain()
    rho_in = pure_photon_input(1.0, 1.0)
    channel = run_collapse(spec, rho_in, mode="channel")

    worst_mode_gap = 0.0
    for n in range(1, 9):
        for theta in (0.0, 0.1, 0.2, 0.5, 1.0):
            analytic = decohered_output(spec, BathModel(n, theta), rho_in)
            brute = decohered_output(spec, BathModel(n, theta, "full_tensor"), rho_in)
            worst_mode_gap = max(
                worst_mode_gap,
                float(np.max(np.abs(analytic.rho_out.matrix - brute.rho_out.matrix))),
            )
    check.expect(worst_mode_gap <= 1e-10, f"mode disagreement {worst_mode_gap:.2e}")

    worst_formula = 0.0
    for n in (1, 2, 4, 8, 64):
        for theta in (0.1, 0.2, 0.5, 1.0):
            out = decohered_output(spec, BathModel(n, theta), rho_in)
            distance = trace_distance(out.rho_out, channel.rho_out)
            worst_formula = max(
                worst_formula, abs(distance - 0.5 * abs(math.cos(theta)) ** n)
            )
    check.expect(worst_formula <= 1e-10, f"distance formula error {worst_formula:.2e}")

    report = fapp_report(spec, theta=0.2, target_distance=1e-6)
    check.expect(report.minimal_n == 652, f"minimal n {report.minimal_n} != 652")
    distances = [row[2] for row in report.sweep]
    monotone = all(a >= b for a, b in zip(distances, distances[1:]))
    check.expect(monotone, "sweep distances are not non-increasing")
    check.note(
        f"mode gap {worst_mode_gap:.1e}, formula err {worst_formula:.1e}, "
        f"minimal n {report.minimal_n}"
    )


def _random_density(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return core.DensityMatrix((d,), m / m.trace())


def _random_unitary(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return core.UnitaryOp(d, q * (np.diag(r) / np.abs(np.diag(r))))


def _random_family(rng, d):
    u = _random_unitary(rng, d).matrix
    n_blocks = int(rng.integers(2, d + 1))
    cuts = sorted(rng.choice(range(1, d), size=n_blocks - 1, replace=False))
    return [
        core.Projector(d, u[:, block] @ u[:, block].conj().T)
        for block in np.split(np.arange(d), cuts)
    ]


def _criterion_10(check: _Check):
    """Randomized core-algebra properties, 1000+ checks at 1e-9."""
    start = time.perf_counter()
    tol = 1e-9
    rng = np.random.default_rng(PROPERTY_SEED)
    rounds = 170
    n_checks = 0
    for _ in range(rounds):
        d = int(rng.integers(2, 7))

        u = _random_unitary(rng, d)
        defect = float(np.max(np.abs(u.matrix.conj().T @ u.matrix - np.eye(d))))
        check.expect(defect < tol, f"unitarity defect {defect:.2e}")
        n_checks += 1

        rho = _random_density(rng, d)
        evolved = core.evolve(rho, u)
        trace_err = abs(float(np.real(np.trace(evolved.matrix))) - 1.0)
        purity_err = abs(core.purity(evolved) - core.purity(rho))
        check.expect(max(trace_err, purity_err) < tol, "evolution broke trace/purity")
        n_checks += 1

        family = _random_family(rng, d)
        probs = core.born_probabilities(rho, family)
        check.expect(abs(float(probs.sum()) - 1.0) < tol, "Born sum != 1")
        n_checks += 1

        vec = rng.normal(size=d) + 1j * rng.normal(size=d)
        ket = core.Ket((d,), vec / np.linalg.norm(vec))
        branch = int(np.argmax(core.born_probabilities(ket, family)))
        collapsed = core.collapse(ket, family[branch])
        again = core.collapse(collapsed, family[branch])
        idem = float(np.max(np.abs(again.amplitudes - collapsed.amplitudes)))
        one_hot = core.born_probabilities(collapsed, family)
        check.expect(
            idem < tol and abs(one_hot[branch] - 1.0) < tol,
            "collapse not idempotent/one-hot",
        )
        n_checks += 1

        left = _random_density(rng, 2)
        right = _random_density(rng, int(rng.integers(2, 4)))
        joint = core.tensor(left, right)
        back = core.partial_trace(joint, {0})
        inverse_err = float(np.max(np.abs(back.matrix - left.matrix)))
        check.expect(inverse_err < tol, f"partial trace/tensor inverse {inverse_err:.2e}")
        n_checks += 1

        a, b, c = (_random_density(rng, d) for _ in range(3))
        ab = core.trace_distance(a, b)
        triangle = ab <= core.trace_distance(a, c) + core.trace_distance(c, b) + tol
        symmetric = abs(ab - core.trace_distance(b, a)) < tol
        check.expect(triangle and symmetric and ab >= -tol, "metric axioms violated")
        n_checks += 1

    # Born normalization over a full thousand random states on its own.
    family = _random_family(rng, 5)
    worst_sum = 0.0
    for _ in range(1000):
        vec = rng.normal(size=5) + 1j * rng.normal(size=5)
        ket = core.Ket((5,), vec / np.linalg.norm(vec))
        probs = core.born_probabilities(ket, family)
        worst_sum = max(worst_sum, abs(float(probs.sum()) - 1.0))
        n_checks += 1
    check.expect(worst_sum < tol, f"Born sum drift {worst_sum:.2e}")

    k = core.coherent_state(2.0, cutoff=30)
    check.expect(abs(k.norm - 1.0) < 1e-6, f"coherent norm deficit {1 - k.norm:.2e}")
    mean_n = core.expectation(k, core.number_operator(30)) / k.norm**2
    check.expect(abs(mean_n - 4.0) < 1e-4, f"mean photon number {mean_n}")
    n_checks += 2

    elapsed = time.perf_counter() - start
    check.expect(n_checks >= 1000, f"only {n_checks} checks run")
    check.expect(elapsed < 60.0, f"property suite took {elapsed:.1f}s >= 60s")
    check.note(f"{n_checks} randomized checks in {elapsed:.1f}s")


CRITERIA = (
    (1, "eraser-conditional-histograms", _criterion_1),
    (2, "eraser-anti-phase-fringes", _criterion_2),
    (3, "eraser-unconditional-envelope", _criterion_3),
    (4, "eraser-no-signaling", _criterion_4),
    (5, "chain-linear-dynamics", _criterion_5),
    (6, "chain-collapse-dynamics", _criterion_6),
    (7, "chain-diagonal-indistinguishability", _criterion_7),
    (8, "chain-reset-requirement", _criterion_8),
    (9, "bath-fapp-indistinguishability", _criterion_9),
    (10, "core-algebra-properties", _criterion_10),
)


def run_criterion(number: int) -> CriterionResult:
    for num, name, fn in CRITERIA:
        if num == number:
            check = _Check()
            start = time.perf_counter()
            fn(check)
            elapsed = time.perf_counter() - start
            return CriterionResult(
                number=num,
                name=name,
                passed=not check.failures,
                runtime_s=elapsed,
                details=check.details(),
            )
    raise ValueError(f"no criterion numbered {number}")


def run_criteria(numbers=None) -> list[CriterionResult]:
    wanted = [num for num, _, _ in CRITERIA] if numbers is None else list(numbers)
    return [run_criterion(num) for num in wanted]
