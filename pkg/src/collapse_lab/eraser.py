"""Which-path vs. erased-path photon statistics with coincidence counting.

The signal detector scans a position x while the idler side either keeps
which-path information (``WHICH_PATH``) or erases it behind a recombiner
(``ERASER``).  Conditioned on the idler outcome D3 or D4, the eraser setup
produces complementary fringe patterns

    p(x | D3) = N sinc^2(alpha x) cos^2(beta x)
    p(x | D4) = N sinc^2(alpha x) sin^2(beta x)

whose 50/50 average is the fringe-free envelope N sinc^2(alpha x) / 2 --
the same signal-side marginal the which-path setup produces, so nothing
about the idler-side choice is visible without coincidence counting.

Event generation is Monte Carlo: positions are drawn by rejection against
the sinc^2 envelope and idler tags by the conditional fringe weight, so
the (x, idler) pairs follow the joint density exactly.  Everything is
deterministic given the seed; multi-worker generation derives one
sub-seed per worker and concatenates in worker order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy import integrate, stats
from scipy.special import sici


def sinc(u):
    """sin(u)/u with the continuous value 1 at u = 0."""
    return np.sinc(np.asarray(u) / np.pi)


def _envelope_primitive(u):
    """Antiderivative of sinc^2: Si(2u) - sin^2(u)/u, with the u -> 0 limit 0."""
    u = np.asarray(u, dtype=float)
    si = sici(2.0 * u)[0]
    near_zero = np.abs(u) < 1e-300
    safe = np.where(near_zero, 1.0, u)
    return si - np.where(near_zero, 0.0, np.sin(u) ** 2 / safe)


class SetupKind(enum.Enum):
    """Idler-side arrangement: which-path detectors, or erased paths."""

    WHICH_PATH = "whichpath"
    ERASER = "eraser"


@dataclass(frozen=True)
class EraserParams:
    """Geometry of the scan: envelope/fringe frequencies, range, binning.

    ``normalization`` is computed by adaptive quadrature so that the
    idler-averaged signal density integrates to one over the scan range.
    A single shared constant cannot normalize both conditional densities
    exactly on a finite window; with the defaults each one integrates to
    1 within ~1e-6 (the truncated high-frequency cross term).
    """

    alpha: float = 1.0  # envelope spatial frequency, rad/mm
    beta: float = 5.0  # fringe spatial frequency, rad/mm
    x_min: float = -3.0 * math.pi  # mm
    x_max: float = 3.0 * math.pi  # mm
    n_bins: int = 64
    normalization: float = field(init=False, compare=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if not self.x_min < self.x_max:
            raise ValueError(f"empty scan range [{self.x_min}, {self.x_max}]")
        if self.n_bins < 2:
            raise ValueError(f"need at least 2 bins, got {self.n_bins}")
        envelope_mass, _ = integrate.quad(
            lambda x: float(sinc(self.alpha * x) ** 2),
            self.x_min,
            self.x_max,
            epsrel=1e-9,
            limit=500,
        )
        object.__setattr__(self, "normalization", 2.0 / envelope_mass)

    @property
    def x_range(self) -> tuple[float, float]:
        return (self.x_min, self.x_max)

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_bins + 1)

    def same_marginal_geometry(self, other: "EraserParams") -> bool:
        """True when the two setups share the fringe-free marginal (alpha, range)."""
        return (
            self.alpha == other.alpha
            and self.x_min == other.x_min
            and self.x_max == other.x_max
        )


IDLER_TAGS = ("D3", "D4")


def _check_in_range(x, params: EraserParams):
    x = np.asarray(x, dtype=float)
    if np.any(x < params.x_min) or np.any(x > params.x_max):
        raise ValueError(
            f"position outside scan range [{params.x_min}, {params.x_max}]"
        )
    return x


def conditional_pdf(x, which: str, params: EraserParams):
    """Signal density at x conditioned on idler outcome D3 or D4 (eraser setup)."""
    if which not in IDLER_TAGS:
        raise ValueError(f"idler outcome must be one of {IDLER_TAGS}, got {which!r}")
    x = _check_in_range(x, params)
    envelope = params.normalization * sinc(params.alpha * x) ** 2
    if which == "D3":
        return envelope * np.cos(params.beta * x) ** 2
    return envelope * np.sin(params.beta * x) ** 2


def unconditional_pdf(x, params: EraserParams):
    """Signal density with the idler outcome ignored: the bare envelope.

    Identically (1/2) N sinc^2(alpha x) by sin^2 + cos^2 = 1, so the
    fringe frequency never appears in the singles rate.
    """
    x = _check_in_range(x, params)
    return 0.5 * params.normalization * sinc(params.alpha * x) ** 2


@dataclass(frozen=True)
class DetectionEvent:
    """One signal/idler coincidence candidate."""

    x: float  # signal detector position, mm
    idler: str  # "D3" or "D4"
    t_signal: float  # ns
    t_idler: float  # ns
    setup: SetupKind

    def __post_init__(self):
        if self.idler not in IDLER_TAGS:
            raise ValueError(f"idler outcome must be one of {IDLER_TAGS}")
        if not (math.isfinite(self.t_signal) and math.isfinite(self.t_idler)):
            raise ValueError("timestamps must be finite")
        if self.t_idler < self.t_signal:
            raise ValueError("idler detection cannot precede the signal detection")


@dataclass(frozen=True, eq=False)
class EventStream:
    """Column-wise batch of detection events from a single generation run."""

    setup: SetupKind
    params: EraserParams
    x: np.ndarray
    idler: np.ndarray  # strings "D3"/"D4"
    t_signal: np.ndarray
    t_idler: np.ndarray

    def __post_init__(self):
        n = len(self.x)
        if not (len(self.idler) == len(self.t_signal) == len(self.t_idler) == n):
            raise ValueError("event columns must have equal length")
        _check_in_range(self.x, self.params)
        if not (np.all(np.isfinite(self.t_signal)) and np.all(np.isfinite(self.t_idler))):
            raise ValueError("timestamps must be finite")
        if np.any(self.t_idler < self.t_signal):
            raise ValueError("idler detections cannot precede their signals")
        for name in ("x", "idler", "t_signal", "t_idler"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.x)

    def __getitem__(self, i: int) -> DetectionEvent:
        return DetectionEvent(
            x=float(self.x[i]),
            idler=str(self.idler[i]),
            t_signal=float(self.t_signal[i]),
            t_idler=float(self.t_idler[i]),
            setup=self.setup,
        )


def _sample_positions(rng, n, params: EraserParams, acceptance) -> np.ndarray:
    """Rejection-sample n positions; acceptance(x) in [0, 1] shapes the density."""
    out = np.empty(n, dtype=float)
    filled = 0
    rate_guess = 0.2
    while filled < n:
        chunk = int(min(max((n - filled) / rate_guess * 1.2, 4096), 1 << 24))
        proposals = rng.uniform(params.x_min, params.x_max, chunk)
        accepted = proposals[rng.uniform(0.0, 1.0, chunk) < acceptance(proposals)]
        take = min(len(accepted), n - filled)
        out[filled : filled + take] = accepted[:take]
        filled += take
        rate_guess = max(len(accepted) / chunk, 1e-3)
    return out


def _worker_stream(
    n: int,
    setup: SetupKind,
    params: EraserParams,
    seed: int,
    worker: int,
    jitter_ns: float,
    mean_spacing_ns: float,
    marginal_fringe: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(worker)]))
    a, b = params.alpha, params.beta
    if marginal_fringe:
        accept = lambda u: sinc(a * u) ** 2 * np.cos(b * u) ** 2
    else:
        accept = lambda u: sinc(a * u) ** 2
    x = _sample_positions(rng, n, params, accept)
    if setup is SetupKind.ERASER and not marginal_fringe:
        # Erased paths: the idler outcome carries the fringe phase.
        p_d3 = np.cos(b * x) ** 2
    else:
        # Which-path detectors fire on either region with equal probability,
        # independent of x; the injected-fringe control also tags uniformly.
        p_d3 = np.full(n, 0.5)
    is_d3 = rng.uniform(0.0, 1.0, n) < p_d3
    idler = np.where(is_d3, "D3", "D4")
    t_signal = np.cumsum(rng.exponential(mean_spacing_ns, n))
    t_idler = t_signal + rng.uniform(0.0, jitter_ns, n) if jitter_ns > 0 else t_signal.copy()
    return x, idler, t_signal, t_idler


def sample_events(
    n: int,
    setup: SetupKind,
    params: EraserParams,
    seed: int,
    *,
    jitter_ns: float = 5.0,
    mean_spacing_ns: float = 100.0,
    n_workers: int = 1,
) -> EventStream:
    """Generate n detection events; bit-reproducible for a fixed seed.

    Idler timestamps trail their signals by a uniform delay in
    [0, jitter_ns].  With ``n_workers`` > 1 the stream is the fixed-order
    concatenation of independent sub-streams seeded by (seed, worker), so
    partitioned generation reproduces the same events no matter how the
    workers are scheduled.
    """
    if n < 1:
        raise ValueError(f"need at least one event, got n={n}")
    if jitter_ns < 0:
        raise ValueError("jitter must be nonnegative")
    if n_workers < 1:
        raise ValueError("need at least one worker")
    per_worker = [n // n_workers + (1 if w < n % n_workers else 0) for w in range(n_workers)]
    parts = [
        _worker_stream(m, setup, params, seed, w, jitter_ns, mean_spacing_ns)
        for w, m in enumerate(per_worker)
        if m > 0
    ]
    x, idler, t_sig, t_idl = (np.concatenate(cols) for cols in zip(*parts))
    return EventStream(setup, params, x, idler, t_sig, t_idl)


def sample_fringed_marginal(
    n: int,
    params: EraserParams,
    seed: int,
    *,
    jitter_ns: float = 5.0,
    mean_spacing_ns: float = 100.0,
) -> EventStream:
    """Negative-control stream whose *marginal* carries the fringe pattern.

    Positions follow sinc^2(alpha x) cos^2(beta x) regardless of the idler
    tag.  No physical setup produces this (it would make the idler-side
    choice readable from the singles rate); it exists to give the
    no-signaling test a distribution it must reject.
    """
    if n < 1:
        raise ValueError(f"need at least one event, got n={n}")
    x, idler, t_sig, t_idl = _worker_stream(
        n, SetupKind.ERASER, params, seed, 0, jitter_ns, mean_spacing_ns,
        marginal_fringe=True,
    )
    return EventStream(SetupKind.ERASER, params, x, idler, t_sig, t_idl)


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Per-bin coincidence counts for each idler channel."""

    bin_edges: np.ndarray
    counts_d3: np.ndarray
    counts_d4: np.ndarray
    n_total: int
    window: float  # ns

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        c3 = np.asarray(self.counts_d3, dtype=np.int64)
        c4 = np.asarray(self.counts_d4, dtype=np.int64)
        if len(edges) != len(c3) + 1 or len(c3) != len(c4):
            raise ValueError("bin edges and counts have inconsistent lengths")
        if np.any(c3 < 0) or np.any(c4 < 0):
            raise ValueError("counts must be nonnegative")
        if int(c3.sum() + c4.sum()) > self.n_total:
            raise ValueError("more counted events than were offered")
        for arr in (edges, c3, c4):
            arr.setflags(write=False)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts_d3", c3)
        object.__setattr__(self, "counts_d4", c4)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def n_coincident(self) -> int:
        return int(self.counts_d3.sum() + self.counts_d4.sum())


def coincidence_histogram(
    events: EventStream, window: float, params: EraserParams | None = None
) -> CoincidenceHistogram:
    """Bin the events whose signal/idler delay fits inside the window."""
    if not window > 0:
        raise ValueError(f"coincidence window must be positive, got {window}")
    params = events.params if params is None else params
    delay = np.abs(events.t_idler - events.t_signal)
    inside = delay <= window
    edges = params.bin_edges
    d3 = events.idler == "D3"
    counts_d3, _ = np.histogram(events.x[inside & d3], bins=edges)
    counts_d4, _ = np.histogram(events.x[inside & ~d3], bins=edges)
    return CoincidenceHistogram(edges, counts_d3, counts_d4, len(events), window)


def merge_histograms(a: CoincidenceHistogram, b: CoincidenceHistogram) -> CoincidenceHistogram:
    """Associatively combine partial histograms from partitioned workers."""
    if a.window != b.window or not np.array_equal(a.bin_edges, b.bin_edges):
        raise ValueError("histograms must share binning and window to merge")
    return CoincidenceHistogram(
        a.bin_edges,
        a.counts_d3 + b.counts_d3,
        a.counts_d4 + b.counts_d4,
        a.n_total + b.n_total,
        a.window,
    )


def envelope_bin_masses(params: EraserParams) -> np.ndarray:
    """Integral of sinc^2(alpha x) over each bin, from the closed-form primitive."""
    scaled = params.alpha * params.bin_edges
    prim = _envelope_primitive(scaled) / params.alpha
    return np.diff(prim)


@lru_cache(maxsize=32)
def _fringe_design(params: EraserParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Envelope-weighted bin averages of cos(2 beta x) and sin(2 beta x).

    Using the exact binned basis instead of center values keeps the fringe
    fit unbiased even where the envelope varies steeply inside a bin (near
    its zeros a constant-envelope approximation overestimates visibility
    by several percent at default binning).
    """
    w = envelope_bin_masses(params)
    env = lambda x: float(sinc(params.alpha * x) ** 2)
    cos_avg = np.empty(params.n_bins)
    sin_avg = np.empty(params.n_bins)
    edges = params.bin_edges
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        c, _ = integrate.quad(
            lambda x: env(x) * math.cos(2 * params.beta * x), lo, hi, epsrel=1e-10
        )
        s, _ = integrate.quad(
            lambda x: env(x) * math.sin(2 * params.beta * x), lo, hi, epsrel=1e-10
        )
        cos_avg[i] = c / w[i]
        sin_avg[i] = s / w[i]
    for arr in (w, cos_avg, sin_avg):
        arr.setflags(write=False)
    return w, cos_avg, sin_avg


def expected_bin_counts(params: EraserParams, n_events: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-bin expected coincidence counts for an eraser run.

    Integrates the joint density (1/2) p(x | tag) over each bin by
    adaptive quadrature; used as the reference for chi-square checks.
    """
    edges = params.bin_edges
    exp_d3 = np.empty(params.n_bins)
    exp_d4 = np.empty(params.n_bins)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        exp_d3[i], _ = integrate.quad(
            lambda x: 0.5 * float(conditional_pdf(x, "D3", params)), lo, hi, epsrel=1e-10
        )
        exp_d4[i], _ = integrate.quad(
            lambda x: 0.5 * float(conditional_pdf(x, "D4", params)), lo, hi, epsrel=1e-10
        )
    return n_events * exp_d3, n_events * exp_d4


@dataclass(frozen=True)
class FringeReport:
    """Fitted fringe visibility and phase for each coincidence channel.

    Phases are the offsets phi in  a0 (1 + v cos(2 beta x + phi));
    ``relative_phase`` converts the D3/D4 offset difference to units of
    the fringe argument beta*x, where complementary channels sit pi/2
    apart.  Visibilities are corrected for finite-bin smearing of the
    cos(2 beta x) component, so an exact cos^2 pattern reports v = 1
    regardless of binning.
    """

    visibility_d3: float
    visibility_d4: float
    visibility_combined: float
    phase_d3: float
    phase_d4: float
    relative_phase: float  # in beta*x units
    n_d3: int
    n_d4: int

    def as_dict(self) -> dict:
        return {
            "visibility_d3": self.visibility_d3,
            "visibility_d4": self.visibility_d4,
            "visibility_combined": self.visibility_combined,
            "phase_d3_rad": self.phase_d3,
            "phase_d4_rad": self.phase_d4,
            "relative_phase_beta_x": self.relative_phase,
            "n_d3": self.n_d3,
            "n_d4": self.n_d4,
        }


def _fit_fringe(counts, weights, cos_avg, sin_avg):
    """Weighted LSQ of envelope-corrected counts onto the binned fringe basis."""
    usable = weights > 1e-12 * weights.max()
    y = counts[usable] / weights[usable]
    w = np.sqrt(weights[usable])
    design = np.column_stack(
        [np.ones(usable.sum()), cos_avg[usable], sin_avg[usable]]
    )
    coef, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    base, c_amp, s_amp = coef
    visibility = math.hypot(c_amp, s_amp) / base if base > 0 else 0.0
    phase = math.atan2(-s_amp, c_amp)
    return visibility, phase


def fringe_metrics(hist: CoincidenceHistogram, params: EraserParams) -> FringeReport:
    """Per-channel visibility and the D3-vs-D4 phase shift in beta*x units."""
    n_d3 = int(hist.counts_d3.sum())
    n_d4 = int(hist.counts_d4.sum())
    if n_d3 == 0 or n_d4 == 0:
        raise ValueError("both coincidence channels must be nonempty")
    if params.beta <= 0:
        raise ValueError("fringe metrics need a positive fringe frequency")
    weights, cos_avg, sin_avg = _fringe_design(params)
    v3, phi3 = _fit_fringe(hist.counts_d3, weights, cos_avg, sin_avg)
    v4, phi4 = _fit_fringe(hist.counts_d4, weights, cos_avg, sin_avg)
    v_all, _ = _fit_fringe(hist.counts_d3 + hist.counts_d4, weights, cos_avg, sin_avg)
    delta = (phi4 - phi3 + math.pi) % (2 * math.pi) - math.pi
    return FringeReport(
        visibility_d3=v3,
        visibility_d4=v4,
        visibility_combined=v_all,
        phase_d3=phi3,
        phase_d4=phi4,
        relative_phase=abs(delta) / 2.0,
        n_d3=n_d3,
        n_d4=n_d4,
    )


@dataclass(frozen=True)
class NoSignalingReport:
    """Two-sample KS comparison of signal-side marginals."""

    statistic: float
    p_value: float
    consistent: bool  # p > 0.01: marginals indistinguishable at the 1% level
    n_a: int
    n_b: int
    setup_a: SetupKind
    setup_b: SetupKind

    def as_dict(self) -> dict:
        return {
            "ks_statistic": self.statistic,
            "p_value": self.p_value,
            "consistent": self.consistent,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "setup_a": self.setup_a.value,
            "setup_b": self.setup_b.value,
        }


def no_signaling_check(events_a: EventStream, events_b: EventStream) -> NoSignalingReport:
    """Test whether two runs share the same signal-side marginal distribution.

    The fringe frequency is allowed to differ between the runs (the
    marginal must not depend on it); envelope geometry must match.
    """
    if len(events_a) == 0 or len(events_b) == 0:
        raise ValueError("both event streams must be nonempty")
    if not events_a.params.same_marginal_geometry(events_b.params):
        raise ValueError("streams were generated with different scan geometry")
    result = stats.ks_2samp(events_a.x, events_b.x, method="asymp")
    return NoSignalingReport(
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        consistent=bool(result.pvalue > 0.01),
        n_a=len(events_a),
        n_b=len(events_b),
        setup_a=events_a.setup,
        setup_b=events_b.setup,
    )


# ---------------------------------------------------------------------------
# Tabular forms for the CSV interfaces.
# ---------------------------------------------------------------------------


def events_frame(stream: EventStream) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "x_mm": stream.x,
            "idler": stream.idler,
            "t_signal_ns": stream.t_signal,
            "t_idler_ns": stream.t_idler,
            "setup": np.repeat(stream.setup.value, len(stream)),
        }
    )


def events_from_csv(path, params: EraserParams) -> EventStream:
    frame = pd.read_csv(path, float_precision="round_trip")
    setups = frame["setup"].unique()
    if len(setups) != 1:
        raise ValueError(f"event file mixes setups: {sorted(setups)}")
    return EventStream(
        SetupKind(setups[0]),
        params,
        frame["x_mm"].to_numpy(dtype=float),
        frame["idler"].to_numpy(dtype="U2"),
        frame["t_signal_ns"].to_numpy(dtype=float),
        frame["t_idler_ns"].to_numpy(dtype=float),
    )


def histogram_frame(hist: CoincidenceHistogram) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "bin_lo": hist.bin_edges[:-1],
            "bin_hi": hist.bin_edges[1:],
            "counts_d3": hist.counts_d3,
            "counts_d4": hist.counts_d4,
        }
    )


def curve_frame(params: EraserParams, n_points: int = 512) -> pd.DataFrame:
    """Plot-ready samples of the three closed-form densities."""
    x = np.linspace(params.x_min, params.x_max, n_points)
    return pd.DataFrame(
        {
            "x": x,
            "pdf_d3": conditional_pdf(x, "D3", params),
            "pdf_d4": conditional_pdf(x, "D4", params),
            "pdf_unconditional": unconditional_pdf(x, params),
        }
    )


def with_beta(params: EraserParams, beta: float) -> EraserParams:
    """Copy of the parameters with a different fringe frequency."""
    return replace(params, beta=beta)
