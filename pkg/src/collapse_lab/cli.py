"""Command-line front end: run the experiments, write artifacts, check acceptance.

Subcommands
-----------
eraser    generate a which-path or eraser run; writes the event stream,
          coincidence histogram, closed-form curves and a metrics report.
chain     compare linear and collapse dynamics, sweep reset fidelities,
          optionally sample trajectories; writes an outcome table and
          metrics report.
decohere  bath sweep and minimal-bath-size report, with an optional
          full-tensor cross-check.
check     run the acceptance suite and print one PASS/FAIL line per
          criterion.

Configuration precedence is defaults < ``--config`` JSON file < flags,
so a run is fully described by (config, seed).  The seed falls back to
the ``COLLAPSE_LAB_SEED`` environment variable.  Stochastic outputs are
byte-identical across repeat runs with the same seed.  Files are written
to a temporary name and renamed into place, so a crashed run never
leaves a partial artifact.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .acceptance import run_criteria
from .chain import (
    ChainSpec,
    chain_spec_to_json,
    interference_readout,
    pure_photon_input,
    run_collapse,
    run_linear,
    standard_chain,
    trajectory_ensemble,
)
from .core import state_to_json, trace_distance
from .decoherence import BathModel, decohered_output, fapp_report
from .eraser import (
    EraserParams,
    SetupKind,
    coincidence_histogram,
    curve_frame,
    events_frame,
    fringe_metrics,
    histogram_frame,
    no_signaling_check,
    sample_events,
)

SEED_ENV_VAR = "COLLAPSE_LAB_SEED"
RESET_GRID = (0.0, 0.25, 0.5, 0.75, 0.9, 1.0)


# --- output helpers ---------------------------------------------------------


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_table(out_dir: Path, stem: str, frame: pd.DataFrame, fmt: str) -> Path:
    """Small tables honor --format; big event streams stay CSV regardless."""
    if fmt == "json":
        path = out_dir / f"{stem}.json"
        records = frame.to_dict(orient="records")
        _atomic_write_text(path, json.dumps(records, indent=1) + "\n")
    else:
        path = out_dir / f"{stem}.csv"
        _atomic_write_text(path, frame.to_csv(index=False))
    return path


def _write_events_csv(out_dir: Path, stem: str, frame: pd.DataFrame) -> Path:
    path = out_dir / f"{stem}.csv"
    _atomic_write_text(path, frame.to_csv(index=False))
    return path


# --- configuration ----------------------------------------------------------


def _load_config(path: "str | None") -> dict:
    if path is None:
        return {}
    with open(path) as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return doc


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicitly given flags."""
    config = _load_config(args.config)
    unknown = set(config) - set(defaults)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(config)
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _resolve_seed(value) -> int:
    """Seed precedence: flag/config value, else $COLLAPSE_LAB_SEED, else 0."""
    if value is None:
        value = os.environ.get(SEED_ENV_VAR, 0)
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (u64); falls back to $COLLAPSE_LAB_SEED, then 0")
    parser.add_argument("--out", type=str, default=None, help="output directory (default ./out)")
    parser.add_argument("--format", choices=["csv", "json"], default=None, help="table format (default csv); metrics are always JSON, events always CSV")
    parser.add_argument("--config", type=str, default=None, help="JSON config file; flags override it")


# --- eraser -----------------------------------------------------------------

ERASER_DEFAULTS = {
    "setup": "eraser",
    "events": 200_000,
    "alpha": 1.0,
    "beta": 5.0,
    "bins": 64,
    "window_ns": 10.0,
    "x_min": -3.0 * math.pi,
    "x_max": 3.0 * math.pi,
    "seed": None,
    "out": "out",
    "format": "csv",
}


def _cmd_eraser(args: argparse.Namespace) -> int:
    cfg = _merged(args, ERASER_DEFAULTS)
    cfg["seed"] = _resolve_seed(cfg["seed"])
    if cfg["events"] < 1:
        raise ValueError("--events must be at least 1")
    if cfg["window_ns"] <= 0:
        raise ValueError("--window-ns must be positive")
    setup = SetupKind(cfg["setup"])
    params = EraserParams(
        alpha=cfg["alpha"],
        beta=cfg["beta"],
        x_min=cfg["x_min"],
        x_max=cfg["x_max"],
        n_bins=cfg["bins"],
    )
    out_dir = Path(cfg["out"])

    events = sample_events(cfg["events"], setup, params, cfg["seed"])
    hist = coincidence_histogram(events, cfg["window_ns"])
    fringes = fringe_metrics(hist, params)

    other = SetupKind.ERASER if setup is SetupKind.WHICH_PATH else SetupKind.WHICH_PATH
    comparison_seed = (cfg["seed"] + 1) % 2**64
    comparison = sample_events(cfg["events"], other, params, comparison_seed)
    signaling = no_signaling_check(events, comparison)

    paths = [
        _write_events_csv(out_dir, "eraser_events", events_frame(events)),
        _write_table(out_dir, "eraser_histogram", histogram_frame(hist), cfg["format"]),
        _write_table(out_dir, "eraser_curves", curve_frame(params), cfg["format"]),
    ]
    metrics = {
        "command": "eraser",
        "setup": setup.value,
        "events": cfg["events"],
        "seed": cfg["seed"],
        "params": {
            "alpha": params.alpha,
            "beta": params.beta,
            "x_min": params.x_min,
            "x_max": params.x_max,
            "n_bins": params.n_bins,
            "normalization": params.normalization,
            "window_ns": cfg["window_ns"],
        },
        "n_coincident": hist.n_coincident,
        "fringes": fringes.as_dict(),
        "no_signaling": {
            **signaling.as_dict(),
            "comparison_seed": comparison_seed,
        },
    }
    metrics_path = out_dir / "eraser_metrics.json"
    _write_json(metrics_path, metrics)
    for path in (*paths, metrics_path):
        print(f"wrote {path}")
    return 0


# --- chain ------------------------------------------------------------------

CHAIN_DEFAULTS = {
    "epsilon": 1.0,
    "collapse_point": 1,
    "trajectories": 0,
    "seed": None,
    "out": "out",
    "format": "csv",
}


def _outcome_row(dynamics: str, epsilon: float, outcome, reference) -> dict:
    return {
        "dynamics": dynamics,
        "epsilon": epsilon,
        "purity": outcome.purity,
        "coherence": outcome.coherence,
        "visibility": interference_readout(outcome),
        "trace_distance_vs_linear": trace_distance(outcome.rho_out, reference.rho_out),
    }


def _cmd_chain(args: argparse.Namespace) -> int:
    cfg = _merged(args, CHAIN_DEFAULTS)
    cfg["seed"] = _resolve_seed(cfg["seed"])
    if cfg["trajectories"] < 0:
        raise ValueError("--trajectories must be nonnegative")
    spec = ChainSpec(reset_overlap=cfg["epsilon"], collapse_point=cfg["collapse_point"])
    out_dir = Path(cfg["out"])
    rho_in = pure_photon_input(1.0, 1.0)

    # Reference for the distance column: the perfect-reset linear output.
    ideal = run_linear(standard_chain(1.0, cfg["collapse_point"]), rho_in)
    linear = run_linear(spec, rho_in)
    collapsed = run_collapse(spec, rho_in, mode="channel")

    rows = [
        _outcome_row("linear", cfg["epsilon"], linear, ideal),
        _outcome_row("collapse", cfg["epsilon"], collapsed, ideal),
    ]
    for eps in RESET_GRID:
        swept = run_linear(ChainSpec(reset_overlap=eps, collapse_point=cfg["collapse_point"]), rho_in)
        rows.append(_outcome_row("reset_sweep", eps, swept, ideal))

    metrics = {
        "command": "chain",
        "seed": cfg["seed"],
        "epsilon": cfg["epsilon"],
        "collapse_point": cfg["collapse_point"],
        "linear": {"purity": linear.purity, "coherence": linear.coherence},
        "collapse": {"purity": collapsed.purity, "coherence": collapsed.coherence},
        "trace_distance_linear_collapse": trace_distance(
            linear.rho_out, collapsed.rho_out
        ),
        "rho_out_linear": state_to_json(linear.rho_out),
        "rho_out_collapse": state_to_json(collapsed.rho_out),
        "chain_spec": chain_spec_to_json(spec),
    }
    if cfg["trajectories"] > 0:
        mean, record = trajectory_ensemble(spec, rho_in, cfg["trajectories"], cfg["seed"])
        frequency = record.count("left") / len(record)
        rows.append(_outcome_row("trajectory_mean", cfg["epsilon"], mean, ideal))
        metrics["trajectories"] = {
            "n": cfg["trajectories"],
            "frequency_branch_a": frequency,
            "distance_mean_vs_channel": trace_distance(mean.rho_out, collapsed.rho_out),
        }

    table = pd.DataFrame(
        rows,
        columns=[
            "dynamics",
            "epsilon",
            "purity",
            "coherence",
            "visibility",
            "trace_distance_vs_linear",
        ],
    )
    table_path = _write_table(out_dir, "chain_outcomes", table, cfg["format"])
    metrics_path = out_dir / "chain_metrics.json"
    _write_json(metrics_path, metrics)
    print(f"wrote {table_path}")
    print(f"wrote {metrics_path}")
    return 0


# --- decohere -----------------------------------------------------------------

DECOHERE_DEFAULTS = {
    "theta": 0.2,
    "target": 1e-6,
    "n": 8,
    "mode": "analytic",
    "epsilon": 1.0,
    "seed": None,
    "out": "out",
    "format": "csv",
}


def _cmd_decohere(args: argparse.Namespace) -> int:
    cfg = _merged(args, DECOHERE_DEFAULTS)
    cfg["seed"] = _resolve_seed(cfg["seed"])
    mode = cfg["mode"].replace("-", "_")
    if mode not in ("analytic", "full_tensor"):
        raise ValueError(f"--mode must be analytic or full-tensor, got {cfg['mode']}")
    spec = ChainSpec(reset_overlap=cfg["epsilon"])
    out_dir = Path(cfg["out"])

    report = fapp_report(spec, theta=cfg["theta"], target_distance=cfg["target"])
    sweep = pd.DataFrame(
        [
            {
                "n": n,
                "theta": cfg["theta"],
                "coherence": coherence,
                "trace_distance_to_collapse": distance,
            }
            for n, coherence, distance in report.sweep
        ]
    )
    payload = {
        "command": "decohere",
        "seed": cfg["seed"],
        "epsilon": cfg["epsilon"],
        **report.as_dict(),
    }

    if mode == "full_tensor":
        rho_in = pure_photon_input(1.0, 1.0)
        analytic = decohered_output(spec, BathModel(cfg["n"], cfg["theta"]), rho_in)
        brute = decohered_output(
            spec, BathModel(cfg["n"], cfg["theta"], "full_tensor"), rho_in
        )
        gap = float(np.max(np.abs(analytic.rho_out.matrix - brute.rho_out.matrix)))
        payload["cross_check"] = {
            "n": cfg["n"],
            "theta": cfg["theta"],
            "max_abs_difference": gap,
            "within_tolerance": gap <= 1e-10,
        }

    sweep_path = _write_table(out_dir, "decoherence_sweep", sweep, cfg["format"])
    report_path = out_dir / "fapp_report.json"
    _write_json(report_path, payload)
    print(f"wrote {sweep_path}")
    print(f"wrote {report_path}")
    print(f"minimal bath size for distance < {cfg['target']:g}: n = {report.minimal_n}")
    return 0


# --- check ----------------------------------------------------------------------


def _cmd_check(args: argparse.Namespace) -> int:
    results = run_criteria()
    for result in results:
        print(result.format_line())
    n_passed = sum(r.passed for r in results)
    print(f"{n_passed}/{len(results)} acceptance criteria passed")
    if args.out is not None:
        report = {
            "passed": n_passed == len(results),
            "criteria": [
                {
                    "number": r.number,
                    "name": r.name,
                    "passed": r.passed,
                    "runtime_s": r.runtime_s,
                    "details": r.details,
                }
                for r in results
            ],
        }
        path = Path(args.out) / "acceptance_report.json"
        _write_json(path, report)
        print(f"wrote {path}")
    return 0 if n_passed == len(results) else 1


# --- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collapse-lab",
        description="Simulations of collapse vs. linear dynamics: eraser statistics, a measurement chain, and bath decoherence.",
    )
    parser.add_argument("--version", action="version", version=f"collapse-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    eraser = sub.add_parser("eraser", help="run the which-path / eraser experiment")
    eraser.add_argument("--setup", choices=["whichpath", "eraser"], default=None)
    eraser.add_argument("--events", type=int, default=None, help="number of detection events")
    eraser.add_argument("--alpha", type=float, default=None, help="envelope frequency (rad/mm)")
    eraser.add_argument("--beta", type=float, default=None, help="fringe frequency (rad/mm)")
    eraser.add_argument("--bins", type=int, default=None, help="histogram bin count")
    eraser.add_argument("--window-ns", dest="window_ns", type=float, default=None, help="coincidence window (ns)")
    _add_common(eraser)
    eraser.set_defaults(handler=_cmd_eraser)

    chain = sub.add_parser("chain", help="run the measurement-chain comparison")
    chain.add_argument("--epsilon", type=float, default=None, help="reset overlap in [0, 1]")
    chain.add_argument("--collapse-point", dest="collapse_point", type=int, choices=[1, 2, 3], default=None)
    chain.add_argument("--trajectories", type=int, default=None, help="sampled collapse trajectories (0 = skip)")
    _add_common(chain)
    chain.set_defaults(handler=_cmd_chain)

    decohere = sub.add_parser("decohere", help="bath sweep and minimal-bath report")
    decohere.add_argument("--theta", type=float, default=None, help="per-qubit branch rotation angle (rad)")
    decohere.add_argument("--target", type=float, default=None, help="target trace distance in (0, 0.5]")
    decohere.add_argument("--n", type=int, default=None, help="bath size for the full-tensor cross-check")
    decohere.add_argument("--mode", choices=["analytic", "full-tensor"], default=None)
    decohere.add_argument("--epsilon", type=float, default=None, help="reset overlap in [0, 1]")
    _add_common(decohere)
    decohere.set_defaults(handler=_cmd_decohere)

    check = sub.add_parser("check", help="run the acceptance suite")
    check.add_argument("--out", type=str, default=None, help="also write acceptance_report.json here")
    check.set_defaults(handler=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
