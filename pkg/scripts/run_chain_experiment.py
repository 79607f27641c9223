#!/usr/bin/env python3
"""Compare linear and collapse dynamics of the measurement chain.

Runs the superposed input through both dynamics at several reset
fidelities, samples collapse trajectories, and prints a compact table;
the full artifact set is written by the CLI.
"""

import argparse

from collapse_lab.chain import (
    ChainSpec,
    interference_readout,
    pure_photon_input,
    run_collapse,
    run_linear,
)
from collapse_lab.cli import main as cli_main
from collapse_lab.core import trace_distance


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trajectories", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="out/chain_experiment")
    args = parser.parse_args()

    print(f"{'reset':>6} {'purity_lin':>11} {'coh_lin':>8} {'vis_lin':>8} {'d(lin,col)':>11}")
    rho_in = pure_photon_input(1.0, 1.0)
    for eps in (1.0, 0.9, 0.75, 0.5, 0.25, 0.0):
        spec = ChainSpec(reset_overlap=eps)
        linear = run_linear(spec, rho_in)
        collapsed = run_collapse(spec, rho_in, mode="channel")
        gap = trace_distance(linear.rho_out, collapsed.rho_out)
        print(
            f"{eps:>6.2f} {linear.purity:>11.6f} {linear.coherence:>8.4f} "
            f"{interference_readout(linear):>8.4f} {gap:>11.6f}"
        )

    return cli_main(
        [
            "chain",
            "--trajectories", str(args.trajectories),
            "--seed", str(args.seed),
            "--out", args.out,
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
