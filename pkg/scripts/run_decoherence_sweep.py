#!/usr/bin/env python3
"""Sweep bath angles and report the bath size that hides the collapse.

For each angle, prints the minimal number of branch-coupled bath qubits
needed to push the linear-vs-collapse trace distance below the target,
and writes the full sweep for the reference angle via the CLI.
"""

import argparse

from collapse_lab.chain import standard_chain
from collapse_lab.cli import main as cli_main
from collapse_lab.decoherence import fapp_report


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--target", type=float, default=1e-6)
    parser.add_argument(
        "--thetas", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.5, 1.0, 1.5]
    )
    parser.add_argument("--out", default="out/decoherence_sweep")
    args = parser.parse_args()

    spec = standard_chain()
    print(f"{'theta':>8} {'minimal n':>10}")
    for theta in args.thetas:
        report = fapp_report(spec, theta=theta, target_distance=args.target)
        print(f"{theta:>8.3f} {report.minimal_n:>10d}")

    return cli_main(
        [
            "decohere",
            "--theta", str(args.thetas[2] if len(args.thetas) > 2 else args.thetas[0]),
            "--target", str(args.target),
            "--out", args.out,
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
