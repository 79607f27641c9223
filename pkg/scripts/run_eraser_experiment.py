#!/usr/bin/env python3
"""Reproduce the eraser figures: both setups at full statistics.

Writes one artifact set per setup under the output directory and prints
the headline fringe and no-signaling numbers.
"""

import argparse

from collapse_lab.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", default="out/eraser_experiment")
    args = parser.parse_args()

    for setup in ("eraser", "whichpath"):
        code = cli_main(
            [
                "eraser",
                "--setup", setup,
                "--events", str(args.events),
                "--seed", str(args.seed),
                "--out", f"{args.out}/{setup}",
            ]
        )
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
