"""Plot energy.csv and curve.csv from fsns run directories.

usage: python scripts/plot.py RUN_DIR [RUN_DIR ...]
"""
import csv
import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) if r[k] else float("nan") for r in rows] for k in rows[0]}


def plot_energy(run, ax):
    d = read_csv(run / "energy.csv")
    ax.semilogy(d["t"], d["H1_norm_sq"], label=f"{run.name} |u|^2")
    ax.semilogy(d["t"], d["H1a2_norm_sq"], "--", label=f"{run.name} dissipation")


def plot_curve(run, ax):
    d = read_csv(run / "curve.csv")
    eps = d["epsilon"]
    lo = [m - l for m, l in zip(d["eps_log_p"], d["eps_log_p_low"])]
    hi = [h - m for m, h in zip(d["eps_log_p"], d["eps_log_p_high"])]
    ax.errorbar(eps, d["eps_log_p"], yerr=[lo, hi], fmt="o", label=run.name)
    sanity = run / "sanity.json"
    if sanity.exists():
        s = json.loads(sanity.read_text())
        low = s["band_low"] if s["band_low"] is not None else min(d["eps_log_p_low"])
        ax.axhspan(low, s["band_high"], alpha=0.2)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("epsilon log P")


def main():
    runs = [Path(p) for p in sys.argv[1:]]
    if not runs:
        sys.exit(__doc__)
    fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4))
    for run in runs:
        if (run / "energy.csv").exists():
            plot_energy(run, a)
        if (run / "curve.csv").exists():
            plot_curve(run, b)
    a.set_xlabel("t")
    a.legend()
    b.legend()
    fig.tight_layout()
    plt.show()


if __name__ == "__main__":
    main()
