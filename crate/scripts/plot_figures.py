"""Render the CSVs written by `blll figures <dir>`.

Usage: python scripts/plot_figures.py <dir> [--state a4]
Writes heatmap.png, mu_vs_tau.png and mu_vs_m.png into <dir>.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def load(path, state):
    df = pd.read_csv(path)
    return df[df.state_label == state]


def heatmap(d, state):
    grid = load(d / "heatmap_tau_pc.csv", state)
    table = grid.pivot(index="p_c", columns="tau", values="mu")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(table.columns, table.index, table.values, shading="auto", vmin=0, vmax=1)
    fig.colorbar(mesh, ax=ax, label=f"mu({state})")
    for curve in sorted(d.glob("heatmap_curve_m*.csv")):
        c = load(curve, state)
        m = c.m.iloc[0]
        ax.plot(c.tau, c.p_c, lw=1.5, label=f"m = {m:g}")
    ax.set_xscale("log")
    ax.set_xlabel("tau")
    ax.set_ylabel("p_c")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(d / "heatmap.png", dpi=150)


def lines(d, state, name, x, group, xlog):
    df = load(d / f"{name}.csv", state)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, g in df.groupby(group):
        ax.plot(g[x], g.mu, label=f"{group} = {key:g}")
    if xlog:
        ax.set_xscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(f"mu({state})")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    fig.savefig(d / f"{name}.png", dpi=150)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("dir", type=Path)
    p.add_argument("--state", default="a4")
    a = p.parse_args()
    heatmap(a.dir, a.state)
    lines(a.dir, a.state, "mu_vs_tau", "tau", "m", xlog=True)
    lines(a.dir, a.state, "mu_vs_m", "m", "tau", xlog=False)
    # quick sanity line for the console
    m_curve = load(a.dir / "mu_vs_m.csv", a.state)
    print("mu range:", np.round([m_curve.mu.min(), m_curve.mu.max()], 4))


if __name__ == "__main__":
    main()
