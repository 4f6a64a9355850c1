"""Plot the CSV tables written by reproduce_all.py (needs matplotlib).

    python3 scripts/plot_figures.py results
"""
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wgqkd.runner import read_csv


def load(path):
    _, cols, rows = read_csv(path)
    data = np.array([[float(x) for x in r] for r in rows]) if cols[0] != "source" else None
    return cols, rows, data


def main(d):
    d = Path(d)
    fig, ax = plt.subplots(1, 4, figsize=(17, 3.8))

    cols, _, a = load(d / "fig1.csv")
    g = a[:, 0]
    for key, style in (("P0", "C0"), ("P1", "C1"), ("Pmulti", "C2")):
        ax[0].semilogx(g, a[:, cols.index(f"{key}_2lss")], style, label=f"{key} 2LSS")
        ax[0].semilogx(g, a[:, cols.index(f"{key}_cs")], style + "--")
    ax[0].set_xlabel("Γ/σ")
    ax[0].legend(fontsize=7)

    cols, _, a = load(d / "fig2_rates.csv")
    for key in ("R_wcs", "R_hsps", "R_2lss"):
        r = a[:, cols.index(key)]
        ax[1].semilogy(a[:, 0][r > 0], r[r > 0], label=key[2:])
    ax[1].set_xlabel("ℓ (km)")
    ax[1].legend(fontsize=7)

    for k, name in ((2, "fig3a_rates.csv"), (3, "fig3b_rates.csv")):
        cols, _, a = load(d / name)
        for j, c in enumerate(cols[1:], 1):
            r = a[:, j]
            ax[k].semilogy(a[:, 0][r > 0], r[r > 0], label=c[2:])
        ax[k].set_xlabel("ℓ (km)")
        ax[k].legend(fontsize=7)

    fig.tight_layout()
    fig.savefig(d / "figures.png", dpi=120)
    print(d / "figures.png")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "results")
