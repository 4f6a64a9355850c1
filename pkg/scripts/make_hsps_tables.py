"""Write the illustrative heralded single-photon source tables in src/wgqkd/data.

The numbers come from a textbook heralded-PDC model, NOT from any published
source characterization:

    pairs ~ thermal(lam), herald = threshold detector (efficiency eta_t,
    dark probability d_t), signal photons ~ Binomial(pairs, eta_s).

Run from the repo root:  python scripts/make_hsps_tables.py
"""
import argparse
from pathlib import Path

import numpy as np
from scipy import stats

OUT = Path(__file__).resolve().parents[1] / "src" / "wgqkd" / "data"


def heralded(lam, eta_t, d_t, eta_s, m_max=60, n_max=10):
    m = np.arange(m_max + 1)
    pairs = lam ** m / (1 + lam) ** (m + 1)
    herald = 1 - (1 - d_t) * (1 - eta_t) ** m
    w = pairs * herald
    w /= w.sum()
    p = np.array([np.sum(w * stats.binom.pmf(n, m, eta_s)) for n in range(n_max + 1)])
    return p


def write(path, p, header):
    lines = [f"# {h}" for h in header]
    lines.append(f"# tail beyond n={len(p) - 1}: {max(0.0, 1 - p.sum()):.3e}")
    lines += [f"{n} {x:.12e}" for n, x in enumerate(p)]
    path.write_text("\n".join(lines) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta-t", type=float, default=0.6)
    ap.add_argument("--dark", type=float, default=1e-6)
    ap.add_argument("--eta-s", type=float, default=0.3)
    ap.add_argument("--lam-signal", type=float, default=0.1)
    ap.add_argument("--lam-decoy", type=float, default=0.01)
    args = ap.parse_args()
    common = ["Illustrative heralded single-photon source statistics.",
              "Generated by scripts/make_hsps_tables.py from a heralded-PDC model;",
              "not measured or published values.",
              f"eta_t={args.eta_t} dark={args.dark} eta_s={args.eta_s}"]
    for name, lam in (("hsps_signal.txt", args.lam_signal), ("hsps_decoy.txt", args.lam_decoy)):
        p = heralded(lam, args.eta_t, args.dark, args.eta_s)
        write(OUT / name, p, common + [f"mean pair number lam={lam}"])
        print(name, np.round(p[:4], 6))


if __name__ == "__main__":
    main()
