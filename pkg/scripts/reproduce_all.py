"""Write every figure table to results/ (or --out) and print the headline numbers.

    python3 scripts/reproduce_all.py [--out results]
"""
import argparse
import time
from pathlib import Path

from wgqkd.runner import reproduce_figure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tables = {}
    for fig in ("fig1", "fig2", "fig3a", "fig3b"):
        t0 = time.perf_counter()
        for t in reproduce_figure(fig):
            t.write(out / f"{t.name}.csv")
            tables[t.name] = t
        print(f"{fig}: {time.perf_counter() - t0:.1f} s")

    rates = tables["fig2_rates"]
    i = rates.column("l_km").index(20.0)
    print(f"R(2LSS)/R(WCS opt) at 20 km: {rates.column('R_2lss')[i] / rates.column('R_wcs')[i]:.3f}")
    for name in ("fig2_lmax", "fig3a_lmax", "fig3b_lmax"):
        t = tables[name]
        print(f"{name}: " + ", ".join(f"{k}: {v:.2f} km" for k, v in t.rows))


if __name__ == "__main__":
    main()
