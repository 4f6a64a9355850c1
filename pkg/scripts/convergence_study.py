"""Step-size and truncation study of the counting hierarchy at one working point.

    python3 scripts/convergence_study.py --nbar 1 --sigma 0.5 --purcell 20
"""
import argparse
import math

import numpy as np

from wgqkd.scattering import EmitterSpec, PulseSpec, SimGrid, _run


def pn(y):
    return y[:, :-1, 0] + y[:, :-1, 1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nbar", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--purcell", type=float, default=20.0)
    args = ap.parse_args()
    e = EmitterSpec.from_purcell(args.purcell if args.purcell > 0 else math.inf)
    p = PulseSpec(args.nbar, args.sigma)
    base = SimGrid.default(e, p)

    ref = pn(_run(e, p, SimGrid(base.t_start, base.t_end, base.step / 8, base.n_max))[0])
    print("step        max|ΔP_n| vs h/8")
    for k in (0, 1, 2):
        g = SimGrid(base.t_start, base.t_end, base.step / 2 ** k, base.n_max)
        print(f"{g.step:.3e}   {np.abs(pn(_run(e, p, g)[0]) - ref).max():.3e}")

    print("n_max  tails (refl, trans, lost)")
    for n in (4, 6, 8, 10, 12):
        y = _run(e, p, base.with_n_max(n))[0]
        print(n, " ".join(f"{y[h, -1, 0] + y[h, -1, 1]:.2e}" for h in range(3)))


if __name__ == "__main__":
    main()
