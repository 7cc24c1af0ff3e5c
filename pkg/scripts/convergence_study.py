"""Grid-refinement tables for the solver (manufactured solution) and the multiplier identity."""

import argparse
from pathlib import Path

import numpy as np

from mbwave import io as mio
from mbwave.estimates import mode_data, multiplier_identity_check
from mbwave.gtc import linear_domain
from mbwave.mms import ManufacturedSolution, mms_errors
from mbwave.solver import Coefficients, certified_grid, energy, solve_forward

COEFFS = Coefficients(Xt=lambda t, x: 0.2 + 0 * x, Xx=lambda t, x: 0.1 * np.sin(t) + 0 * x,
                      V=lambda t, x: 0.5 + 0.1 * x)
LEVELS = ((50, 150), (100, 300), (200, 600), (400, 1200))


def mms_table(h2s):
    rows = []
    for h2 in h2s:
        dom = linear_domain(0.0, h2, 0.0, 2.0, 0.0, 1.0)
        errs, grids = mms_errors(ManufacturedSolution(dom, COEFFS), 0.0, 1.0, LEVELS)
        for i, (e, g) in enumerate(zip(errs, grids)):
            ratio = errs[i - 1] / e if i else float("nan")
            rows.append((h2, g[0], g[1], e, ratio))
    return rows


def multiplier_table(h2s):
    rows = []
    for h2 in h2s:
        dom = linear_domain(0.0, h2, 0.0, 3.0, 0.0, 1.0)
        data = mode_data(dom, 0.0, [1.0, 0.5], [0.3, 0.2])
        center = (-0.5, 0.5 if h2 == 0 else 0.3)
        prev = None
        for nx, nt in LEVELS:
            fld = solve_forward(dom, Coefficients(), data, certified_grid(dom, 0.0, 2.0, nx, nt))
            r = multiplier_identity_check(fld, center).residual / energy(fld, 0)
            rows.append((h2, nx, fld.grid.nt, r, prev / r if prev else float("nan")))
            prev = r
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/convergence")
    ap.add_argument("--h2", type=float, nargs="+", default=[0.0, 0.3, 0.6])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, fn in (("mms", mms_table), ("multiplier", multiplier_table)):
        rows = fn(args.h2)
        mio.write_csv(out / f"{name}.csv", "h2,nx,nt,error,ratio", rows)
        print(name)
        for r in rows:
            print("  h2={:<4g} {:>4d}x{:<5d} error {:.3e} ratio {:.3f}".format(*r))
