"""Fine window sweep of the observability ratio around the optimal time for linear boundaries."""

import argparse
from pathlib import Path

import numpy as np

from mbwave import io as mio
from mbwave.estimates import gaussian_beam, timespan_scan
from mbwave.gtc import linear_domain
from mbwave.solver import Coefficients

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h2", type=float, default=0.5)
    ap.add_argument("--tau", type=float, default=1.0)
    ap.add_argument("--windows", type=float, nargs="+",
                    default=list(np.round(np.arange(1.4, 2.61, 0.1), 10)))
    ap.add_argument("--nx", type=int, default=200)
    ap.add_argument("--beam-nx", type=int, default=800)
    ap.add_argument("--ensemble", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/threshold_sweep")
    args = ap.parse_args()
    dom = linear_domain(0.0, args.h2, 0.5 * args.tau, args.tau + max(args.windows) + 0.5)
    x_c = 0.7 * float(dom.width(args.tau))
    beam = gaussian_beam(x_c, float(dom.width(args.tau)) / 20, 40 * np.pi)
    rows, T = timespan_scan(dom, Coefficients(), [2], args.tau, args.windows, args.seed, args.nx,
                            3 * args.nx, beam, args.ensemble, args.beam_nx)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mio.write_csv(out / "sweep.csv", "window,min_ratio,median_ratio,beam_ratio,optimal_T_marker",
                  [(r.window, r.min_ratio, r.median_ratio, r.beam_ratio, r.optimal_T_marker)
                   for r in rows])
    print(f"optimal one-sided time T = {T:.6g}")
    for r in rows:
        print(f"  window {r.window:5.2f}  min {r.min_ratio:.3e}  beam {r.beam_ratio:.3e}"
              f"{'  <- T' if r.optimal_T_marker else ''}")
