"""Run a mesh-refinement sweep on the built-in 2-D example and fit the
empirical convergence rate against the analytic top-control slice.

Usage: python3 scripts/convergence_sweep.py [--coupling {h=k,h=c*k^(2/3)}]
"""

import argparse

from monohjb import builtin, run_sweep
from monohjb.harness import fit_rate_rows, sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--coupling", default="h=k", choices=["h=k", "h=c*k^(2/3)"])
    ap.add_argument("--ks", type=float, nargs="+", default=[0.5, 0.25, 0.125])
    args = ap.parse_args()

    spec = builtin("paper_example_2d")
    rows = run_sweep(spec, args.ks, coupling=args.coupling)
    rate = fit_rate_rows(rows)
    print(sweep_csv(rows, rate=rate))


if __name__ == "__main__":
    main()
