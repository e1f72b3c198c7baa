"""Per-lambda breakdown of the sweep error measures.

Prints each contribution to the combined error at t_end, their fitted slopes,
and the H^s size of lam^2 (rho - 1).  That last column stays O(1) but jumps
around with lam: the density oscillates at a frequency ~ lam about its
pressure-balanced state, so t_end samples a different phase for every lam.

    python scripts/rate_breakdown.py --config scripts/desk.yaml
"""

import argparse

import numpy as np

from nlc.config import load_config
from nlc.diagnostics import fit_rate
from nlc.sweep import SweepConfig, compare_run


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else SweepConfig()

    keys = ("rho_weighted", "u_l2", "n_h2", "E_combined", "grad_rho_hs2", "time_integrated_u", "time_integrated_n")
    rows = {lam: compare_run(cfg, lam) for lam in cfg.lambdas}
    print(f"{'lambda':>7} " + " ".join(f"{k:>17}" for k in keys))
    for lam, r in rows.items():
        print(f"{lam:7g} " + " ".join(f"{r[k]:17.3e}" for k in keys))
    print("slopes  " + " ".join(f"{fit_rate([(l, r[k]) for l, r in rows.items()])[0]:17.2f}" for k in keys))
    print("reference scalings: lam^-3 for the weighted density (lam times a lam^-2 amplitude squared), lam^-2 for velocity")
    print("||lam^2 (rho - 1)||_s at t_end:")
    for lam, r in rows.items():
        print(f"  {lam:7g}  {np.sqrt(r['rho_weighted'] / lam) * lam**2:.3e}")


if __name__ == "__main__":
    main()
