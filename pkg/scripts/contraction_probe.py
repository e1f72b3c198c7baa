"""Picard contraction factor as a function of the horizon T0 and lambda.

    python scripts/contraction_probe.py --T0 0.04 0.02 0.01 0.005 --lam 10 40
"""

import argparse

from nlc.imex import StepControl
from nlc.picard import picard_iterate
from nlc.spectral import Grid
from nlc.state import ModelParams, baseline, well_prepared_initial_data


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--T0", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    ap.add_argument("--lam", type=float, nargs="+", default=[10.0])
    ap.add_argument("--delta0", type=float, default=0.05)
    ap.add_argument("--steps", type=int, default=50)
    args = ap.parse_args()

    g = Grid((args.grid, args.grid))
    u0, n0 = baseline(g)
    print(f"{'lambda':>8} {'T0':>8} {'iters':>6} {'tau':>10}  metrics")
    for lam in args.lam:
        U0 = well_prepared_initial_data(g, ModelParams(lam=lam), args.delta0, 0, u0, n0)
        for T0 in args.T0:
            _, rep = picard_iterate(U0, T0, 20, StepControl(T0 / args.steps, T0, renormalize_director=False), tol=1e-20)
            metrics = " ".join(f"{d:.1e}" for d in rep.diff_norms)
            print(f"{lam:8g} {T0:8g} {rep.iterates:6d} {rep.tau_estimate:10.3e}  {metrics}")


if __name__ == "__main__":
    main()
