"""Energy-budget residuals and unit-length drift versus dt for both systems.

    python scripts/energy_budget.py --grid 64 --lam 10 --dt 4e-4 2e-4 1e-4 --out budget/
"""

import argparse
from pathlib import Path

from nlc.compressible import run
from nlc.diagnostics import CompressibleEnergyObserver, IncompressibleEnergyObserver, observed_order
from nlc.imex import StepControl
from nlc.incompressible import run_incompressible
from nlc.spectral import Grid
from nlc.state import IncompressibleState, ModelParams, baseline, well_prepared_initial_data


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--lam", type=float, default=10.0)
    ap.add_argument("--dt", type=float, nargs="+", default=[4e-4, 2e-4, 1e-4])
    ap.add_argument("--t-end", type=float, default=0.1)
    ap.add_argument("--no-renormalize", action="store_true", help="let |n| drift instead of projecting each step")
    ap.add_argument("--out", type=Path, help="directory for observer CSVs")
    args = ap.parse_args()

    g = Grid((args.grid, args.grid))
    params = ModelParams(lam=args.lam)
    u0, n0 = baseline(g)
    comp0 = well_prepared_initial_data(g, params, 0.05, 0, u0, n0)
    inc0 = IncompressibleState(0.0, u0, n0, None, params)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)

    table = {"compressible": [], "incompressible": []}
    for dt in args.dt:
        ctl = StepControl(dt, args.t_end, renormalize_director=not args.no_renormalize)
        c, i = CompressibleEnergyObserver(), IncompressibleEnergyObserver()
        run(comp0, ctl, [c], keep_trajectory=False)
        run_incompressible(inc0, ctl, [i], keep_trajectory=False)
        for name, ob in (("compressible", c), ("incompressible", i)):
            table[name].append((dt, abs(ob.residual), ob.rows[-1]["unit_drift"]))
            if args.out:
                ob.write_csv(args.out / f"{name}_dt_{dt:g}.csv")

    for name, rows in table.items():
        print(name)
        for dt, res, drift in rows:
            print(f"  dt={dt:.1e}  |residual|={res:.3e}  unit drift={drift:.3e}")
        print("  residual orders:", ", ".join(f"{o:.2f}" for o in observed_order([r for _, r, _ in rows])))


if __name__ == "__main__":
    main()
