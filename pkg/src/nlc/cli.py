"""Command-line entry point ``nlc``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import defaults_text, load_config
from .sweep import SweepConfig, sweep_lambda


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config) if args.config else SweepConfig()
    report = sweep_lambda(cfg, args.out, jobs=args.jobs)
    for q, e in report.fitted_slopes.items():
        print(f"{q:18s} slope {e['slope']:+.3f} +- {e['stderr']:.3f}  (expected {e['expected']:+.0f}, {e['n_points']} points)")
    for lam, msg in report.failed.items():
        print(f"lambda {lam:g} failed: {msg}", file=sys.stderr)
    return 1 if report.failed else 0


def _cmd_identities(args) -> int:
    from .identities import energy_law_residuals, stress_identity_discrepancy

    ok = True
    print("stress identity (relative L2 discrepancy)")
    for m in sorted({max(16, args.grid // 2), args.grid, 2 * args.grid}):
        d = stress_identity_discrepancy(m)
        print(f"  {m:4d}^2  {d:.3e}")
    d = stress_identity_discrepancy(args.grid)
    ok &= d <= args.tol
    print("energy laws (|budget residual| at t_end)")
    rows = energy_law_residuals(args.grid, dts=tuple(args.dt), t_end=args.t_end)
    for r in rows:
        print(f"  {r.system:15s} dt={r.dt:.1e}  residual {r.residual:.3e}  unit drift {r.max_drift:.1e}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def _cmd_contraction(args) -> int:
    from .imex import StepControl
    from .picard import picard_iterate
    from .spectral import Grid
    from .state import ModelParams, baseline, well_prepared_initial_data

    g = Grid((args.grid, args.grid))
    out = Path(args.out)
    first = True
    for lam in args.lam:
        params = ModelParams(lam=lam)
        u0, n0 = baseline(g)
        U0 = well_prepared_initial_data(g, params, args.delta0, args.seed, u0, n0)
        for T0 in args.T0:
            ctl = StepControl(T0 / args.steps, T0, renormalize_director=False)
            _, rep = picard_iterate(U0, T0, args.kmax, ctl, args.tol)
            rep.write_csv(out, append=not first)
            first = False
            print(f"T0={T0:g} lambda={lam:g}: {rep.iterates} iterations, tau~{rep.tau_estimate:.3e}, converged={rep.converged}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlc", description="Compressible nematic liquid-crystal flow and its low Mach limit.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser(
        "sweep-lambda",
        help="run the lambda sweep and fit convergence rates",
        description=f"YAML config keys and defaults: {defaults_text()}",
    )
    sp.add_argument("--config", help="YAML config file (default: built-in defaults)")
    sp.add_argument("--out", required=True, help="output directory for rates.csv, slopes.csv and observer CSVs")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")
    sp.set_defaults(func=_cmd_sweep)

    vi = sub.add_parser("verify-identities", help="stress identity and energy-law checks")
    vi.add_argument("--grid", type=int, default=64, help="grid size per axis (default: 64)")
    vi.add_argument("--tol", type=float, default=1e-10, help="stress identity tolerance (default: 1e-10)")
    vi.add_argument("--dt", type=float, nargs="+", default=[4e-4, 2e-4, 1e-4], help="time steps (default: 4e-4 2e-4 1e-4)")
    vi.add_argument("--t-end", type=float, default=0.1, help="final time (default: 0.1)")
    vi.set_defaults(func=_cmd_identities)

    cc = sub.add_parser("check-contraction", help="Picard contraction probe; writes T0,lambda,iter,diff_metric,ratio")
    cc.add_argument("--out", required=True, help="CSV output path")
    cc.add_argument("--T0", type=float, nargs="+", default=[0.02, 0.01], help="horizons (default: 0.02 0.01)")
    cc.add_argument("--lam", type=float, nargs="+", default=[10.0], help="lambda values (default: 10)")
    cc.add_argument("--grid", type=int, default=64, help="grid size per axis (default: 64)")
    cc.add_argument("--steps", type=int, default=50, help="time steps per horizon (default: 50)")
    cc.add_argument("--kmax", type=int, default=20, help="maximum iterations (default: 20)")
    cc.add_argument("--tol", type=float, default=1e-16, help="stop when the metric drops below this (default: 1e-16)")
    cc.add_argument("--delta0", type=float, default=0.05, help="data size (default: 0.05)")
    cc.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    cc.set_defaults(func=_cmd_contraction)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
