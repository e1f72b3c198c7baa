"""Lambda sweep: compressible runs from well-prepared data against one incompressible reference."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .compressible import CompressibleIntegrator, RunError
from .diagnostics import (
    CompressibleEnergyObserver,
    IncompressibleEnergyObserver,
    fit_rate,
    modulated_energy,
)
from .imex import BlowUpError, StepControl, StepSizeError
from .incompressible import IncompressibleIntegrator
from .spectral import Grid
from .state import (
    IncompressibleState,
    ModelParams,
    PERTURB_MODES,
    DegeneracyError,
    DomainError,
    PreconditionError,
    RegimeError,
    baseline,
    well_prepared_initial_data,
)

log = logging.getLogger(__name__)

QUANTITIES = ("E_combined", "rho_weighted", "grad_rho_hs2", "time_integrated_u", "time_integrated_n")
EXPECTED_SLOPES = {
    "E_combined": -1.0,
    "rho_weighted": -1.0,
    "grad_rho_hs2": -4.0,
    "time_integrated_u": -1.0,
    "time_integrated_n": -1.0,
}
RATES_COLUMNS = ("lambda",) + QUANTITIES
SLOPES_COLUMNS = ("quantity", "slope", "stderr", "ci_low", "ci_high", "expected", "n_points", "excluded")
FLOOR_FACTOR = 10.0
ACOUSTIC_CFL = 0.1


@dataclass(frozen=True)
class SweepConfig:
    lambdas: tuple[float, ...] = (10.0, 20.0, 40.0, 80.0, 160.0)
    sizes: tuple[int, ...] = (64, 64)
    t_end: float = 0.1
    dt: float | None = None
    delta0: float = 0.05
    seed: int = 0
    s: int = 3
    gamma: float = 2.0
    mu: float = 1.0
    kappa: float = 0.0
    nu: float = 1.0
    theta: float = 1.0
    profile: str = "taylor_green"
    scheme: str = "imex_bdf2"
    floor_probe: bool = True

    def params(self, lam: float) -> ModelParams:
        return ModelParams(self.mu, self.kappa, self.nu, self.theta, float(lam), self.gamma, len(self.sizes))

    def step_size(self) -> float:
        """Common dt: resolves the fastest seeded acoustic mode of the largest lambda."""
        if self.dt is not None:
            return self.dt
        c = math.sqrt(self.gamma)
        kac = PERTURB_MODES * math.sqrt(len(self.sizes))
        omega = max(self.lambdas) * c * kac
        nsteps = max(1, math.ceil(self.t_end * omega / ACOUSTIC_CFL))
        return self.t_end / nsteps


@dataclass
class RateReport:
    lambdas: list[float]
    # one entry per requested lambda, in order; None marks a failed run
    rows: list[dict | None] = field(default_factory=list)
    errors: dict[float, dict] = field(default_factory=dict)
    fitted_slopes: dict[str, dict] = field(default_factory=dict)
    expected_slopes: dict[str, float] = field(default_factory=lambda: dict(EXPECTED_SLOPES))
    failed: dict[float, str] = field(default_factory=dict)
    floor: dict[str, float] = field(default_factory=dict)
    modulated_min: dict[float, float] = field(default_factory=dict)
    pi0: dict[float, float] = field(default_factory=dict)
    rho0_dev_sq: dict[float, float] = field(default_factory=dict)

    def slope(self, q: str) -> float:
        return self.fitted_slopes[q]["slope"]


# single-lambda comparison ------------------------------------------------------


def _sq(g: Grid, a: np.ndarray, s: int) -> float:
    return g.l2_sq_hat(g.fft(a), g.sobolev_weight(s))


def _norms(comp, inc, s):
    g, lam = comp.grid, comp.params.lam
    sig = comp.rho.values - 1.0
    du = comp.u.values - inc.u.values
    dn = comp.n.values - inc.n.values
    grad_sig = g.ifft(g.grad_hat(g.fft(sig)))
    return {
        "rho_weighted": lam * _sq(g, sig, s),
        "u_l2": _sq(g, du, 0),
        "n_h2": _sq(g, dn, 2),
        "grad_rho_hs2": _sq(g, grad_sig, s - 2),
        "u_h1": _sq(g, du, 1),
        "n_h3": _sq(g, dn, 3),
    }


def compare_run(cfg: SweepConfig, lam: float, sizes=None, out_dir: Path | None = None) -> dict:
    """Run compressible (lam) and incompressible solvers side by side; return error measures."""
    grid = Grid(tuple(sizes or cfg.sizes))
    params = cfg.params(lam)
    u0, n0 = baseline(grid, cfg.profile)
    comp0 = well_prepared_initial_data(grid, params, cfg.delta0, cfg.seed, u0, n0, cfg.s)
    inc0 = IncompressibleState(0.0, u0, n0, None, params)
    ctl = StepControl(cfg.step_size(), cfg.t_end, cfg.scheme)

    cobs, iobs = CompressibleEnergyObserver(), IncompressibleEnergyObserver()
    cobs(0, comp0)
    iobs(0, inc0)
    nrm = _norms(comp0, inc0, cfg.s)
    integrand = [nrm["u_h1"], nrm["n_h3"]]
    tint = [0.0, 0.0]
    me0 = modulated_energy(comp0, inc0)
    me_min = min(me0.velocity_part, me0.director_l2, me0.director_grad, me0.pi_lambda)

    cint, iint = CompressibleIntegrator(comp0, ctl), IncompressibleIntegrator(inc0, ctl)
    comp, inc = comp0, inc0
    for i in range(1, ctl.nsteps + 1):
        comp = cint.advance()
        inc = iint.advance()
        cobs(i, comp)
        iobs(i, inc)
        nrm = _norms(comp, inc, cfg.s)
        new = [nrm["u_h1"], nrm["n_h3"]]
        tint = [a + 0.5 * ctl.dt * (b + c) for a, b, c in zip(tint, integrand, new)]
        integrand = new
        me = modulated_energy(comp, replace(inc, time=comp.time))
        me_min = min(me_min, me.velocity_part, me.director_l2, me.director_grad, me.pi_lambda)

    if out_dir is not None:
        tag = _tag(lam)
        cobs.write_csv(out_dir / f"observer_compressible_lambda_{tag}.csv")
        iobs.write_csv(out_dir / f"observer_incompressible_lambda_{tag}.csv")

    return {
        "E_combined": nrm["rho_weighted"] + nrm["u_l2"] + nrm["n_h2"],
        "rho_weighted": nrm["rho_weighted"],
        "grad_rho_hs2": nrm["grad_rho_hs2"],
        "time_integrated_u": tint[0],
        "time_integrated_n": tint[1],
        "u_l2": nrm["u_l2"],
        "n_h2": nrm["n_h2"],
        "modulated_min": me_min,
        "pi0": me0.pi_lambda,
        "rho0_dev_sq": _sq(grid, comp0.rho.values - 1.0, 0),
        "energy_residual": cobs.residual,
        "mass_drift": abs(cobs.rows[-1]["mass"] - cobs.rows[0]["mass"]) / cobs.rows[0]["mass"],
    }


def _tag(lam: float) -> str:
    return repr(float(lam)).replace(".", "p")


def _safe_compare(args):
    cfg, lam, sizes, out_dir = args
    try:
        return compare_run(cfg, lam, sizes, out_dir), None
    except (RunError, BlowUpError, RegimeError, StepSizeError, DegeneracyError, DomainError, PreconditionError) as exc:
        return None, str(exc)


# the sweep ---------------------------------------------------------------------


def sweep_lambda(cfg: SweepConfig, out_dir=None, jobs: int = 1) -> RateReport:
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    lambdas = [float(x) for x in cfg.lambdas]
    tasks = [(cfg, lam, None, out) for lam in lambdas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_safe_compare, tasks))
    else:
        results = [_safe_compare(t) for t in tasks]

    report = RateReport(lambdas)
    for lam, (res, err) in zip(lambdas, results):
        report.rows.append(res)
        if err is not None:
            report.failed[lam] = err
            log.warning("lambda = %g failed: %s", lam, err)
            continue
        report.errors[lam] = res
        report.modulated_min[lam] = res["modulated_min"]
        report.pi0[lam] = res["pi0"]
        report.rho0_dev_sq[lam] = res["rho0_dev_sq"]

    ok = [lam for lam in lambdas if lam in report.errors]
    excluded = {q: [] for q in QUANTITIES}
    if cfg.floor_probe and ok:
        top = max(ok)
        fine_sizes = tuple(2 * m for m in cfg.sizes)
        fine, err = _safe_compare((cfg, top, fine_sizes, None))
        if fine is not None:
            for q in QUANTITIES:
                report.floor[q] = abs(report.errors[top][q] - fine[q])
                if report.errors[top][q] < FLOOR_FACTOR * report.floor[q]:
                    excluded[q].append(top)

    for q in QUANTITIES:
        pts = [(lam, row[q]) for lam, row in zip(lambdas, report.rows) if row is not None and lam not in excluded[q]]
        distinct = {lam for lam, _ in pts}
        entry = {"expected": EXPECTED_SLOPES[q], "n_points": len(pts), "excluded": excluded[q]}
        if len(pts) >= 3 and len(distinct) >= 2 and all(e > 0 for _, e in pts):
            slope, se = fit_rate(pts)
            entry.update(slope=slope, stderr=se, ci_low=slope - 2 * se, ci_high=slope + 2 * se)
        else:
            entry.update(slope=float("nan"), stderr=float("nan"), ci_low=float("nan"), ci_high=float("nan"))
        report.fitted_slopes[q] = entry

    if out is not None:
        write_rates_csv(report, out / "rates.csv")
        write_slopes_csv(report, out / "slopes.csv")
    return report


def write_rates_csv(report: RateReport, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATES_COLUMNS)
        for lam, row in zip(report.lambdas, report.rows):
            vals = [repr(float(row[q])) if row else "nan" for q in QUANTITIES]
            w.writerow([repr(float(lam))] + vals)


def write_slopes_csv(report: RateReport, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLOPES_COLUMNS)
        for q in QUANTITIES:
            e = report.fitted_slopes[q]
            w.writerow(
                [q]
                + [repr(float(e[k])) for k in ("slope", "stderr", "ci_low", "ci_high", "expected")]
                + [e["n_points"], ";".join(repr(float(x)) for x in e["excluded"])]
            )
