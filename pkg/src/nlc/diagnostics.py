"""Energy functionals, modulated energy, energy-budget observers and rate fits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .compressible import _Ops, director_tension
from .spectral import Grid
from .state import CompressibleState, IncompressibleState, PreconditionError


@dataclass(frozen=True)
class EnergyFunctionals:
    e_s: float
    e_s_tilde: float
    f_s: float
    f_s_tilde: float
    s: int


@dataclass(frozen=True)
class ModulatedEnergy:
    velocity_part: float
    director_l2: float
    director_grad: float
    pi_lambda: float

    @property
    def total(self) -> float:
        return self.velocity_part + self.director_l2 + self.director_grad + self.pi_lambda


def _deriv_fields(g: Grid, a_hat: np.ndarray, alphas):
    for alpha in alphas:
        yield g.ifft(g.deriv_hat(a_hat, alpha))


def energy_functionals(state: CompressibleState, s: int = 3) -> EnergyFunctionals:
    """E_s, E~_s, F_s and F~_s summed over multi-indices.

    The untilded functionals are evaluated from Fourier coefficients; the tilded
    ones need pointwise weights (P'(rho)/rho for the density, rho for the
    velocity) and are integrated from physical-space derivative fields.
    """
    g, p = state.grid, state.params
    rho = state.rho.values
    sig_hat = g.fft(rho - 1.0)
    u_hat = g.fft(state.u.values)
    n_hat = g.fft(state.n.values)
    lam2 = p.lam**2
    w = g.sobolev_weight(s)

    rho_part = lam2 * g.l2_sq_hat(sig_hat, w)
    u_part = g.l2_sq_hat(u_hat, w)
    n_part = g.l2_sq_hat(n_hat, w)
    # sum_{|beta| <= s-1} |grad d^beta n|^2 = (w_s - 1) in Fourier space
    n_grad_part = g.l2_sq_hat(n_hat, w - 1.0) if s >= 1 else 0.0
    e_s = 0.5 * (rho_part + u_part + n_part)
    f_s = 0.5 * (rho_part + u_part + n_grad_part)

    weight_rho = lam2 * p.law.p_prime(rho) / rho
    alphas = g.multi_indices(s)
    rho_t = sum(g.integral(weight_rho * d**2) for d in _deriv_fields(g, sig_hat, alphas))
    u_t = sum(float(np.sum(g.integral(rho * d**2))) for d in _deriv_fields(g, u_hat, alphas))
    e_s_tilde = 0.5 * (rho_t + u_t + n_part)
    f_s_tilde = 0.5 * (rho_t + u_t + n_grad_part)
    return EnergyFunctionals(float(e_s), float(e_s_tilde), float(f_s), float(f_s_tilde), s)


def pi_density(state: CompressibleState) -> np.ndarray:
    """lam^2 [Q(rho) - P(1)(rho - 1)] pointwise."""
    law, rho = state.params.law, state.rho.values
    return state.params.lam**2 * (law.q(rho) - law.p(1.0) * (rho - 1.0))


def modulated_energy(comp: CompressibleState, incomp: IncompressibleState, time_tol: float = 1e-9) -> ModulatedEnergy:
    if comp.grid != incomp.grid:
        raise PreconditionError("modulated energy needs both states on one grid")
    if abs(comp.time - incomp.time) > time_tol * max(1.0, abs(comp.time)):
        raise PreconditionError(f"time mismatch: {comp.time} vs {incomp.time}")
    g, nu = comp.grid, comp.params.nu
    rho = comp.rho.values
    dv = np.sqrt(rho) * comp.u.values - incomp.u.values
    dn = comp.n.values - incomp.n.values
    dn_hat = g.fft(dn)
    grad_sq = g.l2_sq_hat(dn_hat, g.k2_odd)
    return ModulatedEnergy(
        velocity_part=0.5 * float(np.sum(g.integral(dv**2))),
        director_l2=0.5 * nu * float(np.sum(g.integral(dn**2))),
        director_grad=0.5 * nu * grad_sq,
        pi_lambda=float(g.integral(pi_density(comp))),
    )


# energy budgets --------------------------------------------------------------


def _grad_sq(g: Grid, a_hat: np.ndarray) -> float:
    return g.l2_sq_hat(a_hat, g.k2_odd)


def compressible_energy_parts(state: CompressibleState) -> dict:
    g, p = state.grid, state.params
    rho, u = state.rho.values, state.u.values
    n_hat = g.fft(state.n.values)
    kinetic = 0.5 * float(np.sum(g.integral(rho * u**2)))
    elastic = 0.5 * p.nu * _grad_sq(g, n_hat)
    acoustic = p.lam**2 * float(g.integral(p.law.q(rho)))
    pi = float(g.integral(pi_density(state)))
    return {"kinetic": kinetic, "elastic": elastic, "acoustic": acoustic, "pi": pi}


def _tension_sq(g: Grid, n: np.ndarray, dealias: bool = True) -> float:
    ops = _Ops(g, dealias)
    h = director_tension(ops, n, g.fft(n))
    return float(np.sum(g.integral(h**2)))


def compressible_dissipation_rate(state: CompressibleState, dealias: bool = True) -> float:
    g, p = state.grid, state.params
    u_hat = g.fft(state.u.values)
    div_hat = g.div_hat(u_hat)
    return (
        p.mu * _grad_sq(g, u_hat)
        + (p.kappa + p.mu) * g.l2_sq_hat(div_hat)
        + p.nu * p.theta * _tension_sq(g, state.n.values, dealias)
    )


def incompressible_energy(state: IncompressibleState) -> tuple[float, float]:
    g, p = state.grid, state.params
    kinetic = 0.5 * float(np.sum(g.integral(state.u.values**2)))
    elastic = 0.5 * p.nu * _grad_sq(g, g.fft(state.n.values))
    return kinetic, elastic


def incompressible_dissipation_rate(state: IncompressibleState, dealias: bool = True) -> float:
    g, p = state.grid, state.params
    return p.mu * _grad_sq(g, g.fft(state.u.values)) + p.nu * p.theta * _tension_sq(g, state.n.values, dealias)


def max_unit_defect(n: np.ndarray) -> float:
    return float(np.max(np.abs(np.sqrt(np.sum(n**2, axis=0)) - 1.0)))


COMPRESSIBLE_COLUMNS = (
    "t",
    "mass",
    "kinetic",
    "elastic",
    "acoustic",
    "dissipation_cum",
    "energy_residual",
    "unit_drift",
    "max_rho_dev",
)
INCOMPRESSIBLE_COLUMNS = ("t", "kinetic", "elastic", "dissipation_cum", "energy_residual", "div_u_max", "unit_drift")


@dataclass
class _Budget:
    """Trapezoidal accumulation of a dissipation rate between observer calls."""

    rows: list = field(default_factory=list)
    _last_t: float | None = None
    _last_rate: float = 0.0
    _cum: float = 0.0
    _e0: float | None = None

    def _accumulate(self, t: float, rate: float, energy: float) -> tuple[float, float]:
        if self._last_t is not None:
            self._cum += 0.5 * (t - self._last_t) * (rate + self._last_rate)
        else:
            self._e0 = energy
        self._last_t, self._last_rate = t, rate
        return self._cum, energy + self._cum - self._e0

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(row[c]) for c in self.columns])

    @property
    def residual(self) -> float:
        return self.rows[-1]["energy_residual"]


class CompressibleEnergyObserver(_Budget):
    """Tracks the energy identity: kinetic + elastic + int Pi + accumulated dissipation = const.

    The dissipation integral is a trapezoid rule over the observer's call times,
    so budget checks should use stride 1.
    """

    columns = COMPRESSIBLE_COLUMNS

    def __init__(self, dealias: bool = True):
        super().__init__()
        self.dealias = dealias

    def __call__(self, index: int, state: CompressibleState) -> None:
        parts = compressible_energy_parts(state)
        rate = compressible_dissipation_rate(state, self.dealias)
        energy = parts["kinetic"] + parts["elastic"] + parts["pi"]
        cum, resid = self._accumulate(state.time, rate, energy)
        n = state.n.values
        self.rows.append(
            {
                "t": state.time,
                "mass": float(state.grid.integral(state.rho.values)),
                "kinetic": parts["kinetic"],
                "elastic": parts["elastic"],
                "acoustic": parts["acoustic"],
                "dissipation_cum": cum,
                "energy_residual": resid,
                "unit_drift": max(state.drift, max_unit_defect(n)),
                "max_rho_dev": float(np.max(np.abs(state.rho.values - 1.0))),
            }
        )


class IncompressibleEnergyObserver(_Budget):
    columns = INCOMPRESSIBLE_COLUMNS

    def __init__(self, dealias: bool = True):
        super().__init__()
        self.dealias = dealias

    def __call__(self, index: int, state: IncompressibleState) -> None:
        g = state.grid
        kinetic, elastic = incompressible_energy(state)
        rate = incompressible_dissipation_rate(state, self.dealias)
        cum, resid = self._accumulate(state.time, rate, kinetic + elastic)
        div = g.ifft(g.div_hat(g.fft(state.u.values)))
        self.rows.append(
            {
                "t": state.time,
                "kinetic": kinetic,
                "elastic": elastic,
                "dissipation_cum": cum,
                "energy_residual": resid,
                "div_u_max": float(np.max(np.abs(div))),
                "unit_drift": max(state.drift, max_unit_defect(state.n.values)),
            }
        )


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


# rate fitting ----------------------------------------------------------------


def fit_rate(points) -> tuple[float, float]:
    """Least-squares slope of log(error) against log(lambda), with its standard error."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a rate fit, got {len(pts)}")
    lam = np.array([float(a) for a, _ in pts])
    err = np.array([float(b) for _, b in pts])
    if np.any(err <= 0) or np.any(lam <= 0):
        raise ValueError("rate fit needs positive lambdas and errors")
    x, y = np.log(lam), np.log(err)
    xm = x - x.mean()
    sxx = float(np.dot(xm, xm))
    if sxx == 0:
        raise ValueError("rate fit needs at least two distinct lambdas")
    slope = float(np.dot(xm, y - y.mean()) / sxx)
    resid = y - (y.mean() + slope * xm)
    dof = len(pts) - 2
    stderr = math.sqrt(float(np.dot(resid, resid)) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr


def observed_order(errors, ratio: float = 2.0) -> list[float]:
    """Observed convergence orders from successive errors at step sizes h, h/ratio, ..."""
    e = [abs(x) for x in errors]
    return [math.log(a / b) / math.log(ratio) for a, b in zip(e[:-1], e[1:])]
