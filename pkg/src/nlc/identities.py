"""Standalone checks of the stress identity and the discrete energy laws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compressible import ericksen_stress_div, ericksen_stress_div_tensor_form, run
from .diagnostics import CompressibleEnergyObserver, IncompressibleEnergyObserver
from .imex import StepControl
from .incompressible import run_incompressible
from .spectral import DirectorField, Grid
from .state import ModelParams, baseline, incompressible_from, well_prepared_initial_data

TEST_DIRECTOR_AMPLITUDE = 2.0


def spherical_director(grid: Grid, amplitude: float = TEST_DIRECTOR_AMPLITUDE) -> DirectorField:
    """A smooth, genuinely three-component unit field (polar and azimuthal angles both vary)."""
    x = grid.mesh()
    a, b = (2 * np.pi / L for L in grid.length[:2])
    polar = 1.0 + amplitude * np.sin(a * x[0]) * np.cos(b * x[1])
    azim = amplitude * (np.cos(a * x[0]) + np.sin(2 * b * x[1]))
    if grid.dim == 3:
        c = 2 * np.pi / grid.length[2]
        polar = polar + 0.5 * amplitude * np.sin(c * x[2])
    return DirectorField(grid, np.stack([np.sin(polar) * np.cos(azim), np.sin(polar) * np.sin(azim), np.cos(polar)]))


def stress_identity_discrepancy(m: int, dim: int = 2, amplitude: float = TEST_DIRECTOR_AMPLITUDE) -> float:
    """Relative L2 gap between sum_i lap n_i grad n_i and div(grad n (.) grad n - |grad n|^2/2 I)."""
    g = Grid((m,) * dim)
    n = spherical_director(g, amplitude)
    a = ericksen_stress_div(n).values
    b = ericksen_stress_div_tensor_form(n).values
    return float(np.sqrt(np.sum((a - b) ** 2) / np.sum(b**2)))


@dataclass(frozen=True)
class EnergyLawResult:
    system: str
    dt: float
    residual: float
    max_drift: float


def energy_law_residuals(m: int, dts=(4e-4, 2e-4, 1e-4), lam: float = 10.0, t_end: float = 0.1, seed: int = 0):
    """Energy-budget residuals at t_end for both systems, one entry per dt."""
    g = Grid((m, m))
    params = ModelParams(lam=lam)
    u0, n0 = baseline(g)
    comp0 = well_prepared_initial_data(g, params, 0.05, seed, u0, n0)
    inc0 = incompressible_from(u0, n0, params)
    out = []
    for dt in dts:
        ctl = StepControl(dt, t_end)
        ob = CompressibleEnergyObserver()
        run(comp0, ctl, [ob], keep_trajectory=False)
        out.append(EnergyLawResult("compressible", dt, abs(ob.residual), max(r["unit_drift"] for r in ob.rows)))
        ob = IncompressibleEnergyObserver()
        run_incompressible(inc0, ctl, [ob], keep_trajectory=False)
        out.append(EnergyLawResult("incompressible", dt, abs(ob.residual), max(r["unit_drift"] for r in ob.rows)))
    return out
