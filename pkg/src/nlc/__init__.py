"""Compressible nematic liquid-crystal flow on the periodic torus and its incompressible limit."""

from .spectral import DirectorField, Grid, ScalarField, VectorField
from .state import CompressibleState, IncompressibleState, ModelParams, PressureLaw, well_prepared_initial_data
from .imex import StepControl
from .compressible import eval_rhs_conservative, eval_rhs_nonconservative, run, step
from .incompressible import eval_rhs_incompressible, recover_pressure, run_incompressible, step_incompressible
from .picard import LinearizationInput, linearized_step, picard_iterate
from .diagnostics import energy_functionals, fit_rate, modulated_energy
from .snapshot import read_snapshot, write_snapshot
from .sweep import SweepConfig, sweep_lambda

__all__ = [
    "CompressibleState",
    "DirectorField",
    "Grid",
    "IncompressibleState",
    "LinearizationInput",
    "ModelParams",
    "PressureLaw",
    "ScalarField",
    "StepControl",
    "SweepConfig",
    "VectorField",
    "energy_functionals",
    "eval_rhs_conservative",
    "eval_rhs_incompressible",
    "eval_rhs_nonconservative",
    "fit_rate",
    "linearized_step",
    "modulated_energy",
    "picard_iterate",
    "read_snapshot",
    "recover_pressure",
    "run",
    "run_incompressible",
    "step",
    "step_incompressible",
    "sweep_lambda",
    "well_prepared_initial_data",
    "write_snapshot",
]
