"""Incompressible limit: projected Navier-Stokes coupled to harmonic map heat flow."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .compressible import Observer, RunError, _Ops, stress_div_array
from .imex import BlowUpError, Integrator, StepControl, StepSizeError, renormalize_hat, unit_defect_hat
from .spectral import DirectorField, Grid, ScalarField, VectorField, leray_hat
from .state import IncompressibleState, ModelParams, PreconditionError

DIV_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class IncompressibleRHS:
    d_u: VectorField
    d_n: DirectorField


def _div_max(g: Grid, u_hat: np.ndarray) -> float:
    return float(np.max(np.abs(g.ifft(g.div_hat(u_hat)))))


def _require_solenoidal(state: IncompressibleState, tol: float = DIV_TOL):
    g = state.grid
    d = _div_max(g, g.fft(state.u.values))
    if d > tol:
        raise PreconditionError(f"velocity is not divergence-free: max|div u| = {d:.3e}")


def eval_rhs_incompressible(state: IncompressibleState, dealias: bool = True) -> IncompressibleRHS:
    """d_u = P[-(u.grad)u + mu lap u - nu sum_i lap n_i grad n_i]; the gradient part goes to the pressure."""
    _require_solenoidal(state)
    g, p = state.grid, state.params
    ops = _Ops(g, dealias)
    u, n = state.u.values, state.n.values
    u_hat, n_hat = g.fft(u), g.fft(n)
    adv = np.einsum("j...,ij...->i...", u, ops.grad(u_hat))
    f_hat = ops.product(-adv) - p.mu * g.k2 * u_hat - p.nu * g.fft(stress_div_array(ops, n_hat))
    d_u = g.ifft(leray_hat(g, f_hat))

    grad_n = ops.grad(n_hat)
    gn2 = np.sum(grad_n**2, axis=(0, 1))
    d_n = -np.einsum("j...,cj...->c...", u, grad_n) + p.theta * gn2 * n
    d_n = g.ifft(ops.product(d_n) - p.theta * g.k2 * n_hat)
    return IncompressibleRHS(VectorField(g, d_u), DirectorField(g, d_n))


def pressure_hat_source(state: IncompressibleState, dealias: bool = True) -> np.ndarray:
    """Spectrum of F = (u.grad)u + nu sum_i lap n_i grad n_i, whose divergence drives the pressure."""
    g, p = state.grid, state.params
    ops = _Ops(g, dealias)
    u, n = state.u.values, state.n.values
    u_hat, n_hat = g.fft(u), g.fft(n)
    adv = np.einsum("j...,ij...->i...", u, ops.grad(u_hat))
    return ops.product(adv) + p.nu * g.fft(stress_div_array(ops, n_hat))


def recover_pressure(state: IncompressibleState, dealias: bool = True) -> ScalarField:
    """Pressure of the limit system, mean zero.

    First solves ``-lap q = div F`` for the modified pressure ``q`` (the one that
    balances sum_i lap n_i grad n_i), then returns ``p = q - nu |grad n|^2 / 2``
    shifted to zero mean.
    """
    g = state.grid
    q = g.ifft(modified_pressure_hat(state, dealias))
    n_hat = g.fft(state.n.values)
    gn2 = np.sum(g.ifft(g.grad_hat(n_hat)) ** 2, axis=(0, 1))
    p = q - 0.5 * state.params.nu * gn2
    return ScalarField(g, p - np.mean(p))


def modified_pressure_hat(state: IncompressibleState, dealias: bool = True) -> np.ndarray:
    g = state.grid
    rhs = g.div_hat(pressure_hat_source(state, dealias))
    k2 = g.k2
    q_hat = np.divide(rhs, k2, out=np.zeros_like(rhs), where=k2 > 0)
    return q_hat


class IncompressibleSystem:
    """Packed unknowns [u_1..u_d, n_1..n_3]; Laplacians implicit, velocity kept solenoidal."""

    def __init__(self, grid: Grid, params: ModelParams, ctl: StepControl):
        self.g, self.p, self.ctl = grid, params, ctl
        self.ops = _Ops(grid, ctl.dealias)
        self.dim = grid.dim
        self.div_history: list[float] = []

    def pack(self, state: IncompressibleState) -> np.ndarray:
        return self.g.fft(np.concatenate([state.u.values, state.n.values]))

    def unpack(self, X, t, drift=0.0, with_pressure=False) -> IncompressibleState:
        arr = self.g.ifft(X)
        d = self.dim
        st = IncompressibleState(t, VectorField(self.g, arr[:d]), DirectorField(self.g, arr[d:]), None, self.p, drift)
        if with_pressure:
            st = IncompressibleState(t, st.u, st.n, recover_pressure(st, self.ctl.dealias), self.p, drift)
        return st

    def linear(self, X):
        d = self.dim
        Lu = -self.p.mu * self.g.k2 * X[:d]
        Ln = -self.p.theta * self.g.k2 * X[d:]
        return np.concatenate([Lu, Ln])

    def solve(self, alpha, dt, R):
        g, d = self.g, self.dim
        u = leray_hat(g, R[:d]) / (alpha + dt * self.p.mu * g.k2)
        n = R[d:] / (alpha + dt * self.p.theta * g.k2)
        return np.concatenate([u, n])

    def explicit(self, X, t, index):
        g, p, ops, d = self.g, self.p, self.ops, self.dim
        u_hat, n_hat = X[:d], X[d:]
        phys = g.ifft(X)
        u, n = phys[:d], phys[d:]
        adv = np.einsum("j...,ij...->i...", u, ops.grad(u_hat))
        f = -adv - p.nu * stress_div_array(ops, n_hat)
        N_u = leray_hat(g, ops.product(f))
        grad_n = ops.grad(n_hat)
        gn2 = np.sum(grad_n**2, axis=(0, 1))
        N_n = ops.product(-np.einsum("j...,cj...->c...", u, grad_n) + p.theta * gn2 * n)
        return np.concatenate([N_u, N_n])

    def post_step(self, X):
        if not self.ctl.renormalize_director:
            return X, 0.0
        d = self.dim
        n_hat, drift = renormalize_hat(self.g, X[d:])
        X = X.copy()
        X[d:] = n_hat
        return X, drift

    def check(self, X, t):
        dmax = _div_max(self.g, X[: self.dim])
        self.div_history.append(dmax)
        if dmax > DIV_TOL:
            raise BlowUpError(t, f"divergence constraint lost at t = {t:.6g}: {dmax:.3e}")


class IncompressibleIntegrator:
    def __init__(self, initial: IncompressibleState, ctl: StepControl):
        _require_solenoidal(initial)
        if ctl.scheme == "explicit_rk4_reference":
            kmax2 = float(np.max(initial.grid.k2))
            bound = 2.5 / (max(initial.params.mu, initial.params.theta) * kmax2)
            if ctl.dt > bound:
                raise StepSizeError(f"explicit reference needs dt <= {bound:.3g}, got {ctl.dt}")
        self.system = IncompressibleSystem(initial.grid, initial.params, ctl)
        self.integrator = Integrator(self.system, ctl)
        self.X = self.system.pack(initial)
        self.t = initial.time
        self.state = initial

    def advance(self, with_pressure: bool = False) -> IncompressibleState:
        self.X = self.integrator.advance(self.X, self.t)
        self.t = self.t + self.integrator.ctl.dt
        d = self.system.dim
        drift = (
            self.integrator.last_drift
            if self.integrator.ctl.renormalize_director
            else unit_defect_hat(self.system.g, self.X[d:])
        )
        self.state = self.system.unpack(self.X, self.t, drift, with_pressure)
        return self.state


def step_incompressible(state: IncompressibleState, ctl: StepControl) -> IncompressibleState:
    return IncompressibleIntegrator(state, ctl).advance()


def run_incompressible(
    initial: IncompressibleState,
    ctl: StepControl,
    observers: Sequence[Observer] = (),
    stride: int = 1,
    keep_trajectory: bool = True,
    with_pressure: bool = False,
) -> list[IncompressibleState]:
    nsteps = ctl.nsteps
    traj = [initial]
    for ob in observers:
        ob(0, initial)
    if nsteps == 0:
        return traj
    it = IncompressibleIntegrator(initial, ctl)
    for i in range(1, nsteps + 1):
        keep = i % stride == 0 or i == nsteps
        try:
            st = it.advance(with_pressure and keep)
        except (BlowUpError, StepSizeError) as exc:
            raise RunError(i, it.t + ctl.dt, exc) from exc
        if keep:
            for ob in observers:
                ob(i, st)
            if keep_trajectory:
                traj.append(st)
    if not keep_trajectory:
        traj.append(it.state)
    return traj
