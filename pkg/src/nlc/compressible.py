"""Compressible penalised liquid-crystal flow: right sides and IMEX time stepping.

Unknowns are (sigma, u, n) with sigma = rho - 1.  The implicit part is the
acoustic pair linearised about rho = 1 (``lam^2 P'(1) grad sigma`` and
``div u``) together with all viscous and diffusive Laplacians; it is solved
exactly per Fourier mode.  Everything else is explicit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .imex import (
    BlowUpError,
    Integrator,
    StepControl,
    StepSizeError,
    renormalize_hat,
    unit_defect_hat,
)
from .spectral import DirectorField, Grid, ScalarField, VectorField
from .state import CompressibleState, ModelParams, RegimeError, check_regime

log = logging.getLogger(__name__)

RK4_SAFETY = 2.0
REMAINDER_SAFETY = 2.0


@dataclass(frozen=True, eq=False)
class CompressibleRHS:
    d_rho: ScalarField
    d_u: VectorField
    d_n: DirectorField


# shared spectral helpers -----------------------------------------------------


class _Ops:
    """Derivative and product helpers on one grid, with optional dealiasing."""

    def __init__(self, grid: Grid, dealias: bool = True):
        self.g = grid
        self.mask = grid.dealias_mask if dealias else None

    def proj(self, a_hat):
        return a_hat * self.mask if self.mask is not None else a_hat

    def grad(self, a_hat):
        """(..., *spec) -> (..., dim, *shape) real gradient."""
        return self.g.ifft(self.g.grad_hat(a_hat))

    def lap(self, a_hat):
        return self.g.ifft(-self.g.k2 * a_hat)

    def product(self, a):
        """Dealiased spectrum of a pointwise product already formed in physical space."""
        return self.proj(self.g.fft(a))


def stress_div_array(ops: _Ops, n_hat: np.ndarray) -> np.ndarray:
    """sum_i lap(n_i) grad(n_i), dealiased, in physical space."""
    grad_n = ops.grad(n_hat)  # (3, dim, ...)
    lap_n = ops.lap(n_hat)  # (3, ...)
    prod = np.einsum("i...,ij...->j...", lap_n, grad_n)
    return ops.g.ifft(ops.product(prod))


def stress_tensor_div_array(ops: _Ops, n_hat: np.ndarray) -> np.ndarray:
    """div(grad n (.) grad n - |grad n|^2/2 I) evaluated in divergence form, dealiased."""
    g = ops.g
    grad_n = ops.grad(n_hat)  # (3, dim, ...)
    gram = np.einsum("ij...,ik...->jk...", grad_n, grad_n)
    half = 0.5 * np.einsum("jj...->...", gram)
    tensor = gram - half * np.eye(g.dim).reshape((g.dim, g.dim) + (1,) * g.dim)
    t_hat = ops.product(tensor)  # (dim, dim, *spec)
    div = sum(1j * ko * t_hat[:, j] for j, ko in enumerate(g.k_odd))
    return g.ifft(div)


def ericksen_stress_div(n: DirectorField, dealias: bool = True) -> VectorField:
    """Divergence of the Ericksen stress, computed as sum_i lap(n_i) grad(n_i)."""
    g = n.grid
    ops = _Ops(g, dealias)
    return VectorField(g, stress_div_array(ops, g.fft(n.values)))


def ericksen_stress_div_tensor_form(n: DirectorField, dealias: bool = True) -> VectorField:
    """Same quantity evaluated as the divergence of the assembled stress tensor."""
    g = n.grid
    return VectorField(g, stress_tensor_div_array(_Ops(g, dealias), g.fft(n.values)))


def director_tension(ops: _Ops, n: np.ndarray, n_hat: np.ndarray) -> np.ndarray:
    """Delta n + |grad n|^2 n in physical space (product dealiased)."""
    grad_n = ops.grad(n_hat)
    gn2 = np.sum(grad_n**2, axis=(0, 1))
    return ops.lap(n_hat) + ops.g.ifft(ops.product(gn2 * n))


def _advect(ops: _Ops, u: np.ndarray, a_hat: np.ndarray) -> np.ndarray:
    """(u . grad) a for a batch of scalars a_hat (c, *spec) -> (c, *shape), not yet dealiased."""
    grad_a = ops.grad(a_hat)  # (c, dim, ...)
    return np.einsum("j...,cj...->c...", u, grad_a)


# right-hand sides --------------------------------------------------------------


def _state_arrays(state: CompressibleState):
    rho = state.rho.values
    if np.any(rho <= 0):
        raise RegimeError("nonpositive density")
    check_regime(rho)
    return rho, state.u.values, state.n.values


def eval_rhs_nonconservative(state: CompressibleState, dealias: bool = True) -> CompressibleRHS:
    p, g = state.params, state.grid
    ops = _Ops(g, dealias)
    rho, u, n = _state_arrays(state)
    law = p.law
    rho_hat, u_hat, n_hat = g.fft(rho), g.fft(u), g.fft(n)

    d_rho = -g.ifft(g.div_hat(ops.product(rho * u)))

    grad_rho = ops.grad(rho_hat)
    grad_u = ops.grad(u_hat)  # (dim, dim, ...) [i, j] = d_j u_i
    lap_u = ops.lap(u_hat)
    grad_div = g.ifft(g.grad_hat(g.div_hat(u_hat)))
    adv = np.einsum("j...,ij...->i...", u, grad_u)
    stress = stress_div_array(ops, n_hat)
    d_u = (
        -adv
        - (p.lam**2 * law.p_prime(rho) / rho) * grad_rho
        + (p.mu * lap_u + (p.kappa + p.mu) * grad_div - p.nu * stress) / rho
    )
    d_u = g.ifft(ops.product(d_u))

    d_n = -_advect(ops, u, n_hat) + p.theta * (
        ops.lap(n_hat) + np.sum(ops.grad(n_hat) ** 2, axis=(0, 1)) * n
    )
    d_n = g.ifft(ops.product(d_n))
    return CompressibleRHS(ScalarField(g, d_rho), VectorField(g, d_u), DirectorField(g, d_n))


def eval_rhs_conservative(state: CompressibleState, dealias: bool = True) -> CompressibleRHS:
    """Evaluate the momentum equation in conservation form, then convert to du/dt.

    Independent of :func:`eval_rhs_nonconservative`: the flux ``rho u (x) u`` and
    the Ericksen stress tensor are differentiated in divergence form.
    """
    p, g = state.params, state.grid
    ops = _Ops(g, dealias)
    rho, u, n = _state_arrays(state)
    law = p.law
    u_hat, n_hat = g.fft(u), g.fft(n)

    mom = rho * u
    d_rho = -g.ifft(g.div_hat(ops.product(mom)))

    flux_hat = ops.product(np.einsum("i...,j...->ij...", mom, u))  # (dim, dim, *spec)
    div_flux = g.ifft(sum(1j * ko * flux_hat[:, j] for j, ko in enumerate(g.k_odd)))
    grad_p = g.ifft(g.grad_hat(ops.product(law.p(rho))))
    lap_u = g.ifft(-g.k2 * u_hat)
    grad_div = g.ifft(g.grad_hat(g.div_hat(u_hat)))
    stress = stress_tensor_div_array(ops, n_hat)
    d_mom = -div_flux - p.lam**2 * grad_p + p.mu * lap_u + (p.kappa + p.mu) * grad_div - p.nu * stress

    d_u = g.ifft(ops.product((d_mom - u * d_rho) / rho))

    # director equation written with the tension projected as (I - n n^T) lap n
    lap_n = g.ifft(-g.k2 * n_hat)
    tension = lap_n - np.sum(n * lap_n, axis=0) * n
    grad_n = g.ifft(g.grad_hat(n_hat))
    adv_n = np.einsum("j...,cj...->c...", u, grad_n)
    d_n = g.ifft(ops.product(-adv_n + p.theta * tension))
    return CompressibleRHS(ScalarField(g, d_rho), VectorField(g, d_u), DirectorField(g, d_n))


# IMEX system -----------------------------------------------------------------


class CompressibleSystem:
    """Packed unknowns: [sigma, u_1..u_d, n_1..n_3] in spectral space."""

    def __init__(self, grid: Grid, params: ModelParams, ctl: StepControl):
        self.g, self.p, self.ctl = grid, params, ctl
        self.ops = _Ops(grid, ctl.dealias)
        self.c2 = params.law.p_prime(1.0)
        self.dim = grid.dim
        self.max_remainder = 0.0
        self.max_inv_rho_dev = 0.0

    # packing
    def pack(self, state: CompressibleState) -> np.ndarray:
        arr = np.concatenate([(state.rho.values - 1.0)[None], state.u.values, state.n.values])
        return self.g.fft(arr)

    def unpack(self, X: np.ndarray, t: float, drift: float = 0.0) -> CompressibleState:
        arr = self.g.ifft(X)
        d = self.dim
        return CompressibleState(
            t,
            ScalarField(self.g, 1.0 + arr[0]),
            VectorField(self.g, arr[1 : 1 + d]),
            DirectorField(self.g, arr[1 + d :]),
            self.p,
            drift=drift,
        )

    def split(self, X):
        d = self.dim
        return X[0], X[1 : 1 + d], X[1 + d :]

    # linear part
    def linear(self, X):
        g, p = self.g, self.p
        s_hat, u_hat, n_hat = self.split(X)
        kdotu = sum(ko * u_hat[j] for j, ko in enumerate(g.k_odd))
        Ls = -1j * kdotu
        Lu = np.stack(
            [
                -1j * p.lam**2 * self.c2 * ko * s_hat - p.mu * g.k2 * u_hat[j] - (p.kappa + p.mu) * ko * kdotu
                for j, ko in enumerate(g.k_odd)
            ]
        )
        Ln = -p.theta * g.k2 * n_hat
        return np.concatenate([Ls[None], Lu, Ln])

    def solve(self, alpha, dt, R):
        g, p = self.g, self.p
        Rs, Ru, Rn = self.split(R)
        a2 = p.lam**2 * self.c2
        kdotR = sum(ko * Ru[j] for j, ko in enumerate(g.k_odd))
        A = alpha + dt * p.mu * g.k2 + dt * (p.kappa + p.mu) * g.k2_odd
        det = alpha * A + dt**2 * a2 * g.k2_odd
        s = (A * Rs - 1j * dt * kdotR) / det
        w = (alpha * kdotR - 1j * dt * a2 * g.k2_odd * Rs) / det
        diag = alpha + dt * p.mu * g.k2
        u = np.stack([(Ru[j] - dt * (1j * a2 * ko * s + (p.kappa + p.mu) * ko * w)) / diag for j, ko in enumerate(g.k_odd)])
        n = Rn / (alpha + dt * p.theta * g.k2)
        return np.concatenate([s[None], u, n])

    # explicit part
    def explicit(self, X, t, index):
        g, p, ops = self.g, self.p, self.ops
        s_hat, u_hat, n_hat = self.split(X)
        phys = g.ifft(X)
        sigma, u, n = phys[0], phys[1 : 1 + self.dim], phys[1 + self.dim :]
        rho = 1.0 + sigma
        law = p.law

        N_s = -g.div_hat(ops.product(sigma * u))

        inv_rho_m1 = 1.0 / rho - 1.0
        remainder = law.p_prime(rho) / rho - self.c2
        self.max_remainder = float(np.max(np.abs(remainder)))
        self.max_inv_rho_dev = float(np.max(np.abs(inv_rho_m1)))
        grad_s = ops.grad(s_hat)
        grad_u = ops.grad(u_hat)
        lap_u = ops.lap(u_hat)
        grad_div = g.ifft(g.grad_hat(g.div_hat(u_hat)))
        stress = stress_div_array(ops, n_hat)
        Nu = (
            -np.einsum("j...,ij...->i...", u, grad_u)
            - p.lam**2 * remainder * grad_s
            + inv_rho_m1 * (p.mu * lap_u + (p.kappa + p.mu) * grad_div)
            - (p.nu / rho) * stress
        )
        N_u = ops.product(Nu)

        grad_n = ops.grad(n_hat)
        gn2 = np.sum(grad_n**2, axis=(0, 1))
        Nn = -np.einsum("j...,cj...->c...", u, grad_n) + p.theta * gn2 * n
        N_n = ops.product(Nn)
        return np.concatenate([N_s[None], N_u, N_n])

    def post_step(self, X):
        if not self.ctl.renormalize_director:
            return X, 0.0
        d = self.dim
        n_hat, drift = renormalize_hat(self.g, X[1 + d :])
        X = X.copy()
        X[1 + d :] = n_hat
        return X, drift

    def check(self, X, t):
        check_regime(1.0 + self.g.ifft(X[0]), f" at t = {t:.6g}")
        self._check_remainder_cap()

    def _check_remainder_cap(self):
        if self.ctl.scheme == "explicit_rk4_reference":
            return
        kmax = float(np.sqrt(np.max(self.g.k2)))
        rate = self.p.lam * np.sqrt(self.max_remainder) * kmax + self.p.mu * self.max_inv_rho_dev * kmax**2
        if rate > 0 and self.ctl.dt > REMAINDER_SAFETY / rate:
            raise StepSizeError(f"dt = {self.ctl.dt:.3g} exceeds the explicit-remainder cap {REMAINDER_SAFETY / rate:.3g}")


def rk4_max_dt(grid: Grid, params: ModelParams) -> float:
    """Stability bound dt <= c / (lam max|k|) (and the diffusive analogue) for the explicit reference."""
    kmax = float(np.sqrt(np.max(grid.k2)))
    c = np.sqrt(params.law.p_prime(1.0))
    diff = max(2 * params.mu + params.kappa, params.theta)
    return min(RK4_SAFETY / (params.lam * c * kmax), 2.5 / (diff * kmax**2))


def _validate_ctl(grid, params, ctl):
    if ctl.scheme == "explicit_rk4_reference":
        bound = rk4_max_dt(grid, params)
        if ctl.dt > bound:
            raise StepSizeError(f"explicit reference needs dt <= {bound:.3g}, got {ctl.dt}")


class CompressibleIntegrator:
    """Stateful stepper (keeps the BDF2 history between calls)."""

    def __init__(self, initial: CompressibleState, ctl: StepControl):
        _validate_ctl(initial.grid, initial.params, ctl)
        self.system = CompressibleSystem(initial.grid, initial.params, ctl)
        self.integrator = Integrator(self.system, ctl)
        self.X = self.system.pack(initial)
        self.t = initial.time
        self.state = initial

    def advance(self) -> CompressibleState:
        self.X = self.integrator.advance(self.X, self.t)
        self.t = self.t + self.integrator.ctl.dt
        drift = self.integrator.last_drift if self.integrator.ctl.renormalize_director else unit_defect_hat(
            self.system.g, self.X[1 + self.system.dim :]
        )
        self.state = self.system.unpack(self.X, self.t, drift)
        return self.state


def step(state: CompressibleState, ctl: StepControl) -> CompressibleState:
    """One step from ``state`` alone (BDF2 falls back to its Euler start-up step)."""
    return CompressibleIntegrator(state, ctl).advance()


Observer = Callable[[int, object], None]


class RunError(RuntimeError):
    def __init__(self, step_index: int, time: float, cause: Exception):
        super().__init__(f"step {step_index} (t = {time:.6g}) failed: {cause}")
        self.step_index = step_index
        self.time = time
        self.cause = cause


def run(
    initial: CompressibleState,
    ctl: StepControl,
    observers: Sequence[Observer] = (),
    stride: int = 1,
    keep_trajectory: bool = True,
) -> list[CompressibleState]:
    """Integrate to ``ctl.t_end``; observers see (step_index, state) every ``stride`` steps."""
    nsteps = ctl.nsteps
    traj = [initial]
    for ob in observers:
        ob(0, initial)
    if nsteps == 0:
        return traj
    it = CompressibleIntegrator(initial, ctl)
    for i in range(1, nsteps + 1):
        try:
            st = it.advance()
        except (BlowUpError, RegimeError, StepSizeError) as exc:
            raise RunError(i, it.t + ctl.dt, exc) from exc
        if i % stride == 0 or i == nsteps:
            for ob in observers:
                ob(i, st)
            if keep_trajectory:
                traj.append(st)
    if not keep_trajectory:
        traj.append(it.state)
    return traj
