"""Picard iteration for the compressible system through its linearisation about frozen data.

Given frozen data V = (xi, v, m), the map U = Lambda(V) solves

    rho_t + (v.grad) rho + xi div u = 0
    u_t + (v.grad) u + lam^2 P'(xi)/xi grad rho = (mu/xi) lap u + ((kappa+mu)/xi) grad div u
                                                - (nu/xi) sum_i lap n_i grad n_i
    n_t + (v.grad) n = theta (lap n + |grad m|^2 n)

with the same implicit/explicit split as the nonlinear solver.  Iterating
V <- Lambda(V) from the constant-in-time extension of the initial data gives the
Picard sequence; the distance between successive iterates is measured with

    sup_t ( ||lam (rho_i - rho_{i-1})||^2 + ||u_i - u_{i-1}||^2 + ||n_i - n_{i-1}||_1^2 ).
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .compressible import CompressibleSystem, RunError
from .imex import BlowUpError, Integrator, StepControl, StepSizeError
from .spectral import DirectorField, ScalarField, VectorField
from .state import CompressibleState, PreconditionError, RegimeError

DEFAULT_KMAX = 20
METRIC_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearizationInput:
    xi: ScalarField
    v: VectorField
    m: DirectorField

    def __post_init__(self):
        g = self.xi.grid
        if self.v.grid != g or self.m.grid != g:
            raise PreconditionError("linearisation data live on different grids")
        x = self.xi.values
        if np.any(x <= 0) or not np.max(np.abs(x - 1.0)) < 0.5:
            raise PreconditionError("frozen density xi must satisfy xi > 0 and |xi - 1| < 1/2")

    @classmethod
    def from_state(cls, state: CompressibleState) -> "LinearizationInput":
        return cls(state.rho, state.u, state.n)


@dataclass
class ContractionReport:
    iterates: int = 0
    diff_norms: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    tau_estimate: float = 0.0
    converged: bool = False
    non_contraction: bool = False
    T0: float = 0.0
    lam: float = 0.0

    def rows(self):
        for i, d in enumerate(self.diff_norms, start=1):
            r = self.ratios[i - 2] if i >= 2 else float("nan")
            yield {"T0": self.T0, "lambda": self.lam, "iter": i, "diff_metric": d, "ratio": r}

    def write_csv(self, path, append: bool = False) -> None:
        path = Path(path)
        new = not (append and path.exists())
        with path.open("a" if append else "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(["T0", "lambda", "iter", "diff_metric", "ratio"])
            for row in self.rows():
                w.writerow([repr(float(row["T0"])), repr(float(row["lambda"])), row["iter"], repr(row["diff_metric"]), repr(row["ratio"])])


class _FrozenData:
    """V(t) with linear interpolation between snapshots; precomputes |grad m|^2."""

    def __init__(self, grid, V):
        if isinstance(V, LinearizationInput):
            snaps = [(0.0, V)]
        else:
            snaps = [(s.time, LinearizationInput.from_state(s)) for s in V]
            if not snaps:
                raise PreconditionError("empty linearisation trajectory")
        self.times = [t for t, _ in snaps]
        self.data = []
        for _, v in snaps:
            if v.xi.grid != grid:
                raise PreconditionError("linearisation data and initial state live on different grids")
            m_hat = grid.fft(v.m.values)
            gm2 = np.sum(grid.ifft(grid.grad_hat(m_hat)) ** 2, axis=(0, 1))
            self.data.append((v.xi.values, v.v.values, gm2))

    def __call__(self, t):
        ts = self.times
        if len(ts) == 1 or t <= ts[0]:
            return self.data[0]
        if t >= ts[-1]:
            return self.data[-1]
        j = bisect.bisect_right(ts, t) - 1
        t0, t1 = ts[j], ts[j + 1]
        w = (t - t0) / (t1 - t0)
        if w < 1e-12:
            return self.data[j]
        if w > 1 - 1e-12:
            return self.data[j + 1]
        a, b = self.data[j], self.data[j + 1]
        return tuple((1 - w) * x + w * y for x, y in zip(a, b))


class LinearizedSystem(CompressibleSystem):
    """Same unknowns and implicit operator as the nonlinear solver; explicit terms use frozen V."""

    def __init__(self, grid, params, ctl, frozen: _FrozenData):
        super().__init__(grid, params, replace(ctl, renormalize_director=False))
        self.V = frozen

    def explicit(self, X, t, index):
        g, p, ops, d = self.g, self.p, self.ops, self.dim
        xi, v, gm2 = self.V(t)
        s_hat, u_hat, n_hat = self.split(X)
        phys = g.ifft(X)
        n = phys[1 + d :]
        law = p.law

        grad_s = ops.grad(s_hat)
        div_u = g.ifft(g.div_hat(u_hat))
        N_s = ops.product(-np.einsum("j...,j...->...", v, grad_s) - (xi - 1.0) * div_u)

        grad_u = ops.grad(u_hat)
        lap_u = ops.lap(u_hat)
        grad_div = g.ifft(g.grad_hat(g.div_hat(u_hat)))
        grad_n = ops.grad(n_hat)
        lap_n = ops.lap(n_hat)
        stress = np.einsum("i...,ij...->j...", lap_n, grad_n)
        Nu = (
            -np.einsum("j...,ij...->i...", v, grad_u)
            - p.lam**2 * (law.p_prime(xi) / xi - self.c2) * grad_s
            + (1.0 / xi - 1.0) * (p.mu * lap_u + (p.kappa + p.mu) * grad_div)
            - (p.nu / xi) * g.ifft(ops.product(stress))
        )
        N_u = ops.product(Nu)
        N_n = ops.product(-np.einsum("j...,cj...->c...", v, grad_n) + p.theta * gm2 * n)
        return np.concatenate([N_s[None], N_u, N_n])

    def check(self, X, t):
        rho = 1.0 + self.g.ifft(X[0])
        if np.any(rho <= 0) or not np.max(np.abs(rho - 1.0)) < 0.5:
            raise RegimeError(f"linearised density left |rho - 1| < 1/2 at t = {t:.6g}")


def linearized_step(V, U_init: CompressibleState, ctl: StepControl) -> list[CompressibleState]:
    """Solve U = Lambda(V) on [t0, t0 + ctl.t_end]; returns the state at every step.

    ``V`` is either a :class:`LinearizationInput` (frozen in time) or a sequence of
    compressible states interpolated linearly in time.
    """
    g = U_init.grid
    frozen = _FrozenData(g, V)
    system = LinearizedSystem(g, U_init.params, ctl, frozen)
    integ = Integrator(system, system.ctl)
    X = system.pack(U_init)
    t = U_init.time
    traj = [U_init]
    for i in range(1, ctl.nsteps + 1):
        try:
            X = integ.advance(X, t)
        except (BlowUpError, RegimeError, StepSizeError) as exc:
            raise RunError(i, t + ctl.dt, exc) from exc
        t = U_init.time + i * ctl.dt
        traj.append(system.unpack(X, t))
    return traj


def iterate_metric(a: Sequence[CompressibleState], b: Sequence[CompressibleState]) -> float:
    """sup over matching snapshots of lam^2||drho||^2 + ||du||^2 + ||dn||_1^2."""
    if len(a) != len(b):
        raise PreconditionError("iterates sampled on different time grids")
    best = 0.0
    for x, y in zip(a, b):
        g, lam = x.grid, x.params.lam
        drho = g.fft(x.rho.values - y.rho.values)
        du = g.fft(x.u.values - y.u.values)
        dn = g.fft(x.n.values - y.n.values)
        val = lam**2 * g.l2_sq_hat(drho) + g.l2_sq_hat(du) + g.l2_sq_hat(dn, g.sobolev_weight(1))
        best = max(best, val)
    return best


def picard_iterate(
    U0: CompressibleState,
    T0: float,
    k_max: int = DEFAULT_KMAX,
    ctl: StepControl | None = None,
    tol: float = METRIC_TOL,
) -> tuple[list[CompressibleState], ContractionReport]:
    ctl = replace(ctl or StepControl(dt=T0 / 100, t_end=T0), t_end=T0)
    steps = ctl.nsteps
    V = [replace(U0, time=U0.time + i * ctl.dt) for i in range(steps + 1)]
    report = ContractionReport(T0=T0, lam=U0.params.lam)
    growth = 0
    for _ in range(k_max):
        U = linearized_step(V, U0, ctl)
        metric = iterate_metric(U, V)
        report.iterates += 1
        if report.diff_norms:
            prev = report.diff_norms[-1]
            report.ratios.append(metric / prev if prev > 0 else 0.0)
            growth = growth + 1 if metric > prev else 0
        report.diff_norms.append(metric)
        V = U
        if metric < tol:
            report.converged = True
            break
        if growth >= 3:
            report.non_contraction = True
            break
    report.tau_estimate = max(report.ratios) if report.ratios else 0.0
    return V, report
