"""Fixed-step time integrators shared by the compressible, incompressible and linearised solvers.

A *system* packs its unknowns into one complex array ``X`` of shape
``(ncomp, *grid.spectral_shape)`` and splits the right side as ``L X + N(X, t)``
with ``L`` linear, constant-coefficient and diagonal (or block diagonal) in
Fourier space.  It must provide::

    explicit(X, t, index) -> N            # dealiased nonlinear / variable-coefficient part
    solve(alpha, dt, R) -> X              # (alpha I - dt L) X = R, mode by mode
    linear(X) -> L X                      # only used by the explicit reference scheme
    post_step(X) -> (X, drift)            # e.g. director renormalisation
    check(X, t)                           # raise if the state left its admissible set

Schemes: ``imex_euler`` (1st order), ``imex_bdf2`` (SBDF2, bootstrapped with one
Euler step) and ``explicit_rk4_reference`` (classical RK4 on L + N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEMES = ("imex_bdf2", "imex_euler", "explicit_rk4_reference")
SCHEME_ORDER = {"imex_bdf2": 2, "imex_euler": 1, "explicit_rk4_reference": 4}


class BlowUpError(RuntimeError):
    """Non-finite values after a step; carries the time of failure."""

    def __init__(self, time: float, msg: str = ""):
        super().__init__(msg or f"solution blew up at t = {time:.6g}")
        self.time = time


class StepSizeError(ValueError):
    pass


@dataclass(frozen=True)
class StepControl:
    dt: float
    t_end: float
    scheme: str = "imex_bdf2"
    renormalize_director: bool = True
    dealias: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.dt > 0:
            raise StepSizeError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.t_end > 0 and self.dt > self.t_end * (1 + 1e-12):
            raise StepSizeError(f"dt = {self.dt} exceeds t_end = {self.t_end}")

    @property
    def nsteps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(self.t_end, self.dt):
            raise StepSizeError(f"t_end = {self.t_end} is not a multiple of dt = {self.dt}")
        return n

    @property
    def order(self) -> int:
        return SCHEME_ORDER[self.scheme]


class Integrator:
    """Advances a packed spectral state; keeps the multistep history internally."""

    def __init__(self, system, ctl: StepControl):
        self.system = system
        self.ctl = ctl
        self._prev = None  # (X_{n-1}, N_{n-1})
        self.last_drift = 0.0
        self.index = 0

    def reset(self):
        self._prev = None
        self.index = 0

    def advance(self, X: np.ndarray, t: float) -> np.ndarray:
        sys_, dt, scheme = self.system, self.ctl.dt, self.ctl.scheme
        if scheme == "explicit_rk4_reference":
            Xn = self._rk4(X, t)
        else:
            N = sys_.explicit(X, t, self.index)
            if scheme == "imex_euler" or self._prev is None:
                Xn = sys_.solve(1.0, dt, X + dt * N)
            else:
                Xp, Np = self._prev
                Xn = sys_.solve(1.5, dt, 2.0 * X - 0.5 * Xp + dt * (2.0 * N - Np))
            self._prev = (X, N)
        t_new = t + dt
        if not np.all(np.isfinite(Xn)):
            raise BlowUpError(t_new)
        Xn, self.last_drift = sys_.post_step(Xn)
        sys_.check(Xn, t_new)
        self.index += 1
        return Xn

    def _rk4(self, X, t):
        sys_, dt, i = self.system, self.ctl.dt, self.index

        def f(Y, tt):
            return sys_.linear(Y) + sys_.explicit(Y, tt, i)

        k1 = f(X, t)
        k2 = f(X + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = f(X + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = f(X + dt * k3, t + dt)
        return X + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def renormalize_hat(grid, n_hat: np.ndarray) -> tuple[np.ndarray, float]:
    """Project a spectral director onto the unit sphere pointwise; return the prior defect."""
    n = grid.ifft(n_hat)
    mag = np.sqrt(np.sum(n**2, axis=0))
    drift = float(np.max(np.abs(mag - 1.0)))
    return grid.fft(n / mag), drift


def unit_defect_hat(grid, n_hat: np.ndarray) -> float:
    n = grid.ifft(n_hat)
    return float(np.max(np.abs(np.sqrt(np.sum(n**2, axis=0)) - 1.0)))
