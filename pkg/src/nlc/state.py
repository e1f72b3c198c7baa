"""Physical states, parameters, pressure law and well-prepared initial data."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .spectral import (
    DirectorField,
    Grid,
    ScalarField,
    VectorField,
    divergence,
    gradient,
)

UNIT_TOL = 1e-8
PERTURB_MODES = 4


class DomainError(ValueError):
    """Nonpositive density handed to the pressure law."""


class RegimeError(ValueError):
    """Density left the window |rho - 1| < 1/2 where the nonconservative form is used."""


class PreconditionError(ValueError):
    pass


class DegeneracyError(ValueError):
    """Director normalisation attempted on a (near) zero vector."""


class PerturbationTooLargeError(DegeneracyError):
    pass


@dataclass(frozen=True)
class ModelParams:
    mu: float = 1.0
    kappa: float = 0.0
    nu: float = 1.0
    theta: float = 1.0
    lam: float = 10.0
    gamma: float = 2.0
    dim: int = 2

    def __post_init__(self):
        if min(self.mu, self.nu, self.theta) <= 0:
            raise ValueError("mu, nu, theta must be positive")
        if 2 * self.mu + self.dim * self.kappa < 0:
            raise ValueError("need 2 mu + N kappa >= 0")
        if self.lam < 1:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if self.gamma <= 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    @property
    def law(self) -> "PressureLaw":
        return PressureLaw(self.gamma)


@dataclass(frozen=True)
class PressureLaw:
    """P(rho) = rho**gamma."""

    gamma: float = 2.0

    def p(self, rho):
        return rho**self.gamma

    def p_prime(self, rho):
        return self.gamma * rho ** (self.gamma - 1)

    def p_second(self, rho):
        return self.gamma * (self.gamma - 1) * rho ** (self.gamma - 2)

    def q(self, rho):
        # rho * int_1^rho z**(gamma-2) dz
        return rho * (rho ** (self.gamma - 1) - 1.0) / (self.gamma - 1)

    def q_second(self, rho):
        return self.p_prime(rho) / rho


def _positive(rho: ScalarField) -> np.ndarray:
    r = rho.values
    if np.any(r <= 0):
        bad = tuple(int(i) for i in np.argwhere(r <= 0)[0])
        raise DomainError(f"nonpositive density {r[bad]:.3g} at cell {bad}")
    return r


def pressure(rho: ScalarField, law: PressureLaw) -> ScalarField:
    return ScalarField(rho.grid, law.p(_positive(rho)))


def p_prime(rho: ScalarField, law: PressureLaw) -> ScalarField:
    return ScalarField(rho.grid, law.p_prime(_positive(rho)))


def p_second(rho: ScalarField, law: PressureLaw) -> ScalarField:
    return ScalarField(rho.grid, law.p_second(_positive(rho)))


def q_potential(rho: ScalarField, law: PressureLaw) -> ScalarField:
    return ScalarField(rho.grid, law.q(_positive(rho)))


def check_regime(rho: np.ndarray, where: str = "") -> None:
    dev = np.max(np.abs(rho - 1.0))
    if not dev < 0.5:
        raise RegimeError(f"|rho - 1| reached {dev:.3g}{where}; outside the window |rho - 1| < 1/2")


@dataclass(frozen=True, eq=False)
class CompressibleState:
    time: float
    rho: ScalarField
    u: VectorField
    n: DirectorField
    params: ModelParams
    # pre-projection unit-length drift of the step that produced this state
    drift: float = field(default=0.0, compare=False)

    def __post_init__(self):
        g = self.rho.grid
        if self.u.grid != g or self.n.grid != g:
            raise ValueError("state fields live on different grids")
        _positive(self.rho)
        check_regime(self.rho.values)

    @property
    def grid(self) -> Grid:
        return self.rho.grid


@dataclass(frozen=True, eq=False)
class IncompressibleState:
    time: float
    u: VectorField
    n: DirectorField
    p: ScalarField | None
    params: ModelParams
    drift: float = field(default=0.0, compare=False)

    def __post_init__(self):
        g = self.u.grid
        if self.n.grid != g or (self.p is not None and self.p.grid != g):
            raise ValueError("state fields live on different grids")

    @property
    def grid(self) -> Grid:
        return self.u.grid


def normalize_director(n: DirectorField, min_norm: float = 0.5) -> DirectorField:
    mag = np.sqrt(np.sum(n.values**2, axis=0))
    if np.min(mag) < min_norm:
        bad = tuple(int(i) for i in np.unravel_index(np.argmin(mag), mag.shape))
        raise DegeneracyError(f"|n| = {np.min(mag):.3g} < {min_norm} at cell {bad}")
    out = n.values / mag
    # one Newton correction takes |n| from ~1e-16 to round-off of the final division
    out = out * (1.5 - 0.5 * np.sum(out**2, axis=0))
    return DirectorField(n.grid, out)


# initial data ----------------------------------------------------------------


def _half_modes(dim: int, kmax: int):
    """Integer wavevectors with |k_j| <= kmax, one of each +/- pair, zero excluded."""
    for k in itertools.product(range(-kmax, kmax + 1), repeat=dim):
        nz = [c for c in k if c]
        if nz and nz[0] > 0:
            yield k


def random_band_limited(grid: Grid, rng: np.random.Generator, ncomp: int, kmax: int = PERTURB_MODES) -> np.ndarray:
    """Random smooth field built from modes |k_j| <= kmax (resolution independent).

    Coefficients decay like 1/(1+|k|^2) so the field is not dominated by its top shell.
    """
    kmax = min(kmax, min(m // 3 for m in grid.sizes))
    modes = list(_half_modes(grid.dim, kmax))
    out = np.zeros((ncomp,) + grid.shape)
    scale = [2 * np.pi / L for L in grid.length]
    for c in range(ncomp):
        out[c] += rng.standard_normal()
        coef = rng.standard_normal((len(modes), 2))
        for (a, b), k in zip(coef, modes):
            phase = sum(kj * sj * x for kj, sj, x in zip(k, scale, grid.coords))
            amp = 1.0 / (1.0 + sum(kj * kj for kj in k))
            out[c] = out[c] + amp * (a * np.cos(phase) + b * np.sin(phase))
    return out


def taylor_green(grid: Grid, amplitude: float = 1.0) -> VectorField:
    x = grid.coords
    sx = [2 * np.pi / L for L in grid.length]
    if grid.dim == 2:
        a, b = sx[0] * x[0], sx[1] * x[1]
        u = np.stack([np.sin(a) * np.cos(b) / sx[0], -np.cos(a) * np.sin(b) / sx[1]])
    else:
        a, b, c = (s * xi for s, xi in zip(sx, x))
        u = np.stack(
            [
                np.sin(a) * np.cos(b) * np.cos(c) / sx[0],
                -np.cos(a) * np.sin(b) * np.cos(c) / sx[1],
                np.zeros(grid.shape),
            ]
        )
    return VectorField(grid, amplitude * np.broadcast_to(u, (grid.dim,) + grid.shape))


def planar_director(grid: Grid, amplitude: float = 0.5) -> DirectorField:
    """n = (cos phi, sin phi, 0) with phi a low-mode trigonometric polynomial."""
    x = grid.coords
    sx = [2 * np.pi / L for L in grid.length]
    phi = amplitude * (np.sin(sx[0] * x[0]) + 0.5 * np.cos(sx[1] * x[1]))
    if grid.dim == 3:
        phi = phi + 0.25 * amplitude * np.sin(sx[2] * x[2])
    phi = np.broadcast_to(phi, grid.shape)
    return DirectorField(grid, np.stack([np.cos(phi), np.sin(phi), np.zeros(grid.shape)]))


def constant_director(grid: Grid, direction=(0.0, 0.0, 1.0)) -> DirectorField:
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return DirectorField(grid, np.broadcast_to(d.reshape((3,) + (1,) * grid.dim), (3,) + grid.shape))


PROFILES = ("taylor_green", "rest")


def baseline(grid: Grid, profile: str = "taylor_green") -> tuple[VectorField, DirectorField]:
    if profile == "taylor_green":
        return taylor_green(grid), planar_director(grid)
    if profile == "rest":
        return VectorField(grid, np.zeros((grid.dim,) + grid.shape)), constant_director(grid)
    raise ValueError(f"unknown init profile {profile!r}; choose from {PROFILES}")


def director_gradient_gap(n: DirectorField, n0: DirectorField, s: int) -> float:
    """|| grad n - grad n0 ||_s summed over the three components."""
    g = n.grid
    return _norm_stack(g, _grads(g, n.values - n0.values), s)


def _norm_stack(g: Grid, arrays: np.ndarray, s: int) -> float:
    return float(np.sqrt(g.l2_sq_hat(g.fft(arrays), g.sobolev_weight(s))))


def well_prepared_initial_data(
    grid: Grid,
    params: ModelParams,
    delta0: float = 0.05,
    seed: int = 0,
    u0: VectorField | None = None,
    n0: DirectorField | None = None,
    s: int = 3,
    div_tol: float = 1e-10,
    max_rescales: int = 5,
) -> CompressibleState:
    """Compressible data near (1, u0, n0) with perturbations sized for parameter ``lam``.

    The density, velocity and director perturbations are scaled so that
    ``||rho - 1||_s = lam^-2 delta0``, ``||u - u0||_{s+1} = lam^-1 delta0`` and
    ``||grad n - grad n0||_s = lam^-1 delta0``; the last one after normalisation,
    found by repeated rescaling.
    """
    if u0 is None or n0 is None:
        bu, bn = baseline(grid)
        u0 = bu if u0 is None else u0
        n0 = bn if n0 is None else n0
    if np.max(np.abs(divergence(u0).values)) > div_tol:
        raise PreconditionError("baseline velocity u0 is not divergence-free")
    if n0.unit_defect() > UNIT_TOL:
        raise PreconditionError(f"baseline director n0 is not unit length (defect {n0.unit_defect():.2e})")

    lam = params.lam
    rng = np.random.default_rng(seed)
    rho_bar = random_band_limited(grid, rng, 1)[0]
    u_bar = random_band_limited(grid, rng, grid.dim)
    n_bar = random_band_limited(grid, rng, 3)
    if delta0 == 0:
        return CompressibleState(0.0, ScalarField(grid, np.ones(grid.shape)), u0, n0, params)

    rho_bar *= lam**-2 * delta0 / _norm_stack(grid, rho_bar, s)
    u_bar *= lam**-1 * delta0 / _norm_stack(grid, u_bar, s + 1)

    target = delta0 / lam
    # start from the linearised size, then fixed-point rescale against the true gap
    n_bar *= target / _norm_stack(grid, _grads(grid, n_bar), s)
    n = None
    for _ in range(max_rescales):
        mag = np.sqrt(np.sum((n0.values + n_bar) ** 2, axis=0))
        if np.min(mag) < 0.5:
            raise PerturbationTooLargeError(f"|n0 + n_bar| drops to {np.min(mag):.3g}; reduce delta0")
        n = normalize_director(DirectorField(grid, n0.values + n_bar))
        gap = director_gradient_gap(n, n0, s)
        if abs(gap - target) <= 1e-14 * target:
            break
        n_bar = n_bar * (target / gap)
    else:
        n = normalize_director(DirectorField(grid, n0.values + n_bar))

    rho = ScalarField(grid, 1.0 + rho_bar)
    u = VectorField(grid, u0.values + u_bar)
    return CompressibleState(0.0, rho, u, n, params)


def _grads(grid: Grid, comps: np.ndarray) -> np.ndarray:
    return np.concatenate([gradient(ScalarField(grid, c)).values for c in comps])


def incompressible_from(u0: VectorField, n0: DirectorField, params: ModelParams, time: float = 0.0) -> IncompressibleState:
    return IncompressibleState(time, u0, n0, None, params)


def with_time(state, t):
    return replace(state, time=t)
