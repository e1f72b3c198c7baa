"""Fourier machinery on the periodic box [0, L_1) x ... x [0, L_N).

Mode ordering
-------------
Spectral arrays are ``numpy.fft.rfftn`` outputs over the spatial axes: every
axis but the last is in FFT order ``0, 1, ..., M/2, -M/2+1, ..., -1`` and the
last axis holds the non-negative half ``0, ..., M/2``.  The Nyquist index is
always reported as ``+M/2``.  Odd-order derivatives multiply the Nyquist mode
by zero; even-order derivatives keep it.

Coefficients are unnormalised (``rfftn`` convention); ``volume / ncells``
converts sums of ``|f_hat|**2 / ncells`` into integrals.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class NumericInputError(ValueError):
    """Raised when a field contains NaN or Inf."""


class ShapeError(ValueError):
    """Raised when fields live on incompatible grids or have the wrong shape."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid with cached wavenumber tables.

    ``sizes`` must be even and at least 8 per axis.  ``length`` defaults to
    2*pi on every axis.
    """

    sizes: tuple[int, ...]
    length: tuple[float, ...] = ()
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.sizes)
        if len(sizes) not in (2, 3):
            raise ShapeError(f"grid dimension must be 2 or 3, got {len(sizes)}")
        for m in sizes:
            if m < 8 or m % 2:
                raise ShapeError(f"grid sizes must be even and >= 8, got {sizes}")
        length = tuple(float(x) for x in self.length) or (TWO_PI,) * len(sizes)
        if len(length) != len(sizes) or any(x <= 0 for x in length):
            raise ShapeError(f"bad domain lengths {length} for sizes {sizes}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "length", length)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.sizes == other.sizes and self.length == other.length

    def __hash__(self):
        return hash((self.sizes, self.length))

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def ncells(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    @property
    def cell_volume(self) -> float:
        return self.volume / self.ncells

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / m for L, m in zip(self.length, self.sizes))

    @cached_property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable 1-D coordinate arrays (``meshgrid`` with ``sparse=True``)."""
        pts = [np.arange(m) * (L / m) for m, L in zip(self.sizes, self.length)]
        return tuple(np.meshgrid(*pts, indexing="ij", sparse=True))

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Dense coordinate arrays."""
        return tuple(np.broadcast_to(c, self.shape) for c in self.coords)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis physical wavenumbers in FFT order, Nyquist reported as +M/2."""
        out = []
        for m, L in zip(self.sizes, self.length):
            idx = np.fft.fftfreq(m, 1.0 / m)
            idx[m // 2] = m // 2
            out.append(idx * (TWO_PI / L))
        return tuple(out)

    @cached_property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.sizes[:-1] + (self.sizes[-1] // 2 + 1,)

    @cached_property
    def _index(self) -> tuple[np.ndarray, ...]:
        # integer mode indices on the rfft layout, broadcastable
        idx = []
        for ax, m in enumerate(self.sizes):
            if ax == self.dim - 1:
                k = np.arange(m // 2 + 1, dtype=float)
            else:
                k = np.fft.fftfreq(m, 1.0 / m)
                k[m // 2] = m // 2
            shape = [1] * self.dim
            shape[ax] = k.size
            idx.append(k.reshape(shape))
        return tuple(idx)

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Physical wavenumbers on the rfft layout (Nyquist kept)."""
        return tuple(i * (TWO_PI / L) for i, L in zip(self._index, self.length))

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers for odd-order derivatives (Nyquist zeroed)."""
        out = []
        for i, kk, m in zip(self._index, self.k, self.sizes):
            out.append(np.where(np.abs(i) == m // 2, 0.0, kk))
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(np.broadcast_to(kk**2, self.spectral_shape) for kk in self.k)

    @cached_property
    def k2_odd(self) -> np.ndarray:
        return sum(np.broadcast_to(kk**2, self.spectral_shape) for kk in self.k_odd)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.ones(self.spectral_shape, dtype=bool)
        for i, m in zip(self._index, self.sizes):
            keep = keep & (np.abs(i) <= m / 3.0)
        return keep

    @cached_property
    def mode_weight(self) -> np.ndarray:
        """Multiplicity of each rfft coefficient in the full spectrum (1 or 2)."""
        m = self.sizes[-1]
        w = np.full(m // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w, self.spectral_shape)

    def multi_indices(self, s: int) -> list[tuple[int, ...]]:
        """All multi-indices alpha with |alpha| <= s, in graded lexicographic order."""
        out = []
        for order in range(s + 1):
            for alpha in itertools.product(range(order + 1), repeat=self.dim):
                if sum(alpha) == order:
                    out.append(alpha)
        return out

    def sobolev_weight(self, s: int) -> np.ndarray:
        """Sum over |alpha| <= s of prod_j k_j^(2 alpha_j), on the rfft layout."""
        key = ("sobolev", s)
        if key not in self._cache:
            w = np.zeros(self.spectral_shape)
            for alpha in self.multi_indices(s):
                term = np.ones(self.spectral_shape)
                for kk, a in zip(self.k, alpha):
                    term = term * kk ** (2 * a)
                w += term
            self._cache[key] = w
        return self._cache[key]

    def max_resolved_order(self) -> int:
        # beyond this the top retained shell dominates the norm by > 1e12
        return 12

    # array-level transforms -------------------------------------------------

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(a, axes=self.axes)

    def ifft(self, a_hat: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(a_hat, s=self.sizes, axes=self.axes)

    def deriv_hat(self, a_hat: np.ndarray, alpha: tuple[int, ...]) -> np.ndarray:
        """Multiply by prod_j (i k_j)^alpha_j, zeroing Nyquist for odd alpha_j."""
        out = a_hat
        for kk, ko, a in zip(self.k, self.k_odd, alpha):
            if a:
                out = out * (1j * (ko if a % 2 else kk)) ** a
        return out

    def dealias_hat(self, a_hat: np.ndarray) -> np.ndarray:
        return a_hat * self.dealias_mask

    def truncate(self, a: np.ndarray) -> np.ndarray:
        """2/3-rule truncation of a real-space array (leading axes are batched)."""
        return self.ifft(self.dealias_hat(self.fft(a)))

    def grad_hat(self, a_hat: np.ndarray) -> np.ndarray:
        return np.stack([1j * np.broadcast_to(ko, self.spectral_shape) * a_hat for ko in self.k_odd], axis=-self.dim - 1)

    def div_hat(self, v_hat: np.ndarray) -> np.ndarray:
        return sum(1j * ko * np.take(v_hat, j, axis=-self.dim - 1) for j, ko in enumerate(self.k_odd))

    def integral(self, a: np.ndarray) -> float | np.ndarray:
        return np.sum(a, axis=self.axes) * self.cell_volume

    def l2_sq_hat(self, a_hat: np.ndarray, weight: np.ndarray | None = None) -> float:
        """Integral of |a|^2 from unnormalised rfft coefficients (leading axes summed)."""
        p = np.abs(a_hat) ** 2 * self.mode_weight
        if weight is not None:
            p = p * weight
        return float(np.sum(p)) * self.volume / self.ncells**2


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise NumericInputError(f"{what} contains non-finite value at index {tuple(int(i) for i in bad)}")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.shape:
            raise ShapeError(f"scalar field shape {v.shape} != grid shape {self.grid.shape}")
        _require_finite(v, "scalar field")
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other, self.grid))

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * _vals(c, self.grid))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """``values`` has shape ``(ncomp, *grid.shape)``; ncomp defaults to grid.dim."""

    grid: Grid
    values: np.ndarray

    ncomp_expected = None

    def __post_init__(self):
        v = _frozen(self.values)
        n = self.ncomp_expected or self.grid.dim
        if v.shape != (n,) + self.grid.shape:
            raise ShapeError(f"{type(self).__name__} shape {v.shape} != {(n,) + self.grid.shape}")
        _require_finite(v, type(self).__name__)
        object.__setattr__(self, "values", v)

    @property
    def components(self) -> list[ScalarField]:
        return [ScalarField(self.grid, c) for c in self.values]

    @classmethod
    def from_components(cls, comps):
        comps = list(comps)
        grids = {c.grid for c in comps}
        if len(grids) != 1:
            raise ShapeError("vector components live on different grids")
        return cls(comps[0].grid, np.stack([c.values for c in comps]))

    def __add__(self, other):
        return type(self)(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return type(self)(self.grid, self.values - _vals(other, self.grid))

    def __mul__(self, c):
        return type(self)(self.grid, self.values * _vals(c, self.grid))

    __rmul__ = __mul__


class DirectorField(VectorField):
    """Three-component field; unit length is checked by the operations that promise it."""

    ncomp_expected = 3

    def unit_defect(self) -> float:
        return float(np.max(np.abs(np.sqrt(np.sum(self.values**2, axis=0)) - 1.0)))


def _vals(x, grid):
    if isinstance(x, (ScalarField, VectorField)):
        if x.grid != grid:
            raise ShapeError("fields live on different grids")
        return x.values
    return x


def _check_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ShapeError("fields live on different grids")
    return g


# public operations -----------------------------------------------------------


def gradient(f: ScalarField) -> VectorField:
    g = f.grid
    return VectorField(g, g.ifft(g.grad_hat(g.fft(f.values))))


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    if v.values.shape[0] != g.dim:
        raise ShapeError(f"divergence needs {g.dim} components, got {v.values.shape[0]}")
    return ScalarField(g, g.ifft(g.div_hat(g.fft(v.values))))


def laplacian(f):
    """Spectral Laplacian; componentwise for vector and director fields."""
    g = f.grid
    out = g.ifft(-g.k2 * g.fft(f.values))
    return type(f)(g, out)


def leray_project(v: VectorField) -> VectorField:
    g = v.grid
    return VectorField(g, g.ifft(leray_hat(g, g.fft(v.values))))


def leray_hat(g: Grid, v_hat: np.ndarray) -> np.ndarray:
    """Apply I - k k^T/|k|^2 per mode (odd-derivative wavenumbers)."""
    k2 = g.k2_odd
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    kdotv = sum(ko * v_hat[j] for j, ko in enumerate(g.k_odd))
    return np.stack([v_hat[j] - ko * kdotv * inv for j, ko in enumerate(g.k_odd)])


def dealias(f):
    g = f.grid
    return type(f)(g, g.truncate(f.values))


def sobolev_norm(f, s: int) -> float:
    """H^s norm summed over multi-indices |alpha| <= s (and over components)."""
    if s < 0 or int(s) != s:
        raise ValueError(f"sobolev order must be a non-negative integer, got {s}")
    g = f.grid
    if s > g.max_resolved_order():
        log.warning("H^%d norm requested on grid %s; high shells dominate", s, g.sizes)
    return float(np.sqrt(g.l2_sq_hat(g.fft(f.values), g.sobolev_weight(int(s)))))


def integrate(f: ScalarField) -> float:
    return float(f.grid.integral(f.values))


def inner(a, b) -> float:
    """L^2 inner product of two fields of the same kind."""
    _check_grid(a, b)
    return float(np.sum(a.grid.integral(a.values * b.values)))
