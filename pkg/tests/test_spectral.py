import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import smooth
from nlc.spectral import (
    DirectorField,
    Grid,
    NumericInputError,
    ScalarField,
    ShapeError,
    VectorField,
    dealias,
    divergence,
    gradient,
    inner,
    integrate,
    laplacian,
    leray_project,
    sobolev_norm,
)

PI = math.pi


def fd4(a, h, axis):
    """Fourth-order centred first derivative."""
    r = lambda s: np.roll(a, -s, axis=axis)
    return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * h)


def fd2_lap(a, hs):
    return sum((np.roll(a, -1, ax) - 2 * a + np.roll(a, 1, ax)) / h**2 for ax, h in enumerate(hs))


def order(e_coarse, e_fine):
    return math.log2(e_coarse / e_fine)


# gradient -------------------------------------------------------------------


def test_gradient_of_constant_is_zero(g32):
    assert np.max(np.abs(gradient(ScalarField(g32, np.full(g32.shape, 3.7))).values)) == 0.0


def test_gradient_of_sine(g64):
    x, _ = g64.mesh()
    g = gradient(ScalarField(g64, np.sin(x))).values
    assert np.max(np.abs(g[0] - np.cos(x))) < 1e-13
    assert np.max(np.abs(g[1])) < 1e-13


def test_gradient_matches_fd4_at_fourth_order():
    errs = []
    for m in (32, 64):
        g = Grid((m, m))
        f = smooth(g, 3)[0]
        spec = gradient(ScalarField(g, f)).values
        fd = np.stack([fd4(f, h, ax) for ax, h in enumerate(g.spacing)])
        errs.append(np.max(np.abs(spec - fd)))
    assert 3.7 < order(*errs) < 4.3


# divergence -----------------------------------------------------------------


def test_divergence_of_gradient_is_laplacian(g64):
    x, y = g64.mesh()
    f = ScalarField(g64, np.sin(x) * np.sin(y))
    assert np.max(np.abs(divergence(gradient(f)).values - laplacian(f).values)) <= 1e-12


def test_divergence_of_rotational_field(g64):
    x, y = g64.mesh()
    v = VectorField(g64, np.stack([-np.sin(y), np.sin(x)]))
    assert np.max(np.abs(divergence(v).values)) < 1e-13


def test_divergence_matches_fd4_at_fourth_order():
    errs = []
    for m in (32, 64):
        g = Grid((m, m))
        v = smooth(g, 5, 2)
        spec = divergence(VectorField(g, v)).values
        fd = sum(fd4(v[ax], h, ax) for ax, h in enumerate(g.spacing))
        errs.append(np.max(np.abs(spec - fd)))
    assert 3.7 < order(*errs) < 4.3


# laplacian ------------------------------------------------------------------


def test_laplacian_constant_and_eigenfunction(g32):
    assert np.max(np.abs(laplacian(ScalarField(g32, np.ones(g32.shape))).values)) == 0.0
    x, _ = g32.mesh()
    assert np.max(np.abs(laplacian(ScalarField(g32, np.sin(x))).values + np.sin(x))) < 1e-12


def test_laplacian_matches_fd2_at_second_order():
    errs = []
    for m in (32, 64):
        g = Grid((m, m))
        f = smooth(g, 7)[0]
        errs.append(np.max(np.abs(laplacian(ScalarField(g, f)).values - fd2_lap(f, g.spacing))))
    assert 1.8 < order(*errs) < 2.2


def test_laplacian_keeps_field_type(g32):
    n = DirectorField(g32, smooth(g32, 1, 3))
    assert isinstance(laplacian(n), DirectorField)


# Leray projection -----------------------------------------------------------


def test_leray_removes_gradients(g64):
    f = smooth(g64, 2)[0]
    grad = gradient(ScalarField(g64, f))
    assert np.max(np.abs(leray_project(grad).values)) < 1e-13


def test_leray_keeps_solenoidal_fields(g64):
    x, y = g64.mesh()
    v = VectorField(g64, np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)]))
    assert np.max(np.abs(leray_project(v).values - v.values)) < 1e-14


def test_leray_random_field_orthogonality(g64):
    v = VectorField(g64, smooth(g64, 11, 2))
    pv = leray_project(v)
    assert np.max(np.abs(divergence(pv).values)) <= 1e-12
    rest = v - pv
    assert abs(inner(pv, rest)) <= 1e-10 * inner(v, v)


@given(st.integers(0, 10_000))
def test_leray_idempotent(seed):
    g = Grid((16, 16))
    v = VectorField(g, np.random.default_rng(seed).standard_normal((2, 16, 16)))
    p1 = leray_project(v)
    assert np.max(np.abs(leray_project(p1).values - p1.values)) < 1e-13


# dealiasing -----------------------------------------------------------------


def test_dealias_keeps_low_band(g64):
    f = ScalarField(g64, smooth(g64, 4)[0])
    assert np.max(np.abs(dealias(f).values - f.values)) < 1e-14


def test_dealias_kills_nyquist(g32):
    x, _ = g32.mesh()
    f = ScalarField(g32, np.cos(16 * x))
    assert np.max(np.abs(dealias(f).values)) < 1e-14


def test_dealiased_product_matches_fine_grid():
    coarse, fine = Grid((24, 24)), Grid((48, 48))
    # two fields resolved by the coarse retained band (|k| <= 8)
    a_c, a_f = smooth(coarse, 1, kmax=7)[0], smooth(fine, 1, kmax=7)[0]
    b_c, b_f = smooth(coarse, 2, kmax=7)[0], smooth(fine, 2, kmax=7)[0]
    lhs = coarse.ifft(coarse.dealias_hat(coarse.fft(coarse.truncate(a_c) * coarse.truncate(b_c))))
    # exact product on the fine grid, then restricted to the coarse retained band
    exact_hat = fine.fft(a_f * b_f)
    mask_c = np.zeros(fine.spectral_shape, bool)
    kx, ky = fine._index
    mask_c[(np.abs(kx) <= 8) & (np.abs(ky) <= 8)] = True
    restricted = fine.ifft(np.where(mask_c, exact_hat, 0))[::2, ::2]
    assert np.max(np.abs(lhs - restricted)) < 1e-13


# norms and integrals --------------------------------------------------------


def test_sobolev_norm_analytic(g64):
    x, _ = g64.mesh()
    f = ScalarField(g64, np.sin(x))
    assert sobolev_norm(ScalarField(g64, np.zeros(g64.shape)), 4) == 0.0
    assert sobolev_norm(f, 0) == pytest.approx(math.sqrt(2 * PI**2), rel=1e-14)
    assert sobolev_norm(f, 1) == pytest.approx(math.sqrt(4 * PI**2), rel=1e-14)


def test_integrals(g64):
    x, _ = g64.mesh()
    assert integrate(ScalarField(g64, np.ones(g64.shape))) == pytest.approx((2 * PI) ** 2, rel=1e-15)
    assert abs(integrate(ScalarField(g64, np.sin(x)))) < 1e-13
    assert integrate(ScalarField(g64, np.sin(x) ** 2)) == pytest.approx(2 * PI**2, rel=1e-14)


@given(st.integers(0, 10_000))
def test_parseval(seed):
    g = Grid((16, 12))
    a = np.random.default_rng(seed).standard_normal(g.shape)
    direct = float(np.sum(a**2)) * g.cell_volume
    assert g.l2_sq_hat(g.fft(a)) == pytest.approx(direct, rel=1e-12)


@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_gradient_is_linear(seed, a, b):
    g = Grid((16, 16))
    rng = np.random.default_rng(seed)
    f1, f2 = ScalarField(g, rng.standard_normal(g.shape)), ScalarField(g, rng.standard_normal(g.shape))
    lhs = gradient(a * f1 + b * f2).values
    rhs = a * gradient(f1).values + b * gradient(f2).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-11 * (1 + np.max(np.abs(rhs)))


# validation -----------------------------------------------------------------


def test_rejects_nonfinite_values(g32):
    bad = np.zeros(g32.shape)
    bad[3, 4] = np.nan
    with pytest.raises(NumericInputError, match=r"\(3, 4\)"):
        ScalarField(g32, bad)


def test_rejects_grid_mismatch(g32, g64):
    with pytest.raises(ShapeError):
        ScalarField(g32, np.ones(g32.shape)) + ScalarField(g64, np.ones(g64.shape))


@pytest.mark.parametrize("sizes", [(7, 8), (8,), (6, 6), (8, 8, 8, 8)])
def test_rejects_bad_grids(sizes):
    with pytest.raises(ShapeError):
        Grid(sizes)


def test_three_dimensional_grid():
    g = Grid((16, 16, 16))
    x, y, z = g.mesh()
    f = ScalarField(g, np.sin(x) * np.cos(2 * z))
    assert np.max(np.abs(laplacian(f).values + 5 * f.values)) < 1e-12
