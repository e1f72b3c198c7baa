import csv

import numpy as np
import pytest
from scipy.linalg import expm

from nlc.compressible import run
from nlc.imex import StepControl
from nlc.picard import LinearizationInput, iterate_metric, linearized_step, picard_iterate
from nlc.spectral import Grid, ScalarField, VectorField
from nlc.state import (
    CompressibleState,
    ModelParams,
    PreconditionError,
    baseline,
    constant_director,
    random_band_limited,
    well_prepared_initial_data,
)


def frozen_rest(g, n):
    return LinearizationInput(ScalarField(g, np.ones(g.shape)), VectorField(g, np.zeros((2,) + g.shape)), n)


def equilibrium(g):
    return CompressibleState(
        0.0, ScalarField(g, np.ones(g.shape)), VectorField(g, np.zeros((2,) + g.shape)), constant_director(g), ModelParams()
    )


def test_equilibrium_trajectory_is_constant(g32):
    eq = equilibrium(g32)
    traj = linearized_step(frozen_rest(g32, eq.n), eq, StepControl(1e-3, 5e-3))
    assert len(traj) == 6
    for s in traj:
        assert np.max(np.abs(s.rho.values - 1)) == 0 and np.max(np.abs(s.u.values)) == 0
        assert np.array_equal(s.n.values, eq.n.values)


def acoustic_exact(g, params, sig, u, t):
    """Per-mode exp(M t) for sigma_t = -div u, u_t = -lam^2 P'(1) grad sigma + mu lap u + (kappa+mu) grad div u."""
    sh, uh = g.fft(sig), g.fft(u)
    c2 = params.law.p_prime(1.0)
    kx, ky = (np.broadcast_to(a, sh.shape) for a in g.k_odd)
    k2 = np.broadcast_to(g.k2, sh.shape)
    out_s, out_u = np.zeros_like(sh), np.zeros_like(uh)
    for idx in np.ndindex(sh.shape):
        k = np.array([kx[idx], ky[idx]])
        M = np.zeros((3, 3), complex)
        M[0, 1:] = -1j * k
        M[1:, 0] = -1j * params.lam**2 * c2 * k
        M[1:, 1:] = -params.mu * k2[idx] * np.eye(2) - (params.kappa + params.mu) * np.outer(k, k)
        y = expm(M * t) @ np.array([sh[idx], uh[0][idx], uh[1][idx]])
        out_s[idx], out_u[0][idx], out_u[1][idx] = y
    return g.ifft(out_s), g.ifft(out_u)


def test_frozen_rest_data_matches_matrix_exponential():
    g = Grid((16, 16))
    p = ModelParams(lam=2.0, kappa=0.3)
    rng = np.random.default_rng(0)
    sig = random_band_limited(g, rng, 1, 2)[0]
    sig *= 0.05 / np.max(np.abs(sig))
    u = random_band_limited(g, rng, 2, 2)
    u *= 0.1 / np.max(np.abs(u))
    n = constant_director(g)
    U0 = CompressibleState(0.0, ScalarField(g, 1 + sig), VectorField(g, u), n, p)
    T = 0.02
    final = linearized_step(frozen_rest(g, n), U0, StepControl(5e-5, T))[-1]
    es, eu = acoustic_exact(g, p, sig, u, T)
    assert np.max(np.abs(final.rho.values - 1 - es)) < 1e-8
    assert np.max(np.abs(final.u.values - eu)) < 1e-8
    assert np.array_equal(final.n.values, n.values)


@pytest.fixture(scope="module")
def start():
    g = Grid((32, 32))
    u0, n0 = baseline(g)
    return well_prepared_initial_data(g, ModelParams(lam=10.0), 0.05, 0, u0, n0)


@pytest.mark.parametrize("dt", [1e-3, 5e-4])
def test_nonlinear_trajectory_is_a_fixed_point(start, dt):
    ctl = StepControl(dt, 0.02, renormalize_director=False)
    nonlinear = run(start, ctl)
    again = linearized_step(nonlinear, start, ctl)
    assert iterate_metric(again, nonlinear) < 1e-24


def test_picard_from_equilibrium_stops_at_once(g32):
    eq = equilibrium(g32)
    _, rep = picard_iterate(eq, 0.01, ctl=StepControl(1e-3, 0.01))
    assert rep.iterates == 1 and rep.diff_norms == [0.0] and rep.converged


def test_contraction_and_its_horizon_dependence(start):
    taus = []
    for T0 in (0.02, 0.01):
        _, rep = picard_iterate(start, T0, ctl=StepControl(T0 / 20, T0, renormalize_director=False), tol=1e-20)
        assert rep.converged and not rep.non_contraction
        assert all(b < a for a, b in zip(rep.diff_norms, rep.diff_norms[1:]))
        taus.append(rep.tau_estimate)
    assert taus[0] < 1 and taus[1] <= taus[0]


def test_converged_iterate_matches_nonlinear_run(start):
    ctl = StepControl(1e-3, 0.02, renormalize_director=False)
    traj, rep = picard_iterate(start, 0.02, 20, ctl, tol=1e-26)
    assert rep.converged
    assert iterate_metric(traj, run(start, ctl)) < 1e-24


def test_report_csv(tmp_path, start):
    _, rep = picard_iterate(start, 0.01, ctl=StepControl(1e-3, 0.01))
    path = tmp_path / "c.csv"
    rep.write_csv(path)
    rep.write_csv(path, append=True)
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["T0", "lambda", "iter", "diff_metric", "ratio"]
    assert len(rows) == 2 * rep.iterates
    assert rows[0]["ratio"] == "nan" and float(rows[1]["ratio"]) == pytest.approx(rep.ratios[0])


def test_frozen_density_outside_window_is_rejected(g32):
    with pytest.raises(PreconditionError):
        LinearizationInput(ScalarField(g32, np.full(g32.shape, 1.6)), VectorField(g32, np.zeros((2,) + g32.shape)), constant_director(g32))
