"""Symbolic reference evaluations used as independent oracles."""

import numpy as np
import sympy as sp

x, y = sp.symbols("x y", real=True)


def director_from_angles(polar, azim):
    return sp.Matrix([sp.sin(polar) * sp.cos(azim), sp.sin(polar) * sp.sin(azim), sp.cos(polar)])


def lap(f):
    return sp.diff(f, x, 2) + sp.diff(f, y, 2)


def grad(f):
    return sp.Matrix([sp.diff(f, x), sp.diff(f, y)])


def stress_div(n):
    """sum_i lap(n_i) grad(n_i)."""
    return sum((lap(n[i]) * grad(n[i]) for i in range(3)), sp.zeros(2, 1))


def compressible_rhs(rho, u, n, mu, kappa, nu, theta, lam, gamma):
    """Nonconservative right-hand side for (rho, u, n) as sympy expressions."""
    div_u = sp.diff(u[0], x) + sp.diff(u[1], y)
    d_rho = -(sp.diff(rho * u[0], x) + sp.diff(rho * u[1], y))
    P = rho**gamma
    S = stress_div(n)
    d_u = []
    for i, xi in enumerate((x, y)):
        adv = u[0] * sp.diff(u[i], x) + u[1] * sp.diff(u[i], y)
        visc = mu * lap(u[i]) + (kappa + mu) * sp.diff(div_u, xi)
        d_u.append(-adv - lam**2 * sp.diff(P, xi) / rho + (visc - nu * S[i]) / rho)
    gn2 = sum(sp.diff(n[i], v) ** 2 for i in range(3) for v in (x, y))
    d_n = [-(u[0] * sp.diff(n[i], x) + u[1] * sp.diff(n[i], y)) + theta * (lap(n[i]) + gn2 * n[i]) for i in range(3)]
    return d_rho, d_u, d_n


def evaluate(expr, grid):
    X, Y = grid.mesh()
    f = sp.lambdify((x, y), expr, "numpy")
    return np.broadcast_to(np.asarray(f(X, Y), dtype=float), grid.shape).copy()
