"""Pseudo-spectral toolkit on the periodic unit square: exact derivatives of
band-limited fields, Leray projection, Stokes solves (constant and variable
viscosity), and the norm helpers."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rodflow.spectral2d import Grid2D


@pytest.fixture(scope="module")
def grid():
    return Grid2D(32)


def _trig(grid, k1, k2, phase=0.3):
    return np.cos(2 * np.pi * (k1 * grid.x + k2 * grid.y) + phase)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(15)
    with pytest.raises(ValueError):
        Grid2D(2)


@given(st.integers(-5, 5), st.integers(-5, 5))
@settings(max_examples=20, deadline=None)
def test_derivatives_exact_on_trig(k1, k2):
    grid = Grid2D(32)
    f = _trig(grid, k1, k2)
    fx = -2 * np.pi * k1 * np.sin(2 * np.pi * (k1 * grid.x + k2 * grid.y) + 0.3)
    assert np.max(np.abs(grid.dx(f, 0) - fx)) < 1e-10
    lap = -(2 * np.pi) ** 2 * (k1 ** 2 + k2 ** 2) * f
    assert np.max(np.abs(grid.laplacian(f) - lap)) < 1e-8


def test_grad_and_div_are_adjoint(grid):
    rng = np.random.default_rng(2)
    f = grid.dealias(rng.standard_normal((32, 32)))
    v = grid.dealias(rng.standard_normal((32, 32, 2)))
    lhs = np.sum(grid.grad(f) * v) / 32 ** 2
    rhs = -np.sum(f * grid.div(v)) / 32 ** 2
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_hessian_symmetry_and_trace(grid):
    f = _trig(grid, 2, -1)
    h = grid.hessian(f)
    assert np.max(np.abs(h - np.swapaxes(h, -1, -2))) < 1e-10
    assert np.max(np.abs(h[..., 0, 0] + h[..., 1, 1] - grid.laplacian(f))) < 1e-10


def test_leray_projection(grid):
    rng = np.random.default_rng(3)
    u = grid.dealias(rng.standard_normal((32, 32, 2)))
    pu = grid.leray(u)
    assert np.max(np.abs(grid.div(pu))) < 1e-10
    # idempotent, and fixes divergence-free fields
    assert np.max(np.abs(grid.leray(pu) - pu)) < 1e-12
    # gradients are annihilated
    g = grid.grad(_trig(grid, 1, 2))
    assert np.max(np.abs(grid.leray(g))) < 1e-12


def test_stokes_solve_manufactured(grid):
    """u = curl psi with known -Lap u; the pressure gradient part of the
    force is irrelevant."""
    psi = _trig(grid, 1, 2)
    u = np.stack([-grid.dx(psi, 1), grid.dx(psi, 0)], axis=-1)
    nu = 1.7
    force = -nu * np.stack([grid.laplacian(u[..., 0]),
                            grid.laplacian(u[..., 1])], axis=-1)
    force = force + grid.grad(_trig(grid, 3, 1))   # arbitrary gradient
    sol = grid.stokes_solve(force, viscosity=nu)
    assert np.max(np.abs(sol - u)) < 1e-10


def test_variable_viscosity_stokes_consistency(grid):
    """At constant coefficient the Picard solve reduces to the plain solve;
    with variable coefficient the residual of the strong form vanishes."""
    rng = np.random.default_rng(5)
    # zero-mean force: the solver fixes mean(u) = 0 and drops the mean force
    force = grid.remove_mean(grid.leray(grid.dealias(rng.standard_normal((32, 32, 2)))))
    u0, it = grid.variable_viscosity_stokes(force, np.full((32, 32), 0.3))
    assert it <= 2
    assert np.max(np.abs(u0 - grid.stokes_solve(force, viscosity=1.3))) < 1e-10

    coeff = 0.2 * _trig(grid, 1, 0)
    u, _ = grid.variable_viscosity_stokes(force, coeff)
    stress = 2.0 * (1.0 + coeff)[..., None, None] * grid.sym_grad(u)
    resid = grid.leray(grid.div_tensor(stress) + force)
    assert grid.l2_norm(resid) < 1e-6 * grid.l2_norm(force)


def test_variable_viscosity_stokes_divergence_error(grid):
    force = grid.grad(_trig(grid, 1, 1))  # pure gradient: solution 0
    with pytest.raises(RuntimeError, match="converge"):
        grid.variable_viscosity_stokes(np.ones((32, 32, 2)) * np.nan,
                                       np.zeros((32, 32)), maxiter=3)


def test_norms(grid):
    f = np.sqrt(2.0) * _trig(grid, 1, 0, phase=0.0)
    assert grid.l2_norm(f) == pytest.approx(1.0, rel=1e-12)
    assert grid.h1_seminorm(f) == pytest.approx(2 * np.pi, rel=1e-12)
    # H^-1 of a k = 1 mode divides by |k| = 2 pi
    assert grid.hminus1_norm(f) == pytest.approx(1.0 / (2 * np.pi), rel=1e-12)
    # constants have zero H^-1 (zero-mean part only)
    assert grid.hminus1_norm(np.ones((32, 32))) == 0.0


def test_dealias_removes_high_modes(grid):
    f = _trig(grid, 15, 0)
    assert np.max(np.abs(grid.dealias(f))) < 1e-12
    g = _trig(grid, 5, 5)
    assert np.max(np.abs(grid.dealias(g) - g)) < 1e-12


def test_mean_helpers(grid):
    f = 2.5 + _trig(grid, 1, 1)
    assert grid.mean(f) == pytest.approx(2.5, abs=1e-12)
    assert grid.mean(grid.remove_mean(f)) == pytest.approx(0.0, abs=1e-12)
