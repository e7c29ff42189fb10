"""Calculus on the circle and the sphere: Laplace-Beltrami pseudo-inverses of
the explicit polynomial expressions, the spherical-divergence identity, and
the closed-form moment integrals, all cross-checked against quadrature."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rodflow.angular import CircleBasis, SphereBasis, make_basis, moment_integral

from conftest import random_tracefree_symmetric


def _nn_a(basis, a):
    n = basis.nodes
    return np.einsum("qi,qj,ij->q", n, n, a)


@pytest.mark.parametrize("dim", [2, 3])
def test_laplace_inverse_polynomial_identities(bases, dim):
    """The four closed-form pseudo-inverses of mean-zero polynomials in n,
    for 20 random trace-free symmetric tensors, to 1e-10."""
    basis = bases[dim]
    rng = np.random.default_rng(7)
    n = basis.nodes
    d = dim
    worst = 0.0
    for _ in range(20):
        a = random_tracefree_symmetric(rng, d)
        v = rng.standard_normal(d)

        # degree 1: inv(n.v) = -(1/(d-1)) n.v
        nv = n @ v
        worst = max(worst, np.max(np.abs(basis.laplace_inv(nv) + nv / (d - 1))))

        # degree 2: inv(nn:A) = -(1/2d) nn:A
        nna = _nn_a(basis, a)
        worst = max(worst, np.max(np.abs(basis.laplace_inv(nna) + nna / (2 * d))))

        # degree 3: inv(n(nn:A)) componentwise
        an = n @ a.T
        for i in range(d):
            lhs = basis.laplace_inv(n[:, i] * nna)
            ref = -(n[:, i] * nna + 4.0 / (d - 1) * an[:, i]) / (3 * (d + 1))
            worst = max(worst, np.max(np.abs(lhs - ref)))

        # degree 4: inv((nn:A)^2 - mean)
        tr_a2 = np.trace(a @ a)
        src = nna ** 2 - 2.0 * tr_a2 / (d * (d + 2))
        nna2 = _nn_a(basis, a @ a)
        ref = -(nna ** 2 + 4.0 / d * nna2
                - 2.0 / d * (1.0 / (d + 2) + 2.0 / d) * tr_a2) / (4 * (d + 2))
        worst = max(worst, np.max(np.abs(basis.laplace_inv(src) - ref)))
    assert worst < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_spherical_divergence_identity(bases, dim):
    """div_n(pi_n^perp A n g) = grad_n g . An - d (nn:A) g, checked against the
    nodal operator for random smooth g, and by integration by parts."""
    basis = bases[dim]
    rng = np.random.default_rng(11)
    n = basis.nodes
    for _ in range(20):
        a = random_tracefree_symmetric(rng, dim)
        v = rng.standard_normal(dim)
        b = random_tracefree_symmetric(rng, dim)
        g = n @ v + _nn_a(basis, b)          # smooth low-degree test function
        lhs = basis.spherical_divergence(a, g)
        an = n @ a.T
        rhs = np.einsum("qi,qi->q", basis.grad(g), an) - dim * _nn_a(basis, a) * g
        assert np.max(np.abs(lhs - basis.project(rhs))) < 1e-10

        # integration by parts: int phi div_n(pi^perp A n g) = -int grad phi . An g
        phi = _nn_a(basis, random_tracefree_symmetric(rng, dim))
        left = basis.integrate(phi * lhs)
        right = -basis.integrate(np.einsum("qi,qi->q", basis.grad(phi), an) * g)
        assert abs(left - right) < 1e-10


def test_spherical_divergence_rejects_trace():
    basis = CircleBasis(32)
    with pytest.raises(ValueError, match="trace-free"):
        basis.spherical_divergence(np.eye(2), np.ones(32))


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("order", [2, 4, 6])
def test_moment_integrals_match_quadrature(bases, dim, order):
    basis = bases[dim]
    rng = np.random.default_rng(3)
    n = basis.nodes
    for _ in range(10):
        idx = tuple(rng.integers(0, dim, size=order))
        vals = np.prod([n[:, i] for i in idx], axis=0)
        assert abs(basis.integrate(vals) - moment_integral(dim, idx)) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_odd_moments_vanish(bases, dim):
    basis = bases[dim]
    rng = np.random.default_rng(5)
    n = basis.nodes
    for order in (1, 3, 5):
        idx = tuple(rng.integers(0, dim, size=order))
        vals = np.prod([n[:, i] for i in idx], axis=0)
        assert abs(basis.integrate(vals)) < 1e-12
        assert moment_integral(dim, idx) == 0.0


@pytest.mark.parametrize("dim", [2, 3])
def test_second_and_fourth_moment_tensor_identities(bases, dim):
    """int (nn - Id/d) (nn:A)^k dn for k = 0, 1, 2 against the closed forms."""
    basis = bases[dim]
    rng = np.random.default_rng(13)
    d = dim
    n = basis.nodes
    nn_dev = np.einsum("qi,qj->qij", n, n) - np.eye(d) / d
    w = basis.weights
    for _ in range(10):
        a = random_tracefree_symmetric(rng, d)
        nna = _nn_a(basis, a)
        m0 = np.einsum("q,qij->ij", w, nn_dev)
        m1 = np.einsum("q,q,qij->ij", w, nna, nn_dev)
        m2 = np.einsum("q,q,qij->ij", w, nna ** 2, nn_dev)
        assert np.max(np.abs(m0)) < 1e-12
        assert np.max(np.abs(m1 - 2.0 * basis.area / (d * (d + 2)) * a)) < 1e-10
        ref2 = 8.0 * basis.area / (d * (d + 2) * (d + 4)) \
            * (a @ a - np.trace(a @ a) / d * np.eye(d))
        assert np.max(np.abs(m2 - ref2)) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_laplace_of_monomials(bases, dim):
    """Lap(n_i n_j) = 2 delta_ij - 2d n_i n_j."""
    basis = bases[dim]
    n = basis.nodes
    for i in range(dim):
        for j in range(dim):
            lhs = basis.laplace(n[:, i] * n[:, j])
            rhs = 2.0 * (i == j) - 2.0 * dim * n[:, i] * n[:, j]
            assert np.max(np.abs(lhs - rhs)) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_laplace_inv_is_inverse_on_mean_zero(bases, dim):
    basis = bases[dim]
    rng = np.random.default_rng(17)
    a = random_tracefree_symmetric(rng, dim)
    g = _nn_a(basis, a) + basis.nodes @ rng.standard_normal(dim)
    assert np.max(np.abs(basis.laplace(basis.laplace_inv(g)) - g)) < 1e-10
    # and the inverse is mean-zero itself
    assert abs(basis.mean(basis.laplace_inv(g))) < 1e-12


def test_laplace_inv_rejects_nonzero_mean(circle, sphere):
    for basis in (circle, sphere):
        with pytest.raises(ValueError, match="mean-zero"):
            basis.laplace_inv(np.ones(len(basis.weights)))


def test_circle_rotation_equivariance():
    """Rotating the tensor argument rotates the angular profile."""
    basis = CircleBasis(64)
    rng = np.random.default_rng(23)
    a = random_tracefree_symmetric(rng, 2)
    g = np.exp(np.cos(basis.phi))  # generic smooth profile, band-limited enough
    g = basis.project(g, 20)
    beta = 2.0 * np.pi * 5 / 64   # shift by 5 grid nodes: exact on the grid
    rot = np.array([[np.cos(beta), -np.sin(beta)], [np.sin(beta), np.cos(beta)]])
    out = basis.spherical_divergence(rot @ a @ rot.T, np.roll(g, 5))
    ref = np.roll(basis.spherical_divergence(a, g), 5)
    assert np.max(np.abs(out - ref)) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_transform_roundtrip(bases, dim):
    basis = bases[dim]
    rng = np.random.default_rng(29)
    vals = basis.project(rng.standard_normal(len(basis.weights)))
    # analysis-synthesis is the identity on band-limited data, and projection
    # is idempotent
    assert np.max(np.abs(basis.from_coeffs(basis.to_coeffs(vals)) - vals)) < 1e-10
    assert np.max(np.abs(basis.project(vals) - vals)) < 1e-10


@given(st.integers(3, 16), st.integers(0, 100))
@settings(max_examples=25, deadline=None)
def test_circle_integrate_exact_for_trig(k, seed):
    """Trapezoid quadrature on the circle is exact for band-limited trig."""
    basis = CircleBasis(64)
    rng = np.random.default_rng(seed)
    amp, phase = rng.uniform(-2, 2), rng.uniform(0, 2 * np.pi)
    vals = amp * np.cos(k * basis.phi + phase)
    assert abs(basis.integrate(vals)) < 1e-12


def test_make_basis_dispatch():
    assert isinstance(make_basis(2, 16), CircleBasis)
    assert make_basis(2, 16).nphi == 32
    b3 = make_basis(3, 6)
    assert isinstance(b3, SphereBasis) and b3.lmax == 6
    with pytest.raises(ValueError):
        make_basis(4, 8)


@pytest.mark.parametrize("dim", [2, 3])
def test_quadrature_weights_positive_and_sum_to_area(bases, dim):
    basis = bases[dim]
    assert np.all(basis.weights > 0)
    assert abs(basis.weights.sum() - basis.area) < 1e-12
