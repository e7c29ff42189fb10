"""The explicit angular correctors g1, g2, g3: defining-equation residuals on
exact trigonometric input fields, stress-integral identities, and the
Rivlin-Ericksen helpers."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rodflow.analytic_fields import (TrigScalar, divfree_vector, dot, evaluate,
                                     grad, random_scalar)
from rodflow.closures import (deviatoric, g1_explicit, g1_homogeneous,
                              g1_kernel, g1_kernel_grad_n, g2_explicit,
                              g2_homogeneous, g3_homogeneous_solve,
                              lower_convected_step, p1_perp, rivlin_ericksen,
                              rivlin_ericksen_a1, sigma1, sigma2)
from rodflow.params import (ModelParams, second_order_coeffs, sphere_area,
                            third_order_coeffs)

from conftest import random_tracefree_symmetric


def _fields(rng, d, u0_swim, pe):
    """Random smooth input fields with exact derivatives, plus the convected
    source tensor; the density time derivative is taken PDE-exact so that the
    corrector identities close."""
    Z = TrigScalar.zero(d)
    rho0 = 1.0 + random_scalar(rng, d, amplitude=0.4)
    rho1 = random_scalar(rng, d, amplitude=0.5)
    u0 = divfree_vector(rng, d, amplitude=0.3)
    w = divfree_vector(rng, d, amplitude=0.3)      # arbitrary d_t u0
    u1 = divfree_vector(rng, d, amplitude=0.3)
    gradu0 = [[u0[i].deriv(j) for j in range(d)] for i in range(d)]
    D0 = [[(gradu0[i][j] + gradu0[j][i]) * 0.5 for j in range(d)] for i in range(d)]
    Dw = [[(w[i].deriv(j) + w[j].deriv(i)) * 0.5 for j in range(d)] for i in range(d)]
    D1 = [[(u1[i].deriv(j) + u1[j].deriv(i)) * 0.5 for j in range(d)] for i in range(d)]
    rho0_t = rho0.laplacian() * (1.0 / pe) - dot(u0, grad(rho0))
    T = [[(rho0 * D0[i][j]) * 2.0 for j in range(d)] for i in range(d)]
    T_t = [[(rho0_t * D0[i][j] + rho0 * Dw[i][j]) * 2.0 for j in range(d)] for i in range(d)]

    def conv(s, s_t):
        return s_t - s.laplacian() * (1.0 / pe) + dot(u0, grad(s))

    LT = [[conv(T[i][j], T_t[i][j]) for j in range(d)] for i in range(d)]
    A2p = [[LT[i][j]
            + sum((gradu0[k][i] * T[k][j] for k in range(d)), Z)
            + sum((T[i][k] * gradu0[k][j] for k in range(d)), Z)
            for j in range(d)] for i in range(d)]
    return dict(rho0=rho0, rho1=rho1, u0=u0, u1=u1, gradu0=gradu0, D0=D0,
                D1=D1, rho0_t=rho0_t, T=T, T_t=T_t, LT=LT, A2p=A2p, conv=conv)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_g1_defining_equation(bases, dim, seed):
    """Lap_n g1 = U0 n.grad(rho0) + div_n(pi^perp (grad u0) n rho0),
    pointwise at random spatial points."""
    basis = bases[dim]
    rng = np.random.default_rng(seed)
    F = _fields(rng, dim, u0_swim=0.4, pe=1.7)
    X = rng.uniform(0, 1, size=(4, dim))
    rho0v = evaluate(F["rho0"], X)
    g_rho0 = evaluate(grad(F["rho0"]), X)
    D0v = evaluate(F["D0"], X)
    gu0v = evaluate(F["gradu0"], X)
    g1 = g1_explicit(basis, u0_swim=0.4, rho0=rho0v, grad_rho0=g_rho0, d_u0=D0v)
    lhs = basis.laplace(g1)
    n = basis.nodes
    rhs = 0.4 * np.einsum("qi,...i->...q", n, g_rho0) \
        + basis.spherical_divergence(gu0v, np.broadcast_to(rho0v[..., None],
                                                           rho0v.shape + (len(n),)))
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_g2_defining_equation(bases, dim, seed):
    """Lap_n g2 matches the full first-order hierarchy right-hand side
    (convected g1 derivative + swim transport + rotation sources)."""
    basis = bases[dim]
    d = dim
    U0 = 0.4
    rng = np.random.default_rng(seed)
    F = _fields(rng, d, u0_swim=U0, pe=1.7)
    X = rng.uniform(0, 1, size=(4, d))
    ev = lambda o: evaluate(o, X)
    rho0, rho1_s, D0, LT, conv = F["rho0"], F["rho1"], F["D0"], F["LT"], F["conv"]
    rho0v, rho1v = ev(rho0), ev(rho1_s)
    g_rho0, g_rho1 = ev(grad(rho0)), ev(grad(rho1_s))
    hess = ev([[rho0.deriv(i).deriv(j) for j in range(d)] for i in range(d)])
    D0v, D1v, gu0v, a2pv = ev(D0), ev(F["D1"]), ev(F["gradu0"]), ev(F["A2p"])
    gD0 = ev([[[D0[i][j].deriv(k) for k in range(d)] for j in range(d)]
              for i in range(d)])

    g1 = g1_explicit(basis, u0_swim=U0, rho0=rho0v, grad_rho0=g_rho0, d_u0=D0v)
    g2 = g2_explicit(basis, u0_swim=U0, rho0=rho0v, grad_rho0=g_rho0,
                     hess_rho0=hess, rho1=rho1v, grad_rho1=g_rho1,
                     d_u0=D0v, d_u1=D1v, grad_d_u0=gD0, a2p=a2pv)
    lhs = basis.laplace(g2)

    # convected derivative of g1 (linear in its two slots)
    conv_grad_rho0 = ev([conv(rho0.deriv(i), F["rho0_t"].deriv(i)) for i in range(d)])
    conv_rho_d = ev([[LT[i][j] * 0.5 for j in range(d)] for i in range(d)])
    conv_g1 = g1_kernel(basis, U0, conv_grad_rho0, conv_rho_d)

    # U0 n.grad_x of (rho1 + g1), mean part removed (solvability projection)
    n = basis.nodes
    ndg = np.einsum("qk,...k->...q", n, g_rho1)
    for k in range(d):
        veck = hess[..., :, k]
        matk = ev([[(rho0 * D0[i][j]).deriv(k) for j in range(d)] for i in range(d)])
        ndg = ndg + n[:, k] * g1_kernel(basis, U0, veck, matk)
    swim = p1_perp(basis, U0 * ndg)

    # rotation sources div_n(pi^perp grad(u1) n rho0) and
    # div_n(pi^perp grad(u0) n (rho1 + g1))
    nn_d1 = np.einsum("qi,qj,...ij->...q", n, n, D1v)
    nn_d0 = np.einsum("qi,qj,...ij->...q", n, n, D0v)
    rot_u1 = -d * rho0v[..., None] * nn_d1
    rot_u0 = -d * nn_d0 * (rho1v[..., None] + g1)
    gn_g1 = g1_kernel_grad_n(basis, U0, g_rho0, rho0v[..., None, None] * D0v)
    gun = np.einsum("...ij,qj->...qi", gu0v, n)
    stretch = np.einsum("...qi,...qi->...q", gn_g1, gun)

    rhs = conv_g1 + swim + rot_u1 + rot_u0 + stretch
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * max(1.0, scale)


@pytest.mark.parametrize("dim", [2, 3])
def test_sigma1_of_g1_closed_form(bases, dim):
    """sigma1[g1] = lam*theta*omega_d/(d(d+2)) rho0 D(u0), and equals
    (theta/2) sigma2[rho0, grad u0], to 1e-10."""
    basis = bases[dim]
    d = dim
    lam, theta = 0.7, 6.0
    rng = np.random.default_rng(31)
    w = sphere_area(d)
    for _ in range(10):
        a = random_tracefree_symmetric(rng, d)
        d_u0 = 0.5 * (a + a.T)
        rho0 = rng.uniform(0.5, 1.5) / w     # per-solid-angle density
        g1 = g1_explicit(basis, u0_swim=0.6, rho0=rho0,
                         grad_rho0=rng.standard_normal(d), d_u0=d_u0)
        s1 = sigma1(basis, g1, lam=lam, theta=theta)
        ref = lam * theta * w / (d * (d + 2)) * rho0 * d_u0
        assert np.max(np.abs(s1 - ref)) < 1e-10
        # the same object through the viscous-stress integral of the isotropic
        # state: sigma1[g1] = (theta/2) sigma2[rho0, grad u0]
        iso = np.full(len(basis.weights), rho0)
        s2 = sigma2(basis, iso, a, lam=lam)
        assert np.max(np.abs(s1 - 0.5 * theta * deviatoric(s2))) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_homogeneous_correctors_match_explicit(bases, dim):
    """g1/g2 at uniform density, no swimming, Pe = inf agree with the general
    kernels evaluated on constant fields."""
    basis = bases[dim]
    d = dim
    rng = np.random.default_rng(37)
    a = random_tracefree_symmetric(rng, d)
    w = sphere_area(d)
    g1h = g1_homogeneous(basis, a)
    g1e = g1_explicit(basis, u0_swim=0.0, rho0=1.0 / w,
                      grad_rho0=np.zeros(d), d_u0=0.5 * (a + a.T))
    assert np.max(np.abs(g1h - g1e)) < 1e-12

    d_u0 = 0.5 * (a + a.T)
    a1 = 2.0 * d_u0
    a2 = a.T @ a1 + a1 @ a
    g2h = g2_homogeneous(basis, a)
    g2e = g2_explicit(basis, u0_swim=0.0, rho0=1.0 / w, grad_rho0=np.zeros(d),
                      hess_rho0=np.zeros((d, d)), rho1=0.0, grad_rho1=np.zeros(d),
                      d_u0=d_u0, d_u1=np.zeros((d, d)),
                      grad_d_u0=np.zeros((d, d, d)), a2p=a2 / w)
    assert np.max(np.abs(g2h - g2e)) < 1e-12


def test_g3_poisson_stress_reproduces_third_order_coefficients(sphere):
    """Unit steady shear, d = 3, Pe = inf: sigma1[g3] + sigma2[g2] has shear
    component 2(kappa2 + kappa3) and no diagonal part."""
    m = ModelParams(re=0, pe=np.inf, eps=1.0, lam=0.1, theta=6.0,
                    u0_swim=0.0, dim=3)
    gu = np.zeros((3, 3))
    gu[0, 1] = 1.0
    g2 = g2_homogeneous(sphere, gu)
    g3 = g3_homogeneous_solve(sphere, gu, g2)
    s = sigma1(sphere, g3, lam=m.lam, theta=m.theta) + sigma2(sphere, g2, gu, lam=m.lam)
    c3 = third_order_coeffs(m)
    assert abs(s[0, 1] - 2.0 * (c3.kappa2 + c3.kappa3)) < 1e-6
    assert np.max(np.abs(np.diag(s))) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_order_eps_homogeneous_stress_gives_gamma_coefficients(bases, dim):
    """sigma1[g2] + sigma2[g1] at unit shear carries the normal-stress
    combinations -2*gamma1 and 2*gamma1 + gamma2 exactly."""
    basis = bases[dim]
    m = ModelParams(re=0, pe=np.inf, eps=1.0, lam=0.4, theta=3.0,
                    u0_swim=0.0, dim=dim)
    gu = np.zeros((dim, dim))
    gu[0, 1] = 1.0
    g1 = g1_homogeneous(basis, gu)
    g2 = g2_homogeneous(basis, gu)
    s = sigma1(basis, g2, lam=m.lam, theta=m.theta) + sigma2(basis, g1, gu, lam=m.lam)
    c = second_order_coeffs(m, normalization="homogeneous")
    assert s[0, 0] - s[1, 1] == pytest.approx(-2.0 * c.gamma1, abs=1e-12)
    if dim == 3:
        assert s[1, 1] - s[2, 2] == pytest.approx(2.0 * c.gamma1 + c.gamma2, abs=1e-12)
    assert abs(s[0, 1]) < 1e-12   # no odd-order shear correction


def test_sigma1_isotropic_vanishes(circle):
    iso = np.full(circle.nphi, 1.0 / circle.area)
    assert np.max(np.abs(sigma1(circle, iso, lam=0.5, theta=6.0))) < 1e-14


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_p1_perp_idempotent_and_mean_zero(seed):
    basis = CircleBasis = __import__("rodflow.angular", fromlist=["CircleBasis"]).CircleBasis(32)
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(32)
    p = p1_perp(basis, vals)
    assert abs(basis.mean(p)) < 1e-12
    assert np.max(np.abs(p1_perp(basis, p) - p)) < 1e-12


@given(st.integers(0, 10 ** 6), st.integers(2, 3))
@settings(max_examples=30, deadline=None)
def test_deviatoric_and_a1_properties(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    dev = deviatoric(a)
    assert abs(np.trace(dev)) < 1e-12 * max(1.0, np.max(np.abs(a)))
    a1 = rivlin_ericksen_a1(a)
    assert np.max(np.abs(a1 - a1.T)) < 1e-12


def test_rivlin_ericksen_shear_sequence():
    """Steady simple shear: A2 = 2 kappa^2 e2 (x) e2 in the lower-convected
    sequence; A3 = 0."""
    kappa = 0.7
    gu = np.array([[0.0, kappa], [0.0, 0.0]])
    a1, a2, a3 = rivlin_ericksen(gu, 3)
    assert np.max(np.abs(a1 - np.array([[0, kappa], [kappa, 0]]))) < 1e-14
    assert np.max(np.abs(a2 - np.array([[0, 0], [0, 2 * kappa ** 2]]))) < 1e-14
    assert np.max(np.abs(a3)) < 1e-14


def test_lower_convected_step_material_part():
    rng = np.random.default_rng(41)
    a = rng.standard_normal((2, 2))
    gu = rng.standard_normal((2, 2))
    mat = rng.standard_normal((2, 2))
    assert np.allclose(lower_convected_step(a, gu, mat),
                       lower_convected_step(a, gu) + mat)
