"""Explicit small-Weissenberg angular closures and the kinetic stress integrals.

The corrector hierarchy writes the orientation distribution as
f = rho + eps*g1 + eps^2*g2 + eps^3*g3 + ..., with each g_k an explicit
angular polynomial in n driven by spatial moments of the flow and density.
This module evaluates those correctors on an angular basis, computes the
two stress integrals sigma1 (elastic/active) and sigma2 (viscous), and
provides the Rivlin-Ericksen tensors used by the effective ordered-fluid
stress laws.

Density conventions: every density argument here is normalized per unit
solid angle (uniform suspension = 1/omega_d), so the homogeneous helpers
take no density argument at all.  Velocity-gradient arguments named ``d_u*``
must be the symmetric part D(u); arguments named ``grad_u*`` are the full
gradient with (grad u)_{ij} = d_j u_i.

Shapes: angular values carry the node axis LAST; spatial/batch axes lead.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "deviatoric",
    "p1_perp",
    "g1_kernel",
    "g1_kernel_grad_n",
    "g1_explicit",
    "g2_explicit",
    "g1_homogeneous",
    "g2_homogeneous",
    "g3_homogeneous_solve",
    "sigma1",
    "sigma2",
    "a2_prime",
    "rivlin_ericksen_a1",
    "lower_convected_step",
    "rivlin_ericksen",
]


def deviatoric(a: np.ndarray) -> np.ndarray:
    """Trace-free part of a (..., d, d) tensor field."""
    a = np.asarray(a, dtype=float)
    d = a.shape[-1]
    tr = np.trace(a, axis1=-2, axis2=-1)
    return a - tr[..., None, None] * np.eye(d) / d


def p1_perp(basis, vals):
    """Project orthogonally to constants on the sphere (remove the angular mean).

    This is the solvability projection for the Laplace-Beltrami solves in the
    corrector hierarchy.
    """
    return vals - basis.mean(vals)[..., None]


# ---------------------------------------------------------------------------
# first corrector
# ---------------------------------------------------------------------------

def g1_kernel(basis, u0_swim, vec, mat):
    """The bilinear form underlying g1:  -U0/(d-1) n.vec + 1/2 (n(x)n):mat.

    g1 itself is g1_kernel(grad rho0, rho0 D(u0)); because the form is linear
    in (vec, mat), any linear operator L acting in (t, x) gives
    L g1 = g1_kernel(L grad rho0, L(rho0 D(u0))).
    """
    n = basis.nodes
    d = basis.dim
    ndot = np.einsum("qi,...i->...q", n, np.asarray(vec, dtype=float))
    nnm = np.einsum("qi,qj,...ij->...q", n, n, np.asarray(mat, dtype=float))
    return -u0_swim / (d - 1) * ndot + 0.5 * nnm


def g1_kernel_grad_n(basis, u0_swim, vec, mat):
    """Surface gradient of g1_kernel, shape (..., nnodes, d).

    grad_n(n.v) = pi_n^perp v and grad_n(1/2 nn:M) = pi_n^perp M n for
    symmetric M, so this is -U0/(d-1) pi^perp vec + pi^perp (mat n).
    """
    n = basis.nodes
    d = basis.dim
    vec = np.asarray(vec, dtype=float)
    mat = np.asarray(mat, dtype=float)
    mn = np.einsum("...ij,qj->...qi", mat, n)
    w = -u0_swim / (d - 1) * vec[..., None, :] + mn
    # tangential projection pi_n^perp w = w - (n.w) n
    nw = np.einsum("qi,...qi->...q", n, w)
    return w - nw[..., None] * n


def g1_explicit(basis, *, u0_swim, rho0, grad_rho0, d_u0):
    """First corrector g1 = -U0/(d-1) n.grad(rho0) + 1/2 (nn):rho0 D(u0)."""
    rho0 = np.asarray(rho0, dtype=float)
    mat = rho0[..., None, None] * np.asarray(d_u0, dtype=float)
    vals = g1_kernel(basis, u0_swim, grad_rho0, mat)
    return basis.project(vals, 2)


# ---------------------------------------------------------------------------
# second corrector
# ---------------------------------------------------------------------------

def g2_explicit(basis, *, u0_swim, rho0, grad_rho0, hess_rho0,
                rho1, grad_rho1, d_u0, d_u1, grad_d_u0, a2p):
    """Second corrector g2 (band limit 4 in n).

    Arguments beyond the g1 set:
      hess_rho0  (..., d, d)     Hessian of rho0,
      rho1, grad_rho1            first density corrector and its gradient,
      d_u1       (..., d, d)     D(u1),
      grad_d_u0  (..., d, d, d)  grad_d_u0[..., i, j, k] = d_k D(u0)_{ij},
      a2p        (..., d, d)     the convected tensor
                                 (d_t - Lap/Pe + u0.grad)(2 rho0 D(u0))
                                 + (grad u0)^T (2 rho0 D) + (2 rho0 D)(grad u0),
                                 supplied by the caller (see a2_prime).
    """
    n = basis.nodes
    d = basis.dim
    U0 = u0_swim
    rho0 = np.asarray(rho0, dtype=float)
    rho1 = np.asarray(rho1, dtype=float)
    d_u0 = np.asarray(d_u0, dtype=float)
    d_u1 = np.asarray(d_u1, dtype=float)
    grad_d_u0 = np.asarray(grad_d_u0, dtype=float)
    a2p = np.asarray(a2p, dtype=float)

    # degree-1 swim term driven by rho1
    t1 = -U0 / (d - 1) * np.einsum("qi,...i->...q", n, np.asarray(grad_rho1, dtype=float))

    # degree-2 block: -(1/2d) (nn - Id/d) : M
    m = (0.25 * a2p
         - rho0[..., None, None] * (d_u0 @ d_u0)
         - d * rho0[..., None, None] * d_u1
         - d * rho1[..., None, None] * d_u0
         - U0 ** 2 / (d - 1) * np.asarray(hess_rho0, dtype=float))
    nnm = np.einsum("qi,qj,...ij->...q", n, n, m)
    trm = np.trace(m, axis1=-2, axis2=-1)
    t2 = -1.0 / (2 * d) * (nnm - trm[..., None] / d)

    # degree-1/3 swim-shear coupling through the vector
    # V(n) = n (nn:D0) + 4/(d-1) D0 n
    nnd = np.einsum("qi,qj,...ij->...q", n, n, d_u0)
    gr = np.asarray(grad_rho0, dtype=float)
    grad_dot_v = (np.einsum("qi,...i->...q", n, gr) * nnd
                  + 4.0 / (d - 1) * np.einsum("...i,...ij,qj->...q", gr, d_u0, n))
    t3 = -U0 / (3.0 * (d - 1)) * grad_dot_v

    # div_x(rho0 V) = (grad rho0).V + rho0 div_x V  with
    # div_x V = (nn):((n.grad)D0) + 4/(d-1) (div D0).n;
    # the density belongs INSIDE the divergence -- that is what solves the
    # defining equation (checked by the Laplace-Beltrami residual test).
    ngrad_d = np.einsum("...ijk,qk->...qij", grad_d_u0, n)
    div_d = np.einsum("...iji->...j", grad_d_u0)
    div_v = (np.einsum("qi,qj,...qij->...q", n, n, ngrad_d)
             + 4.0 / (d - 1) * np.einsum("...j,qj->...q", div_d, n))
    t4 = -U0 / (6.0 * (d + 1)) * (grad_dot_v + rho0[..., None] * div_v)

    # degree-4 quadratic shear response
    trd2 = np.trace(d_u0 @ d_u0, axis1=-2, axis2=-1)
    t5 = 0.125 * rho0[..., None] * (nnd ** 2 - 2.0 / (d * (d + 2)) * trd2[..., None])

    return basis.project(t1 + t2 + t3 + t4 + t5, 4)


# ---------------------------------------------------------------------------
# homogeneous (x-independent) correctors
# ---------------------------------------------------------------------------

def g1_homogeneous(basis, grad_u):
    """g1 at uniform density 1/omega_d: (1/2 omega) (nn):D(u)."""
    d_u = 0.5 * (np.asarray(grad_u, dtype=float)
                 + np.swapaxes(np.asarray(grad_u, dtype=float), -1, -2))
    n = basis.nodes
    nnd = np.einsum("qi,qj,...ij->...q", n, n, d_u)
    return basis.project(nnd / (2.0 * basis.area), 2)


def g2_homogeneous(basis, grad_u, *, a2=None):
    """g2 at uniform density, no swimming, Pe = inf.

    a2 is the second Rivlin-Ericksen tensor; if None the flow is taken
    steady, a2 = (grad u)^T A1 + A1 (grad u).
    """
    grad_u = np.asarray(grad_u, dtype=float)
    d = basis.dim
    w = basis.area
    a1 = grad_u + np.swapaxes(grad_u, -1, -2)
    d_u = 0.5 * a1
    if a2 is None:
        a2 = lower_convected_step(a1, grad_u)
    m = 0.25 * np.asarray(a2, dtype=float) - d_u @ d_u
    n = basis.nodes
    nnm = np.einsum("qi,qj,...ij->...q", n, n, m)
    trm = np.trace(m, axis1=-2, axis2=-1)
    nnd = np.einsum("qi,qj,...ij->...q", n, n, d_u)
    trd2 = np.trace(d_u @ d_u, axis1=-2, axis2=-1)
    vals = (-1.0 / (2 * d * w) * (nnm - trm[..., None] / d)
            + 1.0 / (8.0 * w) * (nnd ** 2 - 2.0 / (d * (d + 2)) * trd2[..., None]))
    return basis.project(vals, 4)


def g3_homogeneous_solve(basis, grad_u, g2_vals, *, dt_g2=None):
    """Third corrector in the homogeneous regime: solves
    Lap_n g3 = dt_g2 + div_n(pi_n^perp (grad u) n g2) on the sphere.

    dt_g2 defaults to zero (steady imposed flow).  grad_u must be trace-free.
    Returns nodal values, band-limited to degree 6.
    """
    rhs = basis.spherical_divergence(np.asarray(grad_u, dtype=float), g2_vals)
    if dt_g2 is not None:
        rhs = rhs + dt_g2
    return basis.project(basis.laplace_inv(rhs), 6)


# ---------------------------------------------------------------------------
# stress integrals
# ---------------------------------------------------------------------------

def _nn_mats(basis):
    """Cached (n (x) n) node matrices, flat (nq, d*d), plus weighted copy."""
    cache = getattr(basis, "_nn_flat_cache", None)
    if cache is None:
        n = basis.nodes
        d = basis.dim
        nn = np.einsum("qi,qj->qij", n, n).reshape(len(n), d * d)
        cache = (nn, nn * basis.weights[:, None])
        basis._nn_flat_cache = cache
    return cache


def sigma1(basis, f_vals, *, lam, theta):
    """Elastic/active stress  lam*theta int (nn - Id/d) f dn,  shape (..., d, d)."""
    d = basis.dim
    _, wnn = _nn_mats(basis)
    f_vals = np.asarray(f_vals, dtype=float)
    mom = (f_vals.reshape(-1, f_vals.shape[-1]) @ wnn).reshape(f_vals.shape[:-1] + (d, d))
    mass = basis.integrate(f_vals)
    return lam * theta * (mom - mass[..., None, None] * np.eye(d) / d)


def sigma2(basis, f_vals, grad_u, *, lam):
    """Viscous stress  lam int (nn) ((nn):grad u) f dn,  shape (..., d, d)."""
    d = basis.dim
    nn, wnn = _nn_mats(basis)
    gu = np.asarray(grad_u, dtype=float)
    nne = gu.reshape(gu.shape[:-2] + (d * d,)) @ nn.T       # (..., nq)
    vals = nne * np.asarray(f_vals, dtype=float)
    return lam * (vals.reshape(-1, vals.shape[-1]) @ wnn).reshape(vals.shape[:-1] + (d, d))


# ---------------------------------------------------------------------------
# Rivlin-Ericksen machinery
# ---------------------------------------------------------------------------

def rivlin_ericksen_a1(grad_u):
    """A1 = 2 D(u) = grad u + (grad u)^T."""
    grad_u = np.asarray(grad_u, dtype=float)
    return grad_u + np.swapaxes(grad_u, -1, -2)


def lower_convected_step(a, grad_u, material=None):
    """A_{k+1} = (material derivative of A_k) + (grad u)^T A_k + A_k grad u.

    material is the frame part (d_t + u.grad)A_k; None means steady and
    homogeneous, i.e. zero.
    """
    a = np.asarray(a, dtype=float)
    grad_u = np.asarray(grad_u, dtype=float)
    out = np.swapaxes(grad_u, -1, -2) @ a + a @ grad_u
    if material is not None:
        out = out + np.asarray(material, dtype=float)
    return out


def rivlin_ericksen(grad_u, order: int):
    """List [A1, ..., A_order] for a steady homogeneous flow."""
    if order < 1:
        raise ValueError("order must be >= 1")
    tensors = [rivlin_ericksen_a1(grad_u)]
    for _ in range(order - 1):
        tensors.append(lower_convected_step(tensors[-1], grad_u))
    return tensors


def a2_prime(material_t, grad_u, t):
    """Convected derivative of t = 2 rho0 D(u0):
    material_t + (grad u)^T t + t (grad u), with
    material_t = (d_t - Lap/Pe + u0.grad) t supplied by the caller.
    """
    t = np.asarray(t, dtype=float)
    grad_u = np.asarray(grad_u, dtype=float)
    return np.asarray(material_t, dtype=float) + np.swapaxes(grad_u, -1, -2) @ t + t @ grad_u
