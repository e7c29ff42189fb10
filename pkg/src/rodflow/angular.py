"""Calculus on the unit sphere S^{d-1} for d = 2, 3.

d = 2 uses an equispaced Fourier grid on the circle (trapezoid quadrature is
spectrally exact there); d = 3 uses real spherical harmonics up to a band
limit ``lmax`` on a Gauss-Legendre (polar) x trapezoid (azimuthal) product
grid.  Both bases diagonalize the Laplace-Beltrami operator, which gives an
exact pseudo-inverse on mean-zero functions (the zero mode is pinned to 0).

All operations act on nodal-value arrays whose LAST axis runs over the
quadrature nodes; arbitrary leading batch axes are allowed, so the closure
kernels can evaluate angular fields over a whole spatial grid at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import assoc_legendre_p_all

from .params import sphere_area

__all__ = [
    "CircleBasis",
    "SphereBasis",
    "AngularFunction",
    "make_basis",
    "moment_integral",
]

_MEAN_TOL = 1e-10


def _check_trace_free(a: np.ndarray, tol: float = 1e-12) -> None:
    tr = np.trace(np.asarray(a, dtype=float), axis1=-2, axis2=-1)
    scale = max(1.0, float(np.max(np.abs(a))) if np.size(a) else 1.0)
    if np.max(np.abs(tr)) > tol * scale:
        raise ValueError("matrix argument must be trace-free")


class CircleBasis:
    """Angular Fourier basis on S^1, nodes phi_j = 2*pi*j/nphi."""

    dim = 2

    def __init__(self, nphi: int = 64):
        if nphi < 4 or nphi % 2:
            raise ValueError("nphi must be even and >= 4")
        self.nphi = nphi
        self.mmax = nphi // 2 - 1  # Nyquist mode is dropped by project()
        self.phi = 2.0 * np.pi * np.arange(nphi) / nphi
        self.nodes = np.stack([np.cos(self.phi), np.sin(self.phi)], axis=-1)
        self.nperp = np.stack([-np.sin(self.phi), np.cos(self.phi)], axis=-1)
        self.weights = np.full(nphi, 2.0 * np.pi / nphi)
        self.modes = np.fft.fftfreq(nphi, 1.0 / nphi)  # integers, m
        self.eigenvalues = -self.modes ** 2
        self._nyq = np.abs(self.modes) > self.mmax

    @property
    def area(self) -> float:
        return 2.0 * np.pi

    # -- quadrature -------------------------------------------------------
    def integrate(self, vals):
        return np.asarray(vals) @ self.weights

    def mean(self, vals):
        return self.integrate(vals) / self.area

    def quadrature(self, g):
        """Integrate g over S^1; g may be nodal values or a callable of n."""
        vals = g(self.nodes) if callable(g) else g
        return self.integrate(vals)

    # -- transforms -------------------------------------------------------
    def to_coeffs(self, vals):
        return np.fft.fft(vals, axis=-1) / self.nphi

    def from_coeffs(self, c):
        return np.fft.ifft(c * self.nphi, axis=-1).real

    def project(self, vals, degree: int | None = None):
        """Band-limit to |m| <= degree (default: drop only the Nyquist mode)."""
        c = self.to_coeffs(vals)
        cut = self.mmax if degree is None else degree
        c = np.where(np.abs(self.modes) > cut, 0.0, c)
        return self.from_coeffs(c)

    def dphi(self, vals):
        c = self.to_coeffs(vals)
        c = np.where(self._nyq, 0.0, c)
        return self.from_coeffs(1j * self.modes * c)

    # -- differential operators ------------------------------------------
    def laplace(self, vals):
        return self.from_coeffs(self.eigenvalues * self.to_coeffs(vals))

    def laplace_inv(self, vals, tol: float = _MEAN_TOL):
        vals = np.asarray(vals, dtype=float)
        scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
        if np.max(np.abs(self.mean(vals))) > tol * scale:
            raise ValueError("laplace_inv needs mean-zero input (apply P1perp first)")
        c = self.to_coeffs(vals)
        eig = np.where(self.eigenvalues == 0.0, 1.0, self.eigenvalues)
        c = np.where((self.modes == 0) | self._nyq, 0.0, c / eig)
        return self.from_coeffs(c)

    def grad(self, vals):
        """Surface gradient, shape (..., nphi, 2):  d_phi g * n_perp."""
        return self.dphi(vals)[..., None] * self.nperp

    def spherical_divergence(self, a, vals, *, reproject: bool = True):
        """div_n(pi_n^perp A n g) = grad_n g . A n - d (n (x) n : A) g.

        On the circle this reduces to d_phi((n_perp . A n) g), which is what
        is computed here (single angular transform).
        """
        a = np.asarray(a, dtype=float)
        _check_trace_free(a)
        pan = getattr(self, "_perp_an_cache", None)
        if pan is None:
            pan = np.einsum("qi,qj->qij", self.nperp, self.nodes).reshape(self.nphi, 4)
            self._perp_an_cache = pan
        coef = a.reshape(a.shape[:-2] + (4,)) @ pan.T       # (..., nphi)
        out = self.dphi(coef * vals)
        return self.project(out) if reproject else out


class SphereBasis:
    """Real spherical harmonics on S^2 up to band limit lmax.

    Quadrature: Gauss-Legendre in cos(theta) (lmax+1 points, exact to
    polynomial degree 2*lmax+1) times equispaced trapezoid in phi.  Dense
    synthesis/analysis matrices; fine for lmax <= 16.
    """

    dim = 3

    def __init__(self, lmax: int = 8, nphi: int | None = None):
        if lmax < 2:
            raise ValueError("lmax must be >= 2")
        self.lmax = lmax
        ntheta = lmax + 1
        if nphi is None:
            nphi = 2 * lmax + 2
        if nphi < 2 * lmax + 1:
            raise ValueError("nphi too small for exact azimuthal quadrature")
        self.ntheta, self.nphi = ntheta, nphi

        x, wx = leggauss(ntheta)          # x = cos(theta)
        phi = 2.0 * np.pi * np.arange(nphi) / nphi
        wphi = 2.0 * np.pi / nphi
        ct = np.repeat(x, nphi)
        st = np.sqrt(1.0 - ct ** 2)
        ph = np.tile(phi, ntheta)
        self.nnodes = ntheta * nphi
        self.nodes = np.stack(
            [st * np.cos(ph), st * np.sin(ph), ct], axis=-1)
        self.weights = np.repeat(wx, nphi) * wphi
        self._ct, self._st, self._ph = ct, st, ph
        # unit vectors of the polar frame at each node
        self.e_theta = np.stack(
            [ct * np.cos(ph), ct * np.sin(ph), -st], axis=-1)
        self.e_phi = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=-1)

        self.ncoef = (lmax + 1) ** 2
        self._build_matrices(x)

    def _build_matrices(self, x):
        L = self.lmax
        # associated Legendre values / x-derivatives at the polar nodes
        P = np.empty((self.ntheta, L + 1, L + 1))   # [itheta, m, l]
        dP = np.empty_like(P)
        for i, xi in enumerate(x):
            vals = assoc_legendre_p_all(L, L, xi, diff_n=1)
            P[i] = vals[0, :, :L + 1].T   # [m, l] layout, m >= 0
            dP[i] = vals[1, :, :L + 1].T

        # orthonormalization factors
        norm = np.zeros((L + 1, L + 1))  # [m, l]
        for l in range(L + 1):
            for m in range(l + 1):
                norm[m, l] = math.sqrt(
                    (2 * l + 1) / (4.0 * math.pi)
                    * math.factorial(l - m) / math.factorial(l + m))

        nn, nc = self.nnodes, self.ncoef
        Y = np.zeros((nn, nc))
        dYdth = np.zeros((nn, nc))
        dYdph = np.zeros((nn, nc))
        eig = np.zeros(nc)
        degree = np.zeros(nc, dtype=int)
        itheta = np.repeat(np.arange(self.ntheta), self.nphi)
        st, ph = self._st, self._ph
        for l in range(L + 1):
            for m in range(-l, l + 1):
                idx = l * l + (m + l)
                am = abs(m)
                base = norm[am, l] * P[itheta, am, l]
                dbase = norm[am, l] * dP[itheta, am, l] * (-st)  # d/dtheta
                if m == 0:
                    Y[:, idx] = base
                    dYdth[:, idx] = dbase
                elif m > 0:
                    c = math.sqrt(2.0) * np.cos(m * ph)
                    Y[:, idx] = base * c
                    dYdth[:, idx] = dbase * c
                    dYdph[:, idx] = base * math.sqrt(2.0) * (-m) * np.sin(m * ph)
                else:
                    s = math.sqrt(2.0) * np.sin(am * ph)
                    Y[:, idx] = base * s
                    dYdth[:, idx] = dbase * s
                    dYdph[:, idx] = base * math.sqrt(2.0) * am * np.cos(am * ph)
                eig[idx] = -l * (l + 1)
                degree[idx] = l
        self.Y, self.dYdth, self.dYdph = Y, dYdth, dYdph
        self.eigenvalues = eig
        self.degrees = degree
        self._analysis = (Y * self.weights[:, None]).T  # (nc, nn)

    @property
    def area(self) -> float:
        return 4.0 * np.pi

    # -- quadrature -------------------------------------------------------
    def integrate(self, vals):
        return np.asarray(vals) @ self.weights

    def mean(self, vals):
        return self.integrate(vals) / self.area

    def quadrature(self, g):
        vals = g(self.nodes) if callable(g) else g
        return self.integrate(vals)

    # -- transforms -------------------------------------------------------
    def to_coeffs(self, vals):
        return np.asarray(vals) @ self._analysis.T

    def from_coeffs(self, c):
        return np.asarray(c) @ self.Y.T

    def project(self, vals, degree: int | None = None):
        c = self.to_coeffs(vals)
        if degree is not None:
            c = np.where(self.degrees > degree, 0.0, c)
        return self.from_coeffs(c)

    # -- differential operators ------------------------------------------
    def laplace(self, vals):
        return self.from_coeffs(self.eigenvalues * self.to_coeffs(vals))

    def laplace_inv(self, vals, tol: float = _MEAN_TOL):
        vals = np.asarray(vals, dtype=float)
        scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
        if np.max(np.abs(self.mean(vals))) > tol * scale:
            raise ValueError("laplace_inv needs mean-zero input (apply P1perp first)")
        c = self.to_coeffs(vals)
        eig = np.where(self.eigenvalues == 0.0, 1.0, self.eigenvalues)
        c = c / eig
        c[..., 0] = 0.0
        return self.from_coeffs(c)

    def grad(self, vals):
        """Surface gradient, shape (..., nnodes, 3)."""
        c = self.to_coeffs(vals)
        dth = c @ self.dYdth.T
        dph = c @ self.dYdph.T
        return dth[..., None] * self.e_theta + (dph / self._st)[..., None] * self.e_phi

    def spherical_divergence(self, a, vals, *, reproject: bool = True):
        """div_n(pi_n^perp A n g) = grad_n g . A n - d (n (x) n : A) g."""
        a = np.asarray(a, dtype=float)
        _check_trace_free(a)
        an = np.einsum("...ij,qj->...qi", a, self.nodes)
        nan_ = np.einsum("qi,...qi->...q", self.nodes, an)
        out = np.einsum("...qi,...qi->...q", self.grad(vals), an) - self.dim * nan_ * vals
        return self.project(out) if reproject else out


def make_basis(dim: int, resolution: int):
    """CircleBasis(nphi=2*resolution) for d=2, SphereBasis(lmax=resolution) for d=3."""
    if dim == 2:
        return CircleBasis(nphi=2 * resolution)
    if dim == 3:
        return SphereBasis(lmax=resolution)
    raise ValueError("dim must be 2 or 3")


@dataclass
class AngularFunction:
    """A function on S^{d-1}: a basis plus nodal values (last axis = nodes)."""

    basis: CircleBasis | SphereBasis
    values: np.ndarray

    def mean(self):
        return self.basis.mean(self.values)

    def integrate(self):
        return self.basis.integrate(self.values)

    def laplace(self) -> "AngularFunction":
        return AngularFunction(self.basis, self.basis.laplace(self.values))

    def laplace_inv(self) -> "AngularFunction":
        return AngularFunction(self.basis, self.basis.laplace_inv(self.values))

    def project(self, degree=None) -> "AngularFunction":
        return AngularFunction(self.basis, self.basis.project(self.values, degree))


def _pairings(idx):
    """All perfect matchings of a tuple of indices."""
    if not idx:
        yield ()
        return
    first, rest = idx[0], idx[1:]
    for j in range(len(rest)):
        pair = (first, rest[j])
        remaining = rest[:j] + rest[j + 1:]
        for tail in _pairings(remaining):
            yield (pair,) + tail


def moment_integral(dim: int, index: tuple) -> float:
    """Closed-form moment int_{S^{d-1}} n_{i1} ... n_{ik} dn for k <= 6.

    Odd k gives 0; even k = 2p gives
    omega_d / (d (d+2) ... (d+2p-2)) * sum over pairings of delta products.
    """
    k = len(index)
    if k % 2:
        return 0.0
    if k > 6:
        raise ValueError("closed-form moments implemented up to order 6; use quadrature")
    if any(i < 0 or i >= dim for i in index):
        raise ValueError("index out of range for dimension")
    w = sphere_area(dim)
    if k == 0:
        return w
    denom = 1.0
    for p in range(k // 2):
        denom *= dim + 2 * p
    total = 0.0
    for match in _pairings(tuple(index)):
        if all(i == j for (i, j) in match):
            total += 1.0
    return w / denom * total
