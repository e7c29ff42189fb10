"""Fourier pseudo-spectral toolkit on the periodic unit square [0,1)^2.

Conventions: spatial axes are the FIRST two axes of every array, so a scalar
is (n, n), a velocity is (n, n, 2), a tensor field (n, n, 2, 2) and a kinetic
distribution (n, n, nangular).  Velocity gradients follow
(grad u)_{ij} = d_j u_i.  The domain has measure one, so L2 norms are
root-mean-squares.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Grid2D"]


class Grid2D:
    def __init__(self, n: int):
        if n < 4 or n % 2:
            raise ValueError("n must be even and >= 4")
        self.n = n
        x = np.arange(n) / n
        self.x, self.y = np.meshgrid(x, x, indexing="ij")
        k = 2.0 * np.pi * np.fft.fftfreq(n, 1.0 / n)
        self.kx = k[:, None]
        self.ky = k[None, :]
        self.k2 = self.kx ** 2 + self.ky ** 2
        self._k2_safe = np.where(self.k2 == 0.0, 1.0, self.k2)
        kmax = np.abs(k).max()
        self._dealias_mask = ((np.abs(self.kx) <= (2.0 / 3.0) * kmax)
                              & (np.abs(self.ky) <= (2.0 / 3.0) * kmax))

    # -- transforms (leading two axes) -----------------------------------
    def fft(self, f):
        return np.fft.fft2(f, axes=(0, 1))

    def ifft(self, fh):
        return np.fft.ifft2(fh, axes=(0, 1)).real

    def _bcast(self, a, f_ndim):
        """Reshape a spectral multiplier (n, n) to broadcast over trailing axes."""
        return a.reshape(a.shape + (1,) * (f_ndim - 2))

    def dealias(self, f):
        fh = self.fft(f)
        fh *= self._bcast(self._dealias_mask, f.ndim)
        return self.ifft(fh)

    # -- derivatives ------------------------------------------------------
    def dx(self, f, axis: int):
        fh = self.fft(f)
        k = self.kx if axis == 0 else self.ky
        return self.ifft(1j * self._bcast(k * np.ones_like(self.k2), fh.ndim) * fh)

    def grad(self, f):
        """Scalar (n,n,...) -> gradient (n,n,...,2) (component axis appended)."""
        fh = self.fft(f)
        gx = self.ifft(1j * self._bcast(self.kx * np.ones_like(self.k2), fh.ndim) * fh)
        gy = self.ifft(1j * self._bcast(self.ky * np.ones_like(self.k2), fh.ndim) * fh)
        return np.stack([gx, gy], axis=-1)

    def grad_vec(self, u):
        """Velocity (n,n,2) -> gradient (n,n,2,2) with (grad u)_{ij} = d_j u_i."""
        return np.stack([self.grad(u[..., 0]), self.grad(u[..., 1])], axis=-2)

    def div(self, v):
        """Vector (n,n,...,2) -> scalar divergence (contracts the last axis)."""
        return self.dx(v[..., 0], 0) + self.dx(v[..., 1], 1)

    def div_tensor(self, t):
        """Tensor (n,n,2,2) -> vector (n,n,2), (div t)_i = d_j t_{ij}."""
        return np.stack([self.div(t[..., 0, :]), self.div(t[..., 1, :])], axis=-1)

    def laplacian(self, f):
        fh = self.fft(f)
        return self.ifft(-self._bcast(self.k2, fh.ndim) * fh)

    def hessian(self, f):
        """Scalar (n,n) -> (n,n,2,2) second-derivative matrix."""
        g = self.grad(f)
        return np.stack([self.grad(g[..., 0]), self.grad(g[..., 1])], axis=-2)

    def sym_grad(self, u):
        g = self.grad_vec(u)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    # -- projections and solves ------------------------------------------
    def mean(self, f):
        return f.mean(axis=(0, 1))

    def remove_mean(self, f):
        return f - self.mean(f)

    def leray(self, u):
        """Project a velocity field onto divergence-free fields (zero-mean kept)."""
        uh = self.fft(u)
        kdotu = self.kx * uh[..., 0] + self.ky * uh[..., 1]
        uh[..., 0] -= self.kx * kdotu / self._k2_safe
        uh[..., 1] -= self.ky * kdotu / self._k2_safe
        return self.ifft(uh)

    def stokes_solve(self, force, *, viscosity: float = 1.0):
        """Solve -viscosity*Lap(u) + grad p = force, div u = 0, mean(u) = 0."""
        fh = self.fft(force)
        kdotf = self.kx * fh[..., 0] + self.ky * fh[..., 1]
        fh[..., 0] -= self.kx * kdotf / self._k2_safe
        fh[..., 1] -= self.ky * kdotf / self._k2_safe
        uh = fh / (viscosity * self._k2_safe[..., None])
        uh[0, 0, :] = 0.0
        return self.ifft(uh)

    def variable_viscosity_stokes(self, force, coeff, *, tol: float = 1e-12,
                                  maxiter: int = 200, u_init=None):
        """Solve -div((1 + coeff(x)) 2 D(u)) + grad p = force, div u = 0.

        Picard iteration around the constant-coefficient solve; converges
        geometrically when the coefficient variation is below O(1).  Returns
        (u, iterations).
        """
        coeff = np.asarray(coeff, dtype=float)
        cbar = float(coeff.mean())
        dc = coeff - cbar
        u = self.stokes_solve(force, viscosity=1.0 + cbar) if u_init is None else u_init
        for it in range(1, maxiter + 1):
            extra = self.div_tensor(2.0 * dc[..., None, None] * self.sym_grad(u))
            u_new = self.stokes_solve(force + extra, viscosity=1.0 + cbar)
            err = self.l2_norm(u_new - u)
            u = u_new
            if err <= tol * max(1.0, self.l2_norm(u)):
                return u, it
        raise RuntimeError(f"variable-viscosity Stokes did not converge in {maxiter} iterations")

    # -- norms (domain measure 1) ----------------------------------------
    def l2_norm(self, f):
        """L2 norm over the unit square, summing any trailing component axes."""
        return float(np.sqrt(np.sum(np.abs(np.asarray(f)) ** 2) / self.n ** 2))

    def h1_seminorm(self, f):
        return self.l2_norm(self.grad(f))

    def hminus1_norm(self, f):
        """Norm of the zero-mean part of f in H^{-1}."""
        c = self.fft(f) / self.n ** 2
        w = self._bcast(1.0 / self._k2_safe, c.ndim).copy()
        mask = self._bcast(self.k2 == 0.0, c.ndim)
        w = np.where(mask, 0.0, w)
        return float(np.sqrt(np.sum(np.abs(c) ** 2 * w)))
