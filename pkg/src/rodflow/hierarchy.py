"""Hierarchy systems for the small-Weissenberg limit on the 2D torus, plus
the Boussinesq-reformulated effective models.

Order 0: transport-diffusion for the density rho0 coupled to a Stokes or 2D
Navier-Stokes flow with concentration-dependent viscosity 2(1 + c0 rho0)D(u0).
Order 1: the linearized correction (u1, rho1) driven by the convected-stress
sources gamma1 A2' + gamma2 rho0 (2D(u0))^2 + 2 c0 rho1 D(u0).

Density convention: rho0, rho1 carry unit spatial mass (uniform state = 1);
all coefficients are the homogeneous-normalized ones, which makes the two
conventions algebraically identical (every density-carrying term is linear
in the density).  c0 equals the homogeneous eta1.

The superposition (u0 + eps*u1, rho0 + eps*rho1) approximates the kinetic
solution to O(eps^2); well_prepared_f0 assembles the matching kinetic
initial distribution through the explicit closures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic_fields import TrigScalar  # noqa: F401  (re-export convenience)
from .closures import a2_prime, g1_explicit, g2_explicit, rivlin_ericksen_a1
from .params import ModelParams, second_order_coeffs
from .spectral2d import Grid2D

__all__ = [
    "HierarchyState",
    "HierarchySolver",
    "BoussinesqStokes",
    "boussinesq_ns2d_step",
    "BoussinesqNS2D",
]


@dataclass
class HierarchyState:
    u0: np.ndarray      # (n, n, 2)
    rho0: np.ndarray    # (n, n)
    u1: np.ndarray
    rho1: np.ndarray
    t: float

    def copy(self):
        return HierarchyState(self.u0.copy(), self.rho0.copy(),
                              self.u1.copy(), self.rho1.copy(), self.t)


class HierarchySolver:
    """Advances the coupled order-0/order-1 systems.

    h may be an array, a callable t -> (n, n, 2), or None; dt_h is the time
    derivative of h (defaults to zero: steady forcing).
    """

    def __init__(self, grid: Grid2D, params: ModelParams, *, h=None, dt_h=None,
                 picard_tol: float = 1e-12):
        params.validate_spatial()
        if params.dim != 2:
            raise ValueError("spatial hierarchy solves are 2D only")
        self.grid = grid
        self.params = params
        self.h = h
        self.dt_h = dt_h
        self.picard_tol = picard_tol
        c = second_order_coeffs(params, normalization="homogeneous")
        self.coeffs = c
        self.c0 = c.eta1

    def _h_at(self, t):
        if self.h is None:
            return np.zeros((self.grid.n, self.grid.n, 2))
        return self.h(t) if callable(self.h) else self.h

    def _dth_at(self, t):
        if self.dt_h is None:
            return np.zeros((self.grid.n, self.grid.n, 2))
        return self.dt_h(t) if callable(self.dt_h) else self.dt_h

    # -- diagnosed velocities ---------------------------------------------
    def solve_u0(self, rho0, t, u_init=None):
        """Stokes: -div((1 + c0 rho0) 2 D(u0)) + grad p = h, div u0 = 0."""
        u, _ = self.grid.variable_viscosity_stokes(
            self._h_at(t), self.c0 * rho0, tol=self.picard_tol, u_init=u_init)
        return u

    def order1_source(self, s_u0, s_rho0, s_rho1, dt_u0, dt_rho0):
        """div(2 c0 rho1 D(u0) + gamma1 A2'(rho0, u0) + gamma2 rho0 (2D(u0))^2)."""
        g = self.grid
        c = self.coeffs
        d0 = g.sym_grad(s_u0)
        a2p = self.a2_prime_field(s_u0, s_rho0, dt_u0, dt_rho0)
        stress = (2.0 * self.c0 * s_rho1[..., None, None] * d0
                  + c.gamma1 * a2p
                  + c.gamma2 * s_rho0[..., None, None] * (4.0 * d0 @ d0))
        return g.div_tensor(g.dealias(stress))

    def solve_u1(self, s, dt_u0, dt_rho0, u_init=None):
        src = self.order1_source(s.u0, s.rho0, s.rho1, dt_u0, dt_rho0)
        u, _ = self.grid.variable_viscosity_stokes(
            src, self.c0 * s.rho0, tol=self.picard_tol, u_init=u_init)
        return u

    # -- PDE-exact time derivatives ---------------------------------------
    def dt_rho0(self, u0, rho0):
        g = self.grid
        adv = g.dealias(np.einsum("...i,...i->...", g.dealias(u0), g.grad(rho0)))
        return g.laplacian(rho0) / self.params.pe - adv

    def dt_u0_stokes(self, u0, rho0, dtrho0, t):
        """Differentiated Stokes system:
        -div((1+c0 rho0) 2 D(dt_u0)) + grad q = c0 div(dtrho0 2 D(u0)) + dt_h."""
        g = self.grid
        force = self._dth_at(t) + self.c0 * g.div_tensor(
            g.dealias(2.0 * dtrho0[..., None, None] * g.sym_grad(u0)))
        u, _ = g.variable_viscosity_stokes(force, self.c0 * rho0, tol=self.picard_tol)
        return u

    def dt_u0_ns(self, u0, rho0, t):
        """Re = 1: dt_u0 read off the momentum equation directly."""
        g = self.grid
        visc = g.div_tensor(g.dealias(
            2.0 * (1.0 + self.c0 * rho0)[..., None, None] * g.sym_grad(u0)))
        ud = g.dealias(u0)
        adv = np.einsum("...ij,...j->...i", g.grad_vec(ud), ud)
        return g.leray(g.dealias(visc - adv + self._h_at(t)))

    def time_derivatives_order0(self, s: HierarchyState):
        dtr = self.dt_rho0(s.u0, s.rho0)
        if self.params.re == 0:
            dtu = self.dt_u0_stokes(s.u0, s.rho0, dtr, s.t)
        else:
            dtu = self.dt_u0_ns(s.u0, s.rho0, s.t)
        return dtu, dtr

    def a2_prime_field(self, u0, rho0, dt_u0, dt_rho0):
        """A2'(rho0, u0) with the convected derivative taken PDE-exactly."""
        g = self.grid
        p = self.params
        d0 = g.sym_grad(u0)
        tt = 2.0 * rho0[..., None, None] * d0
        dt_t = 2.0 * (dt_rho0[..., None, None] * d0
                      + rho0[..., None, None] * g.sym_grad(dt_u0))
        lap_t = np.stack([np.stack([g.laplacian(tt[..., i, j]) for j in range(2)], axis=-1)
                          for i in range(2)], axis=-2)
        ud = g.dealias(u0)
        adv_t = np.einsum("...ijk,...k->...ij", np.stack(
            [np.stack([g.grad(tt[..., i, j]) for j in range(2)], axis=-2)
             for i in range(2)], axis=-3), ud)
        mat = dt_t - lap_t / p.pe + adv_t
        return g.dealias(a2_prime(mat, g.grad_vec(u0), tt))

    # -- stepping ----------------------------------------------------------
    def _rho_if(self, r, dt):
        rh = self.grid.fft(r)
        rh *= np.exp(-dt * self.grid.k2 / self.params.pe)
        return self.grid.ifft(rh)

    def _u_if_ns(self, u, dt):
        # unit (solvent) viscosity only: the concentration-dependent part of
        # the stress stays explicit, mirroring the kinetic stepper's split so
        # that the two trajectories share their leading temporal error
        uh = self.grid.fft(u)
        uh *= np.exp(-dt * self.grid.k2)[..., None]
        return self.grid.ifft(uh)

    def _rhs_rho0(self, u0, rho0):
        """Explicit part (advection only; diffusion is in the factor)."""
        g = self.grid
        return -g.dealias(np.einsum("...i,...i->...", g.dealias(u0), g.grad(rho0)))

    def _rhs_rho1(self, u0, rho0, u1, rho1):
        g = self.grid
        mu0 = self.coeffs.mu0
        adv0 = np.einsum("...i,...i->...", g.dealias(u0), g.grad(rho1))
        adv1 = np.einsum("...i,...i->...", g.dealias(u1), g.grad(rho0))
        return g.dealias(-adv0 - adv1) + mu0 * g.laplacian(rho0)

    def _rhs_u0_ns(self, u0, rho0, t):
        """Explicit part of the Re = 1 order-0 momentum equation."""
        g = self.grid
        dev = g.div_tensor(g.dealias(
            2.0 * self.c0 * rho0[..., None, None] * g.sym_grad(u0)))
        ud = g.dealias(u0)
        adv = np.einsum("...ij,...j->...i", g.grad_vec(ud), ud)
        return g.leray(g.dealias(dev - adv + self._h_at(t)))

    def _rhs_u1_ns(self, s_u0, s_rho0, s_u1, s_rho1, t):
        g = self.grid
        dtu0 = self.dt_u0_ns(s_u0, s_rho0, t)
        dtr0 = self.dt_rho0(s_u0, s_rho0)
        src = self.order1_source(s_u0, s_rho0, s_rho1, dtu0, dtr0)
        dev = g.div_tensor(g.dealias(
            2.0 * self.c0 * s_rho0[..., None, None] * g.sym_grad(s_u1)))
        u0d, u1d = g.dealias(s_u0), g.dealias(s_u1)
        adv = (np.einsum("...ij,...j->...i", g.grad_vec(u1d), u0d)
               + np.einsum("...ij,...j->...i", g.grad_vec(u0d), u1d))
        return g.leray(g.dealias(dev - adv + src))

    def refresh_velocities(self, s: HierarchyState) -> HierarchyState:
        """Stokes only: recompute the diagnosed u0, u1 from the densities."""
        if self.params.re != 0:
            return s
        u0 = self.solve_u0(s.rho0, s.t, u_init=s.u0)
        tmp = HierarchyState(u0, s.rho0, s.u1, s.rho1, s.t)
        dtu0, dtr0 = self.time_derivatives_order0(tmp)
        u1 = self.solve_u1(tmp, dtu0, dtr0, u_init=s.u1)
        return HierarchyState(u0, s.rho0, u1, s.rho1, s.t)

    def step(self, s: HierarchyState, dt: float) -> HierarchyState:
        """One Heun step (integrating-factor diffusion) of both orders."""
        if self.params.re == 0:
            return self._step_stokes(s, dt)
        return self._step_ns(s, dt)

    def _step_stokes(self, s, dt):
        r0, r1, t = s.rho0, s.rho1, s.t
        k1_r0 = self._rhs_rho0(s.u0, r0)
        k1_r1 = self._rhs_rho1(s.u0, r0, s.u1, r1)
        r0p = self._rho_if(r0 + dt * k1_r0, dt)
        r1p = self._rho_if(r1 + dt * k1_r1, dt)
        sp = self.refresh_velocities(HierarchyState(s.u0, r0p, s.u1, r1p, t + dt))
        k2_r0 = self._rhs_rho0(sp.u0, sp.rho0)
        k2_r1 = self._rhs_rho1(sp.u0, sp.rho0, sp.u1, sp.rho1)
        r0n = self._rho_if(r0, dt) + 0.5 * dt * (self._rho_if(k1_r0, dt) + k2_r0)
        r1n = self._rho_if(r1, dt) + 0.5 * dt * (self._rho_if(k1_r1, dt) + k2_r1)
        return self.refresh_velocities(HierarchyState(sp.u0, r0n, sp.u1, r1n, t + dt))

    def _step_ns(self, s, dt):
        t = s.t
        k1 = (self._rhs_rho0(s.u0, s.rho0),
              self._rhs_rho1(s.u0, s.rho0, s.u1, s.rho1),
              self._rhs_u0_ns(s.u0, s.rho0, t),
              self._rhs_u1_ns(s.u0, s.rho0, s.u1, s.rho1, t))
        r0p = self._rho_if(s.rho0 + dt * k1[0], dt)
        r1p = self._rho_if(s.rho1 + dt * k1[1], dt)
        u0p = self._u_if_ns(s.u0 + dt * k1[2], dt)
        u1p = self._u_if_ns(s.u1 + dt * k1[3], dt)
        k2 = (self._rhs_rho0(u0p, r0p),
              self._rhs_rho1(u0p, r0p, u1p, r1p),
              self._rhs_u0_ns(u0p, r0p, t + dt),
              self._rhs_u1_ns(u0p, r0p, u1p, r1p, t + dt))
        r0n = self._rho_if(s.rho0, dt) + 0.5 * dt * (self._rho_if(k1[0], dt) + k2[0])
        r1n = self._rho_if(s.rho1, dt) + 0.5 * dt * (self._rho_if(k1[1], dt) + k2[1])
        u0n = self._u_if_ns(s.u0, dt) + 0.5 * dt * (self._u_if_ns(k1[2], dt) + k2[2])
        u1n = self._u_if_ns(s.u1, dt) + 0.5 * dt * (self._u_if_ns(k1[3], dt) + k2[3])
        return HierarchyState(u0n, r0n, u1n, r1n, t + dt)

    def step_order0(self, s: HierarchyState, dt: float) -> HierarchyState:
        """Advance only (u0, rho0); order-1 fields are carried unchanged."""
        frozen = HierarchyState(s.u0, s.rho0, np.zeros_like(s.u1),
                                np.zeros_like(s.rho1), s.t)
        out = self.step(frozen, dt)
        return HierarchyState(out.u0, out.rho0, s.u1.copy(), s.rho1.copy(), out.t)

    def step_order1(self, s: HierarchyState, dt: float) -> HierarchyState:
        """Advance only (u1, rho1) with the order-0 fields frozen."""
        g = self.grid
        t = s.t
        if self.params.re == 0:
            dtu0, dtr0 = self.time_derivatives_order0(s)
            k1 = self._rhs_rho1(s.u0, s.rho0, s.u1, s.rho1)
            r1p = self._rho_if(s.rho1 + dt * k1, dt)
            u1p = self.solve_u1(HierarchyState(s.u0, s.rho0, s.u1, r1p, t),
                                dtu0, dtr0, u_init=s.u1)
            k2 = self._rhs_rho1(s.u0, s.rho0, u1p, r1p)
            r1n = self._rho_if(s.rho1, dt) + 0.5 * dt * (self._rho_if(k1, dt) + k2)
            u1n = self.solve_u1(HierarchyState(s.u0, s.rho0, u1p, r1n, t),
                                dtu0, dtr0, u_init=u1p)
            return HierarchyState(s.u0.copy(), s.rho0.copy(), u1n, r1n, t + dt)
        k1r = self._rhs_rho1(s.u0, s.rho0, s.u1, s.rho1)
        k1u = self._rhs_u1_ns(s.u0, s.rho0, s.u1, s.rho1, t)
        r1p = self._rho_if(s.rho1 + dt * k1r, dt)
        u1p = self._u_if_ns(s.u1 + dt * k1u, dt)
        k2r = self._rhs_rho1(s.u0, s.rho0, u1p, r1p)
        k2u = self._rhs_u1_ns(s.u0, s.rho0, u1p, r1p, t)
        r1n = self._rho_if(s.rho1, dt) + 0.5 * dt * (self._rho_if(k1r, dt) + k2r)
        u1n = self._u_if_ns(s.u1, dt) + 0.5 * dt * (self._u_if_ns(k1u, dt) + k2u)
        return HierarchyState(s.u0.copy(), s.rho0.copy(), u1n, r1n, t + dt)

    # -- assembly -----------------------------------------------------------
    def initial_state(self, rho_init, *, u0_init=None) -> HierarchyState:
        rho_init = np.asarray(rho_init, dtype=float)
        if abs(rho_init.mean() - 1.0) > 1e-12:
            raise ValueError("rho_init must have unit spatial mean")
        n = self.grid.n
        s = HierarchyState(np.zeros((n, n, 2)) if u0_init is None else u0_init,
                           rho_init.copy(), np.zeros((n, n, 2)),
                           np.zeros((n, n)), 0.0)
        if self.params.re == 0:
            s = self.refresh_velocities(s)
        elif u0_init is None:
            # start the NS hierarchy from the quasi-static balance
            s.u0 = self.solve_u0(s.rho0, 0.0)
        return s

    def hierarchical_solution(self, s: HierarchyState, eps: float):
        return s.u0 + eps * s.u1, s.rho0 + eps * s.rho1

    def run(self, s: HierarchyState, T: float, dt: float, *, on_step=None):
        nsteps = int(round(T / dt))
        if abs(nsteps * dt - T) > 1e-9 * max(1.0, T):
            raise ValueError("T must be an integer multiple of dt")
        if on_step is not None:
            on_step(self, s)
        for _ in range(nsteps):
            s = self.step(s, dt)
            if on_step is not None:
                on_step(self, s)
        return s

    def well_prepared_f0(self, s: HierarchyState, basis, eps: float,
                         *, order: int = 2, negativity_tol: float = 0.0):
        """Kinetic initial data f0 = rho + eps g1 + eps^2 g2 on (x, n).

        Densities are converted to per-solid-angle normalization before the
        closure kernels.  Raises if the result dips below -negativity_tol.
        """
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        g = self.grid
        w = basis.area
        rho0_p = s.rho0 / w
        d_u0 = g.sym_grad(s.u0)
        g1 = g1_explicit(basis, u0_swim=self.params.u0_swim, rho0=rho0_p,
                         grad_rho0=g.grad(rho0_p), d_u0=d_u0)
        f0 = s.rho0[..., None] / w + eps * g1
        if order == 2:
            dtu0, dtr0 = self.time_derivatives_order0(s)
            a2p = self.a2_prime_field(s.u0, s.rho0, dtu0, dtr0) / w
            grad_d_u0 = np.stack(
                [np.stack([g.grad(d_u0[..., i, j]) for j in range(2)], axis=-2)
                 for i in range(2)], axis=-3)
            g2 = g2_explicit(
                basis, u0_swim=self.params.u0_swim, rho0=rho0_p,
                grad_rho0=g.grad(rho0_p), hess_rho0=g.hessian(rho0_p),
                rho1=s.rho1 / w, grad_rho1=g.grad(s.rho1 / w),
                d_u0=d_u0, d_u1=g.sym_grad(s.u1),
                grad_d_u0=grad_d_u0, a2p=a2p)
            f0 = f0 + eps ** 2 * g2
        fmin = float(np.min(f0))
        if fmin < -negativity_tol:
            raise ValueError(f"well-prepared data not nonnegative (min {fmin:.3e}); "
                             "eps too large for this initial state")
        return f0


class BoussinesqStokes:
    """Iterative solution of the reformulated steady second-order Stokes model
    with homogeneous density and effective coefficients (eta0, gamma1, gamma2).

    Iteration: u_{n+1} solves
        -eta0 Lap u + grad p - eps*gamma1 div((u_n . grad) 2 D(u))
            = (1 - eps*(gamma1/eta0)(d_t - Lap/Pe)) h + eps div G0(u_n),
        G0(u) = gamma1((grad u)^T 2D(u) + 2D(u)(grad u)) + gamma2 (2D(u))^2,
    with an inner Picard loop for the implicit transport term and 0.5 damping
    when the outer residual grows.
    """

    def __init__(self, grid: Grid2D, *, eta0: float, gamma1: float, gamma2: float,
                 pe: float = 1.0):
        self.grid = grid
        self.eta0 = eta0
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.pe = pe

    def _g0(self, u):
        g = self.grid
        gu = g.grad_vec(g.dealias(u))
        a1 = gu + np.swapaxes(gu, -1, -2)
        return (self.gamma1 * (np.swapaxes(gu, -1, -2) @ a1 + a1 @ gu)
                + self.gamma2 * (a1 @ a1))

    def _implicit_term(self, u_lag, u):
        """(u_lag . grad) 2 D(u), dealiased, shape (n, n, 2, 2)."""
        g = self.grid
        a1 = 2.0 * g.sym_grad(u)
        grad_a1 = np.stack(
            [np.stack([g.grad(a1[..., i, j]) for j in range(2)], axis=-2)
             for i in range(2)], axis=-3)
        return g.dealias(np.einsum("...ijk,...k->...ij", grad_a1, g.dealias(u_lag)))

    def _inner_solve(self, rhs, u_lag, eps, tol):
        g = self.grid
        u = g.stokes_solve(rhs, viscosity=self.eta0)
        for _ in range(100):
            extra = eps * self.gamma1 * g.div_tensor(self._implicit_term(u_lag, u))
            u_new = g.stokes_solve(rhs + extra, viscosity=self.eta0)
            err = g.l2_norm(u_new - u)
            u = u_new
            if err <= tol * max(1.0, g.l2_norm(u)):
                return u
        raise RuntimeError("inner Picard for the implicit transport term stalled")

    def solve(self, h, eps, *, dt_h=None, tol=1e-10, maxiter=30):
        """Returns (u, history) where history is the list of outer H1 updates."""
        g = self.grid
        base = h.copy()
        if dt_h is not None:
            base = base - eps * (self.gamma1 / self.eta0) * dt_h
        base = base + eps * (self.gamma1 / self.eta0) * g.laplacian(h) / self.pe
        u = np.zeros_like(h)
        history = []
        prev_update = np.inf
        for it in range(1, maxiter + 1):
            rhs = base + eps * g.div_tensor(g.dealias(self._g0(u)))
            u_new = self._inner_solve(rhs, u, eps, tol)
            upd = g.l2_norm(g.grad_vec(u_new - u)) + g.l2_norm(u_new - u)
            history.append(upd)
            if upd > prev_update:
                u_new = 0.5 * (u + u_new)   # damping when the residual grows
            prev_update = upd
            u = u_new
            if upd <= tol * max(1.0, g.l2_norm(u)):
                return u, history
        raise RuntimeError(f"Boussinesq iteration did not converge in {maxiter} "
                           f"iterations; history={history}")

    def hierarchical_reference(self, h, eps):
        """u0 + eps*u1 for the same abstract model (steady forcing)."""
        g = self.grid
        u0 = g.stokes_solve(h, viscosity=self.eta0)
        d0 = g.sym_grad(u0)
        a1 = 2.0 * d0
        gu = g.grad_vec(u0)
        adv = self._implicit_term(u0, u0)
        a2p = -np.stack([np.stack([g.laplacian(a1[..., i, j]) for j in range(2)], axis=-1)
                         for i in range(2)], axis=-2) / self.pe \
            + adv + np.swapaxes(gu, -1, -2) @ a1 + a1 @ gu
        src = g.div_tensor(g.dealias(self.gamma1 * a2p + self.gamma2 * (a1 @ a1)))
        u1 = g.stokes_solve(src, viscosity=self.eta0)
        return u0 + eps * u1


class BoussinesqNS2D:
    """Fourth-order-regularized 2D Navier-Stokes form of the effective model:
        (d_t + u.grad)u - eta0 Lap u - eps*gamma1(eta0 - 1/Pe) Lap^2 u + grad p
            = (1 + eps*gamma1 Lap) h + eps div F1(u),
        F1(u) = 2 gamma1 (grad u)^T (grad u) + gamma2 (2D(u))^2.
    Requires eta0 >= 1/Pe so the biharmonic term is dissipative (gamma1 <= 0).
    """

    def __init__(self, grid: Grid2D, *, eta0: float, gamma1: float, gamma2: float,
                 pe: float = 1.0, h=None):
        if eta0 < 1.0 / pe:
            raise ValueError("requires eta0 >= 1/Pe")
        if gamma1 > 0:
            raise ValueError("gamma1 must be <= 0 (biharmonic term dissipative)")
        self.grid = grid
        self.eta0, self.gamma1, self.gamma2, self.pe = eta0, gamma1, gamma2, pe
        self.h = h

    def _h_at(self, t):
        if self.h is None:
            return np.zeros((self.grid.n, self.grid.n, 2))
        return self.h(t) if callable(self.h) else self.h

    def _factor(self, eps, dt):
        k2 = self.grid.k2
        rate = self.eta0 * k2 - eps * self.gamma1 * (self.eta0 - 1.0 / self.pe) * k2 ** 2
        return np.exp(-dt * rate)[..., None]

    def rhs(self, u, t, eps):
        g = self.grid
        ud = g.dealias(u)
        gu = g.grad_vec(ud)
        adv = np.einsum("...ij,...j->...i", gu, ud)
        a1 = gu + np.swapaxes(gu, -1, -2)
        f1 = 2.0 * self.gamma1 * (np.swapaxes(gu, -1, -2) @ gu) + self.gamma2 * (a1 @ a1)
        h = self._h_at(t)
        lap_h = np.stack([g.laplacian(h[..., 0]), g.laplacian(h[..., 1])], axis=-1)
        out = -adv + h + eps * self.gamma1 * lap_h + eps * g.div_tensor(g.dealias(f1))
        return g.leray(g.dealias(out))

    def step(self, u, t, eps, dt):
        e = self._factor(eps, dt)
        apply_if = lambda v: self.grid.ifft(self.grid.fft(v) * e)
        k1 = self.rhs(u, t, eps)
        up = apply_if(u + dt * k1)
        k2 = self.rhs(up, t + dt, eps)
        return apply_if(u) + 0.5 * dt * (apply_if(k1) + k2)

    def run(self, u0, T, eps, dt, *, on_step=None):
        nsteps = int(round(T / dt))
        if abs(nsteps * dt - T) > 1e-9 * max(1.0, T):
            raise ValueError("T must be an integer multiple of dt")
        u, t = u0.copy(), 0.0
        if on_step is not None:
            on_step(u, t)
        for _ in range(nsteps):
            u = self.step(u, t, eps, dt)
            t += dt
            if on_step is not None:
                on_step(u, t)
        return u


def boussinesq_ns2d_step(solver: BoussinesqNS2D, u, t, eps, dt):
    return solver.step(u, t, eps, dt)
