"""Time integration of the coupled kinetic rod-suspension system in d = 2
(unit torus x circle of orientations).

The distribution f(t, x, n) obeys
    df/dt + div_x((u + U0 n) f) + div_n(pi_n^perp (grad u) n f)
        = (1/Pe) Lap_x f + (1/eps) Lap_n f,
and the fluid obeys Stokes (Re = 0, u diagnosed from f) or 2D Navier-Stokes
(Re = 1, u prognostic) with the stresses sigma1/eps + sigma2 on the right.

Stiff linear terms (angular diffusion at rate 1/eps, spatial diffusion) are
integrated exactly through a joint Fourier integrating factor; everything
else is explicit (integrating-factor Euler or Heun).  Dealiased
pseudospectral products throughout.

Arrays: f is (n, n, nphi) physical values, u is (n, n, 2); the spatial axes
come first (Grid2D convention), the angular node axis last (CircleBasis
convention).  Total mass int int f dx dn = 1 for the physical system
(uniform state f = 1/(2 pi)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angular import CircleBasis
from .closures import sigma1, sigma2
from .params import ModelParams
from .spectral2d import Grid2D

__all__ = ["StepperConfig", "KineticState", "KineticSolver", "isotropic_state"]


@dataclass
class StepperConfig:
    dt: float
    order: int = 2                 # 1 = IF Euler, 2 = IF Heun
    picard_tol: float = 1e-11
    picard_max: int = 100
    cfl: float = 0.9
    dt_floor: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")


@dataclass
class KineticState:
    f: np.ndarray        # (n, n, nphi)
    u: np.ndarray        # (n, n, 2)
    t: float

    def copy(self):
        return KineticState(self.f.copy(), self.u.copy(), self.t)


def isotropic_state(grid: Grid2D, basis: CircleBasis, rho_unit=None) -> KineticState:
    """Kinetic state f = rho(x)/omega with unit-mass spatial density rho
    (default uniform), and zero velocity."""
    n = grid.n
    if rho_unit is None:
        rho_unit = np.ones((n, n))
    rho_unit = np.asarray(rho_unit, dtype=float)
    if abs(rho_unit.mean() - 1.0) > 1e-12:
        raise ValueError("rho_unit must have unit spatial mean")
    f = np.repeat(rho_unit[:, :, None], basis.nphi, axis=2) / basis.area
    return KineticState(f=f, u=np.zeros((n, n, 2)), t=0.0)


class KineticSolver:
    """Owns grid/basis/params and the forcing; steps KineticState objects.

    h may be None, a (n, n, 2) array, or a callable t -> (n, n, 2).
    f_source / u_source are optional callables t -> array adding manufactured
    sources to the kinetic and momentum equations.  prescribed_u (callable
    t -> (n, n, 2)) bypasses the fluid solve entirely.
    """

    def __init__(self, grid: Grid2D, basis: CircleBasis, params: ModelParams,
                 *, h=None, f_source=None, u_source=None, prescribed_u=None):
        params.validate_spatial()
        if params.dim != 2:
            raise ValueError("spatially coupled solves are 2D only")
        self.grid = grid
        self.basis = basis
        self.params = params
        self.h = h
        self.f_source = f_source
        self.u_source = u_source
        self.prescribed_u = prescribed_u
        self._m2 = basis.modes ** 2
        # joint decay rate of the linear stiff part, shape (n, n, nphi)
        self._decay = (self._m2[None, None, :] / params.eps
                       + grid.k2[:, :, None] / params.pe)
        # combined spatial-dealias / angular-band-limit mask in (k, m) space
        self._mask3 = (grid._dealias_mask[:, :, None]
                       & (np.abs(basis.modes) <= basis.mmax)[None, None, :])

    # -- forcing ----------------------------------------------------------
    def _h(self, t):
        if self.h is None:
            return np.zeros((self.grid.n, self.grid.n, 2))
        if callable(self.h):
            return self.h(t)
        return self.h

    # -- stresses and fluid solve -----------------------------------------
    def stress_force(self, f, u):
        """(1/eps) div sigma1[f] + div sigma2[f, grad u], shape (n, n, 2)."""
        p = self.params
        s1 = sigma1(self.basis, f, lam=p.lam, theta=p.theta)
        s2 = sigma2(self.basis, f, self.grid.grad_vec(u), lam=p.lam)
        return self.grid.div_tensor(s1) / p.eps + self.grid.div_tensor(s2)

    def solve_stokes_u(self, f, t, u_guess=None, *, tol=1e-11, maxiter=100):
        """Quasi-static Stokes velocity for the given f; Picard in the
        sigma2(grad u) dependence."""
        p = self.params
        g = self.grid
        h = self._h(t)
        s1 = sigma1(self.basis, f, lam=p.lam, theta=p.theta)
        base = h + g.div_tensor(s1) / p.eps
        u = g.stokes_solve(base) if u_guess is None else u_guess
        for it in range(1, maxiter + 1):
            s2 = sigma2(self.basis, f, g.grad_vec(u), lam=p.lam)
            u_new = g.stokes_solve(base + g.div_tensor(s2))
            err = g.l2_norm(u_new - u)
            u = u_new
            if err <= tol * max(1.0, g.l2_norm(u)):
                return u
        raise RuntimeError(f"sigma2 Picard iteration did not converge in {maxiter} steps")

    def velocity(self, f, t, u_guess=None, cfg: StepperConfig | None = None):
        if self.prescribed_u is not None:
            return self.prescribed_u(t)
        tol = cfg.picard_tol if cfg else 1e-11
        mx = cfg.picard_max if cfg else 100
        return self.solve_stokes_u(f, t, u_guess, tol=tol, maxiter=mx)

    # -- explicit right-hand sides ----------------------------------------
    def kinetic_rhs(self, f, u, t):
        """-div_x((u+U0 n)f) - div_n(pi^perp (grad u) n f) (+ source), dealiased."""
        g = self.grid
        b = self.basis
        p = self.params
        nvec = b.nodes
        fd = g.dealias(f)
        ud = g.dealias(u)
        flux0 = (ud[..., 0:1] + p.u0_swim * nvec[:, 0]) * fd
        flux1 = (ud[..., 1:2] + p.u0_swim * nvec[:, 1]) * fd
        adv = g.ifft(1j * (g.kx[..., None] * g.fft(flux0)
                           + g.ky[..., None] * g.fft(flux1)))
        rot = b.spherical_divergence(g.grad_vec(ud), fd, reproject=False)
        out = -(adv + rot)
        if self.f_source is not None:
            out = out + self.f_source(t)
        # joint spatial dealias and angular band limit in one 3D transform
        oh = np.fft.fftn(out, axes=(0, 1, 2))
        oh *= self._mask3
        return np.fft.ifftn(oh, axes=(0, 1, 2)).real

    def momentum_rhs(self, f, u, t):
        """Explicit part of the Re = 1 momentum equation (Leray-projected):
        -(u.grad)u + h + stress forces (+ source); viscosity goes in the
        integrating factor."""
        g = self.grid
        ud = g.dealias(u)
        gu = g.grad_vec(ud)
        advec = np.einsum("...ij,...j->...i", gu, ud)
        rhs = -advec + self._h(t) + self.stress_force(f, u)
        if self.u_source is not None:
            rhs = rhs + self.u_source(t)
        return g.leray(g.dealias(rhs))

    # -- integrating factors ----------------------------------------------
    def _apply_if_f(self, f, dt):
        fh = np.fft.fftn(f, axes=(0, 1, 2))
        fh *= np.exp(-dt * self._decay)
        return np.fft.ifftn(fh, axes=(0, 1, 2)).real

    def _apply_if_u(self, u, dt):
        uh = self.grid.fft(u)
        uh *= np.exp(-dt * self.grid.k2)[..., None]
        return self.grid.ifft(uh)

    # -- stepping ----------------------------------------------------------
    def step(self, s: KineticState, cfg: StepperConfig) -> KineticState:
        """Advance by cfg.dt, halving the substep while the advective CFL
        condition is violated."""
        p = self.params
        dx = 1.0 / self.grid.n
        umax = float(np.max(np.abs(s.u))) + abs(p.u0_swim) + 1e-30
        dt_eff, nsub = cfg.dt, 1
        while dt_eff * umax > cfg.cfl * dx:
            dt_eff *= 0.5
            nsub *= 2
            if dt_eff < cfg.dt_floor:
                raise RuntimeError("CFL halving drove dt below the floor")
        for _ in range(nsub):
            s = self._base_step(s, dt_eff, cfg)
        return s

    def _base_step(self, s: KineticState, dt: float, cfg: StepperConfig) -> KineticState:
        p = self.params
        stokes = (p.re == 0)
        f, u, t = s.f, s.u, s.t
        if stokes:
            u = self.velocity(f, t, u_guess=u, cfg=cfg)

        k1f = self.kinetic_rhs(f, u, t)
        if stokes:
            if cfg.order == 1:
                f1 = self._apply_if_f(f + dt * k1f, dt)
                u1 = self.velocity(f1, t + dt, u_guess=u, cfg=cfg)
                return KineticState(f1, u1, t + dt)
            fp = self._apply_if_f(f + dt * k1f, dt)
            up = self.velocity(fp, t + dt, u_guess=u, cfg=cfg)
            k2f = self.kinetic_rhs(fp, up, t + dt)
            f1 = self._apply_if_f(f, dt) + 0.5 * dt * (self._apply_if_f(k1f, dt) + k2f)
            u1 = self.velocity(f1, t + dt, u_guess=up, cfg=cfg)
            return KineticState(f1, u1, t + dt)

        # Re = 1: u is prognostic, same integrating-factor scheme jointly
        k1u = self.momentum_rhs(f, u, t)
        if cfg.order == 1:
            f1 = self._apply_if_f(f + dt * k1f, dt)
            u1 = self._apply_if_u(u + dt * k1u, dt)
            return KineticState(f1, u1, t + dt)
        fp = self._apply_if_f(f + dt * k1f, dt)
        up = self._apply_if_u(u + dt * k1u, dt)
        k2f = self.kinetic_rhs(fp, up, t + dt)
        k2u = self.momentum_rhs(fp, up, t + dt)
        f1 = self._apply_if_f(f, dt) + 0.5 * dt * (self._apply_if_f(k1f, dt) + k2f)
        u1 = self._apply_if_u(u, dt) + 0.5 * dt * (self._apply_if_u(k1u, dt) + k2u)
        return KineticState(f1, u1, t + dt)

    # -- diagnostics -------------------------------------------------------
    def rho_f(self, f):
        """Unit-mass spatial density int f dn, shape (n, n)."""
        return self.basis.integrate(f)

    def _xn_norm(self, vals):
        """L2 norm over torus x circle (angular weights, spatial mean)."""
        w = self.basis.weights
        return float(np.sqrt(np.sum(vals ** 2 @ w) / self.grid.n ** 2))

    def dissipation(self, f, u):
        """Instantaneous terms of the kinetic energy identity
        d/dt (1/2)||f||^2 = -Pe^-1 ||grad_x f||^2 - eps^-1 ||grad_n f||^2 + S
        with the stretching integral S = int int (d_phi f)(n_perp.(grad u)n) f.
        Returns (energy, diss, stretch)."""
        p = self.params
        g = self.grid
        b = self.basis
        energy = 0.5 * self._xn_norm(f) ** 2
        gx = g.grad(f)
        gn = b.dphi(f)
        diss = (self._xn_norm(gx[..., 0]) ** 2 + self._xn_norm(gx[..., 1]) ** 2) / p.pe \
            + self._xn_norm(gn) ** 2 / p.eps
        gu = g.grad_vec(u)
        an = np.einsum("...ij,qj->...qi", gu, b.nodes)
        stretch_field = gn * np.einsum("qi,...qi->...q", b.nperp, an) * f
        stretch = float(np.sum(stretch_field @ b.weights) / g.n ** 2)
        return energy, diss, stretch

    def diagnostics(self, s: KineticState) -> dict:
        g = self.grid
        p = self.params
        rho = self.rho_f(s.f)
        mass = float(rho.mean())
        grad_u_norm = g.l2_norm(g.grad_vec(s.u))
        rho_norm = g.l2_norm(rho)
        out = {
            "t": s.t,
            "mass_defect": mass - 1.0,
            "grad_u_l2": grad_u_norm,
            "rho_f_l2": rho_norm,
            "grad_rho_f_l2": g.l2_norm(g.grad(rho)),
            "f_l2": self._xn_norm(s.f),
            "grad_n_f_l2": self._xn_norm(self.basis.dphi(s.f)),
            "min_f": float(np.min(s.f)),
            "max_f": float(np.max(s.f)),
        }
        if p.re == 0:
            # monitored constant of the Stokes energy bound; the forcing
            # enters through its H^-1 norm alongside the density
            denom = rho_norm + g.hminus1_norm(self._h(s.t))
            out["stokes_bound_ratio"] = grad_u_norm / max(denom, 1e-30)
        return out

    # -- driver ------------------------------------------------------------
    def run(self, s: KineticState, T: float, cfg: StepperConfig,
            *, on_step=None) -> tuple[KineticState, dict]:
        """Integrate to time T.  on_step(solver, state) is called after every
        step (and once at t = 0).  Returns (final state, summary) where the
        summary carries mass/energy-identity diagnostics accumulated over
        the run."""
        if T < 0:
            raise ValueError("T must be nonnegative")
        nsteps = int(round(T / cfg.dt))
        if abs(nsteps * cfg.dt - T) > 1e-9 * max(1.0, T):
            raise ValueError("T must be an integer multiple of dt")
        stokes = (self.params.re == 0)
        if stokes:
            s = KineticState(s.f, self.velocity(s.f, s.t, u_guess=s.u, cfg=cfg), s.t)
        summary = {"mass_defect_max": 0.0, "min_f": float(np.min(s.f)),
                   "energy_residual_max": 0.0, "stokes_bound_ratio_max": 0.0,
                   "nsteps": nsteps}
        if on_step is not None:
            on_step(self, s)
        e_prev, d_prev, st_prev = self.dissipation(s.f, s.u)
        mass0 = float(self.rho_f(s.f).mean())
        for _ in range(nsteps):
            s = self.step(s, cfg)
            e, d, st = self.dissipation(s.f, s.u)
            resid = (e - e_prev) / cfg.dt + 0.5 * ((d - st) + (d_prev - st_prev))
            summary["energy_residual_max"] = max(summary["energy_residual_max"], abs(resid))
            e_prev, d_prev, st_prev = e, d, st
            mass = float(self.rho_f(s.f).mean())
            summary["mass_defect_max"] = max(summary["mass_defect_max"],
                                             abs(mass - mass0), abs(mass - 1.0))
            summary["min_f"] = min(summary["min_f"], float(np.min(s.f)))
            if stokes:
                dd = self.diagnostics(s)
                summary["stokes_bound_ratio_max"] = max(
                    summary["stokes_bound_ratio_max"], dd["stokes_bound_ratio"])
            if on_step is not None:
                on_step(self, s)
        return s, summary
