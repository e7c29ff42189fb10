"""Homogeneous (x-independent) angular solves under imposed velocity gradients
and extraction of viscometric functions.

The distribution f(n, t) of a spatially homogeneous suspension under a constant
(or time-periodic) velocity gradient solves

    d_t f = (1/eps) Lap_n f - div_n(pi_n^perp (grad u) n f),

with unit mass.  The total deviatoric stress is assembled from the momentum
equation as  sigma = 2 D(u) + (1/eps) sigma1[f] + sigma2[f, grad u],
and shear viscosity / normal-stress differences / elongational viscosity are
read off componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .closures import sigma1, sigma2
from .params import ModelParams, predict_viscometric, second_order_coeffs


@dataclass
class ImposedFlow:
    """Constant- or oscillatory-rate linear flow.  kind in {"shear",
    "elongation", "oscillatory"}; shear convention u = kappa*x2*e1 so that
    (grad u)_{12} = kappa."""

    kind: str
    kappa: float
    dim: int = 3

    def __post_init__(self):
        if self.kind not in ("shear", "elongation", "oscillatory"):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")

    def grad_u(self, t: float | None = None) -> np.ndarray:
        d = self.dim
        g = np.zeros((d, d))
        if self.kind == "shear":
            g[0, 1] = self.kappa
        elif self.kind == "elongation":
            if d == 3:
                np.fill_diagonal(g, (self.kappa, -0.5 * self.kappa, -0.5 * self.kappa))
            else:
                np.fill_diagonal(g, (self.kappa, -self.kappa))
        else:  # oscillatory shear, rate kappa*sin(t)
            g[0, 1] = self.kappa * np.sin(0.0 if t is None else t)
        return g


@dataclass
class MeasuredViscometrics:
    sigma: np.ndarray            # total deviatoric stress tensor
    eta: float                   # sigma_12 / kappa
    n1: float                    # sigma_11 - sigma_22
    n2: float | None             # sigma_22 - sigma_33 (d = 3 only)
    nu10: float                  # N1 / kappa^2
    nu20: float | None           # N2 / kappa^2 (d = 3 only)
    eta_e: float | None = None   # elongational viscosity (elongation only)
    phase: float | None = None   # phase shift of sigma_12 (oscillatory only)
    amplitude: float | None = None
    fit_residual: float | None = None


def _rotation_matrix(basis, grad_u: np.ndarray) -> np.ndarray:
    """Dense nodal matrix R with (R f)_q = div_n(pi_n^perp (grad u) n f)|_q."""
    nq = len(basis.weights)
    return basis.spherical_divergence(grad_u, np.eye(nq)).T


def _laplace_matrix(basis) -> np.ndarray:
    nq = len(basis.weights)
    return basis.laplace(np.eye(nq)).T


def angular_steady_state(flow: ImposedFlow, m: ModelParams, basis,
                         cond_max: float = 1e12) -> np.ndarray:
    """Unit-mass steady state of the homogeneous angular Fokker-Planck equation
    under the imposed constant velocity gradient.  Dense solve with the mass
    constraint appended (the nodal rows are quadrature-dependent, so the
    system is solved in the least-squares sense; the residual is checked)."""
    g = flow.grad_u()
    op = _laplace_matrix(basis) / m.eps - _rotation_matrix(basis, g)
    w = np.asarray(basis.weights)
    a = np.vstack([op, w[None, :]])
    rhs = np.zeros(a.shape[0])
    rhs[-1] = 1.0
    # the quadrature grid oversamples the band-limited spectral space, so the
    # nodal operator has an exact null space; solve minimal-norm and estimate
    # conditioning over the resolved subspace only
    f, _, _, sv = np.linalg.lstsq(a, rhs, rcond=1e-12)
    resolved = sv[sv > 1e-12 * sv[0]]
    if resolved[0] / resolved[-1] > cond_max:
        raise RuntimeError(
            f"angular steady solve ill-conditioned (cond ~ {resolved[0] / resolved[-1]:.2e}); "
            "increase the angular resolution")
    resid = np.max(np.abs(op @ f))
    scale = max(1.0, np.max(np.abs(f)))
    if resid > 1e-8 * scale / m.eps:
        raise RuntimeError(f"angular steady solve residual {resid:.2e} too large")
    return f


def total_stress(f: np.ndarray, grad_u: np.ndarray, m: ModelParams, basis) -> np.ndarray:
    du = 0.5 * (grad_u + grad_u.T)
    return 2.0 * du + sigma1(basis, f, lam=m.lam, theta=m.theta) / m.eps \
        + sigma2(basis, f, grad_u, lam=m.lam)


def measure(f: np.ndarray, flow: ImposedFlow, m: ModelParams, basis,
            t: float | None = None) -> MeasuredViscometrics:
    g = flow.grad_u(t)
    sig = total_stress(f, g, m, basis)
    sig = sig - np.trace(sig) / flow.dim * np.eye(flow.dim)
    kap = flow.kappa
    n1 = sig[0, 0] - sig[1, 1]
    n2 = sig[1, 1] - sig[2, 2] if flow.dim == 3 else None
    eta = sig[0, 1] / kap if kap else 1.0
    out = MeasuredViscometrics(
        sigma=sig, eta=eta, n1=n1, n2=n2,
        nu10=n1 / kap ** 2 if kap else 0.0,
        nu20=(n2 / kap ** 2 if kap else 0.0) if flow.dim == 3 else None)
    if flow.kind == "elongation" and kap:
        if flow.dim == 3:
            out.eta_e = (sig[0, 0] - 0.5 * (sig[1, 1] + sig[2, 2])) / kap
        else:
            out.eta_e = (sig[0, 0] - sig[1, 1]) / kap
    return out


def steady_viscometrics(flow: ImposedFlow, m: ModelParams, basis) -> MeasuredViscometrics:
    f = angular_steady_state(flow, m, basis)
    return measure(f, flow, m, basis)


def oscillatory_viscometrics(flow: ImposedFlow, m: ModelParams, basis,
                             periods_discard: float | None = None,
                             rtol: float = 1e-10, atol: float = 1e-12) -> MeasuredViscometrics:
    """Time-resolved solve under kappa(t) = kappa*sin(t); the in-phase /
    out-of-phase decomposition of sigma_12 over the final period gives the
    amplitude and phase shift.  The first 5*eps relaxation times plus one full
    period are discarded."""
    if flow.kind != "oscillatory":
        raise ValueError("oscillatory_viscometrics needs an oscillatory flow")
    lap = _laplace_matrix(basis) / m.eps
    rot1 = _rotation_matrix(basis, ImposedFlow("shear", flow.kappa, flow.dim).grad_u())

    def rhs(t, f):
        return lap @ f - np.sin(t) * (rot1 @ f)

    def jac(t, f):
        return lap - np.sin(t) * rot1

    t_skip = 5.0 * m.eps + 2.0 * np.pi
    t_end = t_skip + 2.0 * np.pi
    f0 = np.full(len(basis.weights), 1.0 / basis.area)
    nfit = 64
    t_fit = np.linspace(t_skip, t_end, nfit, endpoint=False)
    sol = solve_ivp(rhs, (0.0, t_end), f0, method="Radau", jac=jac,
                    t_eval=t_fit, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"oscillatory angular solve failed: {sol.message}")
    s12 = np.empty(nfit)
    for i, (ti, fi) in enumerate(zip(sol.t, sol.y.T)):
        s12[i] = total_stress(fi, flow.grad_u(ti), m, basis)[0, 1]
    design = np.stack([np.sin(t_fit), np.cos(t_fit)], axis=-1)
    (a, b), res, _, _ = np.linalg.lstsq(design, s12, rcond=None)
    amp = float(np.hypot(a, b))
    resid = float(np.sqrt(res[0]) / max(amp, 1e-300)) if res.size else 0.0
    if resid > 0.05:
        raise RuntimeError(f"sinusoid fit residual {resid:.1%} exceeds 5%")
    out = measure(sol.y[:, -1], flow, m, basis, t=sol.t[-1])
    out.phase = float(np.arctan2(b, a))
    out.amplitude = amp
    out.fit_residual = resid
    return out


@dataclass
class SweepComparison:
    """Leading ε-coefficients of measured viscometric quantities next to the
    ordered-fluid predictions."""
    eps_list: list
    measured: dict = field(default_factory=dict)      # name -> per-eps values
    extrapolated: dict = field(default_factory=dict)  # name -> leading coefficient
    predicted: dict = field(default_factory=dict)
    rel_err: dict = field(default_factory=dict)


def _leading_coefficient(eps: np.ndarray, q: np.ndarray) -> float:
    """Fit q(eps)/eps = a + b*eps + c*eps^2 and return a (the O(eps) slope)."""
    coef = np.polyfit(eps, q / eps, min(2, len(eps) - 1))
    return float(coef[-1])


def richardson(q_eps: float, q_half: float) -> float:
    """Second-order Richardson extrapolation from values at eps and eps/2."""
    return (4.0 * q_half - q_eps) / 3.0


def epsilon_sweep_extrapolate(flow: ImposedFlow, m: ModelParams, basis,
                              eps_list) -> SweepComparison:
    """Measure viscometric quantities over an epsilon sweep, extract their
    leading O(eps) coefficients by polynomial fit in eps, and compare with the
    ordered-fluid predictions (per unit eps)."""
    eps_arr = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    if len(eps_arr) < 4:
        raise ValueError("need at least 4 epsilon values")
    out = SweepComparison(eps_list=list(eps_arr))
    coeffs = second_order_coeffs(m).to_homogeneous(m.dim)
    pred1 = predict_viscometric(coeffs, 1.0, order=2, u0_swim=m.u0_swim)
    eta0_tilde = _newtonian_eta(m)
    rows = {"nu10": [], "nu20": [], "eta_e_excess": [], "phase": []}
    for eps in eps_arr:
        mi = ModelParams(re=m.re, pe=m.pe, eps=float(eps), lam=m.lam,
                         theta=m.theta, u0_swim=m.u0_swim, dim=m.dim)
        if flow.kind == "oscillatory":
            v = oscillatory_viscometrics(flow, mi, basis)
            rows["phase"].append(v.phase)
        else:
            v = steady_viscometrics(flow, mi, basis)
            if flow.kind == "shear":
                rows["nu10"].append(v.nu10)
                if v.nu20 is not None:
                    rows["nu20"].append(v.nu20)
            if v.eta_e is not None:
                newt = 3.0 if flow.dim == 3 else 4.0
                rows["eta_e_excess"].append(v.eta_e - newt * eta0_tilde)
    predicted = {
        "nu10": pred1.nu10,
        "nu20": pred1.nu20,
        "eta_e_excess": pred1.elongational_slope * flow.kappa,
        "phase": coeffs.gamma1 / eta0_tilde,  # phase ~ arctan(eps*gamma1/eta0~)
    }
    for name, vals in rows.items():
        if not vals:
            continue
        vals = np.asarray(vals)
        out.measured[name] = vals
        out.extrapolated[name] = _leading_coefficient(eps_arr, vals)
        out.predicted[name] = predicted[name]
        p = predicted[name]
        out.rel_err[name] = abs(out.extrapolated[name] - p) / max(abs(p), 1e-300)
    return out


def shear_thinning_curvature(m: ModelParams, basis, kappas=None) -> float:
    """Curvature d eta / d kappa^2 of the steady shear viscosity at the given
    eps, from a quadratic fit of eta(kappa) over small shear rates."""
    if kappas is None:
        kappas = (0.05, 0.1, 0.15, 0.2)
    kap = np.asarray(kappas, dtype=float)
    etas = np.array([steady_viscometrics(ImposedFlow("shear", k, m.dim), m, basis).eta
                     for k in kap])
    # eta is even in kappa: fit against kappa^2 (include kappa^4 to absorb
    # the next correction)
    design = np.stack([np.ones_like(kap), kap ** 2, kap ** 4], axis=-1)
    coef, *_ = np.linalg.lstsq(design, etas, rcond=None)
    return float(coef[1])


def _newtonian_eta(m: ModelParams) -> float:
    """Zero-shear-rate viscosity 1 + lam*(theta+2)/(2d(d+2))."""
    d = m.dim
    return 1.0 + m.lam * (m.theta + 2.0) / (2.0 * d * (d + 2))
