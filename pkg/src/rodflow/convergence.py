"""Empirical rate studies: kinetic solution vs the order-(0+1) hierarchy on
an epsilon sweep, and the Boussinesq-vs-hierarchical comparison.

Error norms are the continuum ones of the small-Weissenberg estimates,
discretized on the snapshot grid: time integrals by the trapezoid rule,
L-infinity in time by the max over snapshots.

    E_u   = || grad(u_eps - ubar_eps) ||_{L2_t L2_x}
    E_rho = || rho_eps - rhobar_eps ||_{Linf_t L2_x}
            + || grad(rho_eps - rhobar_eps) ||_{L2_t L2_x}
    E_u_inf = || u_eps - ubar_eps ||_{Linf_t L2_x}   (tracked always,
              part of the pass/fail set only for Re = 1)

with ubar = u0 + eps*u1, rhobar = rho0 + eps*rho1.  Slopes come from least
squares on log-log data; the sweep needs at least 4 epsilon values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .angular import CircleBasis
from .hierarchy import BoussinesqStokes, HierarchySolver
from .kinetic import KineticSolver, KineticState, StepperConfig
from .params import ModelParams, second_order_coeffs
from .spectral2d import Grid2D

__all__ = [
    "SlopeFit",
    "ConvergenceReport",
    "smallness_report",
    "fit_loglog",
    "hydrodynamic_limit_study",
    "boussinesq_comparison_study",
]

#: errors below this are treated as identically zero (decoupled limits)
TRIVIAL_FLOOR = 1e-10


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    stderr: float          # standard error of the slope
    trivial: bool = False  # all errors at the solver-noise floor

    @property
    def ci95(self) -> tuple:
        return (self.slope - 1.96 * self.stderr, self.slope + 1.96 * self.stderr)

    def passes(self, threshold: float) -> bool:
        return self.trivial or self.slope >= threshold


@dataclass
class ConvergenceReport:
    eps: list
    errors: dict                      # name -> list of errors, one per eps
    slopes: dict                      # name -> SlopeFit
    threshold: float
    rate_names: list                  # which error names count for pass/fail
    smallness: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)   # per-eps solver summaries
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.slopes[n].passes(self.threshold) for n in self.rate_names)

    def to_dict(self) -> dict:
        return {
            "eps": list(self.eps),
            "errors": {k: list(v) for k, v in self.errors.items()},
            "slopes": {k: {"slope": s.slope, "intercept": s.intercept,
                           "ci95": list(s.ci95), "trivial": s.trivial}
                       for k, s in self.slopes.items()},
            "threshold": self.threshold,
            "rate_names": list(self.rate_names),
            "passed": self.passed,
            "smallness": self.smallness,
            "diagnostics": self.diagnostics,
            "meta": self.meta,
        }

    def table(self):
        """(header, rows) of the per-epsilon error table."""
        names = list(self.errors)
        header = ["eps"] + names
        rows = [[e] + [self.errors[n][i] for n in names]
                for i, e in enumerate(self.eps)]
        return header, rows


def fit_loglog(eps, errs) -> SlopeFit:
    eps = np.asarray(eps, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if len(eps) < 4:
        raise ValueError("slope fits need at least 4 epsilon values")
    if np.all(errs <= TRIVIAL_FLOOR):
        return SlopeFit(slope=np.nan, intercept=np.nan, stderr=np.nan, trivial=True)
    x, y = np.log(eps), np.log(errs)
    coef, cov = np.polyfit(x, y, 1, cov=True)
    return SlopeFit(slope=float(coef[0]), intercept=float(coef[1]),
                    stderr=float(np.sqrt(cov[0, 0])))


def smallness_report(params: ModelParams, rho_init, *, c0: float = 10.0) -> dict:
    """The coupling-smallness gate lam*theta*(1 + Pe)*max|rho| <= 1/c0."""
    value = params.lam * abs(params.theta) * (1.0 + params.pe) * float(np.max(np.abs(rho_init)))
    return {"value": value, "bound": 1.0 / c0, "satisfied": bool(value <= 1.0 / c0)}


def _check_eps_list(eps_list):
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    return eps_list


def hydrodynamic_limit_study(grid: Grid2D, basis: CircleBasis, params: ModelParams,
                             *, h, rho_init, T, dt, eps_list,
                             prepared_order: int = 2, threshold: float = 1.8,
                             smallness_c0: float = 10.0, dt_hier: float | None = None,
                             on_progress=None) -> ConvergenceReport:
    """Kinetic-vs-hierarchy epsilon sweep at fixed spatial/angular resolution.

    prepared_order 2 is the well-prepared protocol; 1 drops g2; 0 is the
    ill-prepared ablation (f0 = rho0 only, no angular correction).
    """
    eps_list = _check_eps_list(eps_list)
    dt_hier = dt if dt_hier is None else dt_hier
    ratio = int(round(dt_hier / dt))
    if abs(ratio * dt - dt_hier) > 1e-12:
        raise ValueError("dt_hier must be an integer multiple of dt")
    smallness = smallness_report(params, rho_init, c0=smallness_c0)

    # the hierarchical trajectory does not depend on eps: run it once and
    # keep every snapshot, keyed by step index
    hs = HierarchySolver(grid, params, h=h)
    s0h = hs.initial_state(rho_init)
    snaps = {}

    def hook(_solver, s):
        snaps[round(s.t / dt_hier)] = (s.u0.copy(), s.rho0.copy(),
                                       s.u1.copy(), s.rho1.copy())

    hs.run(s0h, T, dt_hier, on_step=hook)

    names = ["E_u", "E_rho", "E_u_inf"]
    errors = {n: [] for n in names}
    diagnostics = []
    for eps in eps_list:
        p = replace(params, eps=eps)
        sol = KineticSolver(grid, basis, p, h=h)
        if prepared_order == 0:
            f0 = np.repeat(rho_init[:, :, None], basis.nphi, axis=2) / basis.area
        else:
            f0 = hs.well_prepared_f0(s0h, basis, eps, order=prepared_order)
        u_init = (s0h.u0 + eps * s0h.u1 if params.re == 1
                  else np.zeros((grid.n, grid.n, 2)))
        st = KineticState(f=f0, u=u_init, t=0.0)
        acc = {"gu2": [], "r2_inf": 0.0, "gr2": [], "u_inf": 0.0}

        def khook(solver, s, _eps=eps):
            j = s.t / dt
            if abs(j - round(j)) > 1e-6 or int(round(j)) % ratio:
                return
            u0, r0, u1, r1 = snaps[int(round(j)) // ratio]
            du = s.u - (u0 + _eps * u1)
            dr = solver.rho_f(s.f) - (r0 + _eps * r1)
            acc["gu2"].append(grid.l2_norm(grid.grad_vec(du)) ** 2)
            acc["u_inf"] = max(acc["u_inf"], grid.l2_norm(du))
            acc["r2_inf"] = max(acc["r2_inf"], grid.l2_norm(dr))
            acc["gr2"].append(grid.l2_norm(grid.grad(dr)) ** 2)

        try:
            _, summary = sol.run(st, T, StepperConfig(dt=dt), on_step=khook)
        except RuntimeError as exc:
            raise RuntimeError(f"kinetic solve failed at eps={eps}: {exc}") from exc
        errors["E_u"].append(float(np.sqrt(np.trapezoid(acc["gu2"], dx=dt_hier))))
        errors["E_rho"].append(acc["r2_inf"]
                               + float(np.sqrt(np.trapezoid(acc["gr2"], dx=dt_hier))))
        errors["E_u_inf"].append(acc["u_inf"])
        diagnostics.append({"eps": eps, **summary})
        if on_progress is not None:
            on_progress(eps, {n: errors[n][-1] for n in names})

    rate_names = ["E_u", "E_rho"] + (["E_u_inf"] if params.re == 1 else [])
    return ConvergenceReport(
        eps=eps_list, errors=errors,
        slopes={n: fit_loglog(eps_list, errors[n]) for n in names},
        threshold=threshold, rate_names=rate_names, smallness=smallness,
        diagnostics=diagnostics,
        meta={"T": T, "dt": dt, "n": grid.n, "nphi": basis.nphi,
              "prepared_order": prepared_order, "params": params.to_dict()},
    )


def boussinesq_comparison_study(grid: Grid2D, params: ModelParams, *, h, eps_list,
                                threshold: float = 1.8, tol: float = 1e-10,
                                maxiter: int = 30) -> ConvergenceReport:
    """H1 distance between the Boussinesq-reformulated steady Stokes solution
    and the hierarchical one, on an epsilon sweep (uniform density)."""
    eps_list = _check_eps_list(eps_list)
    c = second_order_coeffs(params, normalization="homogeneous")
    bs = BoussinesqStokes(grid, eta0=c.eta0 + c.eta1, gamma1=c.gamma1,
                          gamma2=c.gamma2, pe=params.pe)
    errors = {"H1": []}
    diagnostics = []
    for eps in eps_list:
        u_b, history = bs.solve(h, eps, tol=tol, maxiter=maxiter)
        u_h = bs.hierarchical_reference(h, eps)
        d = u_b - u_h
        errors["H1"].append(grid.l2_norm(d) + grid.l2_norm(grid.grad_vec(d)))
        diagnostics.append({"eps": eps, "iterations": len(history),
                            "final_update": history[-1]})
    return ConvergenceReport(
        eps=eps_list, errors=errors,
        slopes={"H1": fit_loglog(eps_list, errors["H1"])},
        threshold=threshold, rate_names=["H1"],
        diagnostics=diagnostics,
        meta={"n": grid.n, "params": params.to_dict(),
              "eta0": c.eta0 + c.eta1, "gamma1": c.gamma1, "gamma2": c.gamma2},
    )
