"""Dimensionless parameters, effective ordered-fluid coefficients, and
closed-form viscometric predictors.

Everything in this module is exact arithmetic on parameter sets; the only
"physics" is the set of coefficient formulas for the second- and third-order
fluid models derived from the kinetic rod-suspension system.  Coefficients
come in two normalizations:

* ``inhomogeneous``: the coefficient multiplies a spatial density field that
  is normalized per unit solid angle (uniform state = 1/omega_d); carries a
  factor omega_d.
* ``homogeneous``: evaluated at the uniform density 1/omega_d, i.e. the
  inhomogeneous value divided by omega_d.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, replace

__all__ = [
    "ModelParams",
    "PhysicalParams",
    "OrderedFluidCoefficients",
    "ViscometricPrediction",
    "sphere_area",
    "nondimensionalize",
    "second_order_coeffs",
    "third_order_coeffs",
    "predict_viscometric",
]


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^{dim-1} (2*pi or 4*pi)."""
    if dim == 2:
        return 2.0 * math.pi
    if dim == 3:
        return 4.0 * math.pi
    raise ValueError(f"dim must be 2 or 3, got {dim}")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless numbers of the kinetic rod-suspension system.

    re: Reynolds number (0 for Stokes, 1 for 2D Navier-Stokes).
    pe: Peclet number, > 0; math.inf is allowed as a sentinel but only for
        angular-only/homogeneous computations (spatial solvers reject it).
    eps: Weissenberg number, the small expansion parameter, > 0.
    lam: shape/volume-fraction parameter lambda >= 0.
    theta: activity parameter (6 for passive particles).
    u0_swim: swimming speed ratio.
    dim: spatial dimension, 2 or 3.
    """

    re: float
    pe: float
    eps: float
    lam: float
    theta: float
    u0_swim: float
    dim: int

    def __post_init__(self):
        if not (self.pe > 0):
            raise ValueError("pe must be positive (math.inf allowed)")
        if not (self.eps > 0):
            raise ValueError("eps must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.re not in (0, 1):
            raise ValueError("re must be 0 or 1")

    @property
    def omega(self) -> float:
        return sphere_area(self.dim)

    def validate_spatial(self) -> None:
        """Constraints that only bind for spatially coupled solves."""
        if math.isinf(self.pe):
            raise ValueError("pe = inf is only valid for angular-only solves")
        if self.re == 1 and self.dim != 2:
            raise ValueError("re = 1 requires dim = 2 for spatial solves")
        if self.dim == 3 and self.re != 0:
            raise ValueError("dim = 3 spatial solves require re = 0")

    @classmethod
    def passive(cls, *, re=0.0, pe=1.0, eps=0.1, lam=0.1, dim=3) -> "ModelParams":
        """Passive-rod preset: no swimming, theta = 6."""
        return cls(re=re, pe=pe, eps=eps, lam=lam, theta=6.0, u0_swim=0.0, dim=dim)

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(self.pe):
            d["pe"] = "inf"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        d = dict(d)
        if d.get("pe") == "inf":
            d["pe"] = math.inf
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "ModelParams":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional (SI) inputs for the slender-rod suspension.

    number_density is the particle count per unit volume (N / L^d in the
    obvious notation).  dipole_strength may be negative (pushers) or zero.
    """

    fluid_density: float      # rho_fl
    solvent_viscosity: float  # mu_fl
    thermal_energy: float     # k_B * Theta
    rod_length: float         # ell
    rod_width: float          # a
    swim_speed: float         # V0, may be 0 or negative
    dipole_strength: float    # alpha, may be 0 or negative
    number_density: float
    flow_scale: float         # u0
    length_scale: float       # L

    def __post_init__(self):
        positive = [
            self.fluid_density, self.solvent_viscosity, self.thermal_energy,
            self.rod_length, self.rod_width, self.number_density,
            self.length_scale,
        ]
        if any(not (v > 0) for v in positive):
            raise ValueError("all geometric/material parameters must be positive")


def nondimensionalize(p: PhysicalParams, *, dim: int = 3) -> ModelParams:
    """Map dimensional parameters to the dimensionless set.

    Uses the slender-body drag coefficients
        zeta_ro = pi * mu * ell^3 / (3 log(ell/a)),
        zeta_tr = 2 pi * mu * ell / log(ell/a),
    which gives Pe/Wi = 6 L^2 / ell^2.  The activity parameter is
    theta = 6 + 2 alpha |V0| ell^2 mu / (k_B Theta); passive rods (V0 = 0)
    give theta = 6.
    """
    if p.rod_length <= p.rod_width:
        raise ValueError("rod_length must exceed rod_width (slender body)")
    if p.flow_scale == 0:
        raise ValueError("flow_scale must be nonzero")
    log_ar = math.log(p.rod_length / p.rod_width)
    zeta_ro = math.pi * p.solvent_viscosity * p.rod_length ** 3 / (3.0 * log_ar)
    zeta_tr = 2.0 * math.pi * p.solvent_viscosity * p.rod_length / log_ar
    re = p.fluid_density * p.flow_scale * p.length_scale / p.solvent_viscosity
    pe = p.flow_scale * p.length_scale * zeta_tr / p.thermal_energy
    wi = p.flow_scale * zeta_ro / (p.thermal_energy * p.length_scale)
    lam = zeta_ro * p.number_density / (2.0 * p.solvent_viscosity)
    theta = 6.0 + 2.0 * p.dipole_strength * abs(p.swim_speed) \
        * p.rod_length ** 2 * p.solvent_viscosity / p.thermal_energy
    return ModelParams(
        re=re, pe=pe, eps=wi, lam=lam, theta=theta,
        u0_swim=p.swim_speed / p.flow_scale, dim=dim,
    )


@dataclass(frozen=True)
class OrderedFluidCoefficients:
    """Effective coefficients of the second/third-order fluid models.

    Third-order fields are NaN unless filled by third_order_coeffs (they are
    only derived in the homogeneous, Pe = inf, U0 = 0 regime).
    """

    eta0: float
    eta1: float
    mu0: float
    gamma1: float
    gamma2: float
    kappa1: float = math.nan
    kappa2: float = math.nan
    kappa3: float = math.nan
    mu1: float = math.nan
    mu2: float = math.nan
    normalization: str = "inhomogeneous"

    def to_homogeneous(self, dim: int) -> "OrderedFluidCoefficients":
        """Divide the density-multiplying coefficients by omega_d."""
        if self.normalization == "homogeneous":
            return self
        w = sphere_area(dim)
        return replace(
            self,
            eta1=self.eta1 / w, gamma1=self.gamma1 / w, gamma2=self.gamma2 / w,
            normalization="homogeneous",
        )


def second_order_coeffs(m: ModelParams, *, normalization: str = "inhomogeneous") -> OrderedFluidCoefficients:
    """Second-order fluid coefficients (eta0, eta1, mu0, gamma1, gamma2)."""
    d = m.dim
    w = m.omega
    c = OrderedFluidCoefficients(
        eta0=1.0,
        eta1=m.lam * (m.theta + 2.0) * w / (2.0 * d * (d + 2)),
        mu0=m.u0_swim ** 2 / (d * (d - 1)),
        gamma1=-m.lam * m.theta * w / (4.0 * d ** 2 * (d + 2)),
        gamma2=m.lam * w / (2.0 * d ** 2 * (d + 4)) * (m.theta + 2.0 * d / (d + 2)),
    )
    if normalization == "homogeneous":
        c = c.to_homogeneous(d)
    elif normalization != "inhomogeneous":
        raise ValueError(f"unknown normalization {normalization!r}")
    return c


def third_order_coeffs(m: ModelParams) -> OrderedFluidCoefficients:
    """Third-order coefficients, homogeneous normalization.

    The stress coefficients kappa1..kappa3 are derived for Pe = inf, U0 = 0;
    mu1, mu2 (density-equation corrections) are defined for any U0.
    """
    d = m.dim
    base = second_order_coeffs(m, normalization="homogeneous")
    return replace(
        base,
        kappa1=m.lam * m.theta / (8.0 * d ** 3 * (d + 2)),
        kappa2=-m.lam * (3.0 * m.theta + 2.0 * d / (d + 2)) / (8.0 * d ** 3 * (d + 4)),
        kappa3=m.lam * (
            2.0 * d * (3 * d ** 2 + 10 * d + 6)
            + m.theta * (d + 4) * (3 * d ** 2 + 11 * d + 12)
        ) / (8.0 * d ** 3 * (d + 2) ** 2 * (d + 4) * (d + 6)),
        mu1=(3.0 * d + 1) * m.u0_swim ** 2 / (d * (d - 1) ** 2 * (d + 2)),
        mu2=m.u0_swim ** 2 / (2.0 * d * (d - 1) * (d + 2)),
    )


@dataclass(frozen=True)
class ViscometricPrediction:
    """Closed-form small-Wi viscometric functions of the ordered-fluid model."""

    zero_shear_viscosity: float       # eta at kappa -> 0
    shear_curvature: float            # d eta / d kappa^2 (third order only, else 0)
    nu10: float                       # first normal-stress coefficient
    nu20: float                       # second normal-stress coefficient (d=3)
    elongational_slope: float         # d eta_E / d kappa
    phase_shift: float                # oscillatory-shear phase of sigma_12


def predict_viscometric(c: OrderedFluidCoefficients, eps: float, *,
                        order: int = 2, u0_swim: float = 0.0) -> ViscometricPrediction:
    """Viscometric functions implied by the coefficient set.

    With alpha1 = eps*gamma1, alpha2 = eps*gamma2 (homogeneous values):
    nu10 = -2 alpha1, nu20 = 2 alpha1 + alpha2, elongational slope
    3(alpha1+alpha2), phase shift arctan(alpha1/eta0_tilde).  order=3 adds
    the shear-thinning curvature 2 eps^2 (kappa2+kappa3).
    """
    if c.normalization != "homogeneous":
        raise ValueError("viscometric predictions need homogeneous coefficients")
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    if order == 3 and u0_swim != 0.0:
        raise ValueError("third-order stress coefficients require u0_swim = 0")
    a1 = eps * c.gamma1
    a2 = eps * c.gamma2
    eta_tilde = c.eta0 + c.eta1
    curvature = 2.0 * eps ** 2 * (c.kappa2 + c.kappa3) if order == 3 else 0.0
    return ViscometricPrediction(
        zero_shear_viscosity=eta_tilde,
        shear_curvature=curvature,
        nu10=-2.0 * a1,
        nu20=2.0 * a1 + a2,
        elongational_slope=3.0 * (a1 + a2),
        phase_shift=math.atan(a1 / eta_tilde),
    )
