"""rodflow: numerical laboratory for kinetic rod-suspension models and their
small-Weissenberg ordered-fluid limits."""

from .params import (  # noqa: F401
    ModelParams,
    PhysicalParams,
    OrderedFluidCoefficients,
    ViscometricPrediction,
    nondimensionalize,
    second_order_coeffs,
    third_order_coeffs,
    predict_viscometric,
    sphere_area,
)

__version__ = "0.1.0"
