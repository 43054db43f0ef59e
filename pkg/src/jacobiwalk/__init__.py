"""Jacobi hypergroups on [0, inf): special functions, convolution, random
walks and numerical checks of their limit theorems."""

from .errors import (ConfigError, ConvergenceError, DomainError, JacobiWalkError,
                     NumericOverflowError, QuadratureWarning)
from .hypergroup import (AngularRadialPoint, MeasureKind, QuadratureSpec, convolve_point_expect,
                         convolve_sample, integrate_m, measure_density, moment_fn, sample_m)
from .specfun import (JacobiParams, bessel_j, gauss_2f1, jacobi_phi_integral, jacobi_phi_series,
                      log_gamma, reg_lower_inc_gamma)
from .walk import (HyperbolicSpaceSpec, StepDistribution, WalkConfig, compress,
                   hyperbolic_params, sample_step, simulate_walk)

__version__ = "0.1.0"

__all__ = [
    "AngularRadialPoint", "ConfigError", "ConvergenceError", "DomainError",
    "HyperbolicSpaceSpec", "JacobiParams", "JacobiWalkError", "MeasureKind",
    "NumericOverflowError", "QuadratureSpec", "QuadratureWarning", "StepDistribution",
    "WalkConfig", "bessel_j", "compress", "convolve_point_expect", "convolve_sample",
    "gauss_2f1", "hyperbolic_params", "integrate_m", "jacobi_phi_integral",
    "jacobi_phi_series", "log_gamma", "measure_density", "moment_fn",
    "reg_lower_inc_gamma", "sample_m", "sample_step", "simulate_walk",
]
