"""Lyapunov exponent and rotation number of products of random SL(2,R) matrices near the identity."""

from .closed_form import ScalingEvaluation, UnsupportedFamilyError, omega_closed
from .coeffs import DisorderModel, build_coefficients, classify_zeros, structural_family
from .fp_solver import gamma_from_density, stationary_density
from .monte_carlo import McConfig, simulate_product, simulate_sde
from .perturbation import omega_weak
from .sl2 import DomainError

__all__ = [
    "DisorderModel", "DomainError", "McConfig", "ScalingEvaluation", "UnsupportedFamilyError",
    "build_coefficients", "classify_zeros", "gamma_from_density", "omega_closed", "omega_weak",
    "simulate_product", "simulate_sde", "stationary_density", "structural_family",
]
