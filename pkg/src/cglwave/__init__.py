"""Long-wave perturbations of the constant state of the complex Ginzburg-Landau equation."""

__version__ = "0.1.0"

from .errors import (
    CGLWaveError,
    ConfigurationError,
    LemmaViolation,
    NumericalInstability,
    RegimeViolation,
    VanishingRisk,
)
from .spectral import Field, GridSpec, PerturbationParams, VectorField
from .hydro import HydroState, build_psi, extract_hydro, symmetrize, desymmetrize
from .solver import SolverConfig, Trajectory, integrate, integrate_bv, strang_step
from .linear import propagate_cd, propagate_damped_wave, propagate_parabolic, verify_semigroup_bounds
from .experiments import (
    ComparisonResult,
    ControlSeries,
    ScalingFit,
    control_function,
    energy_inequality_monitor,
    residual_bv_reformulated,
    residual_bz,
    run_comparison,
    sweep_and_fit,
)
from .config import RunConfig, parse_config

__all__ = [
    "CGLWaveError", "ConfigurationError", "LemmaViolation", "NumericalInstability",
    "RegimeViolation", "VanishingRisk",
    "Field", "GridSpec", "PerturbationParams", "VectorField",
    "HydroState", "build_psi", "extract_hydro", "symmetrize", "desymmetrize",
    "SolverConfig", "Trajectory", "integrate", "integrate_bv", "strang_step",
    "propagate_cd", "propagate_damped_wave", "propagate_parabolic", "verify_semigroup_bounds",
    "ComparisonResult", "ControlSeries", "ScalingFit", "control_function",
    "energy_inequality_monitor", "residual_bv_reformulated", "residual_bz",
    "run_comparison", "sweep_and_fit",
    "RunConfig", "parse_config",
]
