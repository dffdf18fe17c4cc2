"""Moment dynamics for multimode bosonic modes under quadratic Lindblad
generators and their Poisson-jump averages, cross-checked by a dense
truncated-Fock-space oracle."""

from .algebra import (
    DimensionError,
    GeneratorValidationError,
    QuadraticGenerator,
    ValidationReport,
    conjugation_swap,
    gamma_from_jumps,
    structural_matrices,
    symplectic_form,
    tilde_mat,
    tilde_vec,
    validate_generator,
)
from .propagators import (
    CoefficientSchedule,
    DriftData,
    PropagatorBundle,
    constant_bundle,
    drift_data,
    drive_integral_constant,
    integrate_bundle,
    pair_integral_constant,
    propagator_constant,
)
from .moments import (
    MomentHierarchy,
    central_second_moment,
    evolve_hierarchy,
    evolve_trajectory,
    heisenberg_rhs,
    max_relative_error,
)
from .wick import (
    GaussianData,
    gaussian_data_of,
    gaussian_hierarchy,
    gaussianity_residual,
    pairing_sum,
)
from .poisson import (
    BlockSystem,
    OneStepMap,
    PoissonModel,
    PoissonProcessSpec,
    build_block_system,
    central_moment_poisson_rhs,
    evolve_poisson,
    one_step_coefficients,
)

__all__ = [
    "DimensionError",
    "GeneratorValidationError",
    "QuadraticGenerator",
    "ValidationReport",
    "conjugation_swap",
    "gamma_from_jumps",
    "structural_matrices",
    "symplectic_form",
    "tilde_mat",
    "tilde_vec",
    "validate_generator",
    "CoefficientSchedule",
    "DriftData",
    "PropagatorBundle",
    "constant_bundle",
    "drift_data",
    "drive_integral_constant",
    "integrate_bundle",
    "pair_integral_constant",
    "propagator_constant",
    "MomentHierarchy",
    "central_second_moment",
    "evolve_hierarchy",
    "evolve_trajectory",
    "heisenberg_rhs",
    "max_relative_error",
    "GaussianData",
    "gaussian_data_of",
    "gaussian_hierarchy",
    "gaussianity_residual",
    "pairing_sum",
    "BlockSystem",
    "OneStepMap",
    "PoissonModel",
    "PoissonProcessSpec",
    "build_block_system",
    "central_moment_poisson_rhs",
    "evolve_poisson",
    "one_step_coefficients",
]

__version__ = "0.1.0"
