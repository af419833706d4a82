"""Nonintrusive affine decomposition and certified reduced-basis solvers."""

__version__ = "0.1.0"

from .eim import EmpiricalInterpolation, SampleGrid, gamma_recursion_check
from .exceptions import (
    LengthMismatchError,
    NirbError,
    RankDeficientError,
    SingularMatrixError,
    SingularReducedSystemError,
    ZeroDistanceError,
)
from .nonintrusive import (
    AffineDecomposition,
    DecompositionReport,
    ParameterFeature,
    ScalarFamily,
    TwoStageDecomposition,
    exp_power_family,
    features_from_provider,
    monomial_feature,
    ratio_feature,
    validate_decomposition,
)
from .problems import (
    KernelProblemConfig,
    ParameterDomain,
    ProblemProvider,
    affine_toy_provider,
    cost_function_eval,
    impedance_penalty,
    kernel_provider,
    sphere_cloud,
    truth_solve,
)
from .rbm import (
    DistributionSpec,
    OnlineSolution,
    ReducedBasisSolver,
    UqResult,
    compute_infsup_lb,
    sample_parameters,
)

__all__ = [
    "AffineDecomposition",
    "DecompositionReport",
    "DistributionSpec",
    "EmpiricalInterpolation",
    "KernelProblemConfig",
    "LengthMismatchError",
    "NirbError",
    "OnlineSolution",
    "ParameterDomain",
    "ParameterFeature",
    "ProblemProvider",
    "RankDeficientError",
    "ReducedBasisSolver",
    "SampleGrid",
    "ScalarFamily",
    "SingularMatrixError",
    "SingularReducedSystemError",
    "TwoStageDecomposition",
    "UqResult",
    "ZeroDistanceError",
    "affine_toy_provider",
    "compute_infsup_lb",
    "cost_function_eval",
    "exp_power_family",
    "features_from_provider",
    "gamma_recursion_check",
    "impedance_penalty",
    "kernel_provider",
    "monomial_feature",
    "ratio_feature",
    "sample_parameters",
    "sphere_cloud",
    "truth_solve",
    "validate_decomposition",
]
