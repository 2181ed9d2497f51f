"""Numerical laboratory for singular/degenerate fully nonlinear elliptic PDEs.

The package studies equations of the form

    -|grad u|^alpha F(D^2 u) + b(x) |grad u|^beta = f(x)

with a regularized-continuation Dirichlet solver, a 1D shooting oracle,
ergodic-constant estimation via boundary-amplitude ladders, and
verification of boundary blow-up asymptotics (exponent, amplitude,
gradient rate, uniqueness up to additive constants).
"""

from .errors import (
    BoundaryNode,
    BracketFailure,
    ConfigError,
    DegenerateOperator,
    DimensionMismatch,
    EmptyRegion,
    ErgopdeError,
    HypothesisViolated,
    InsufficientSpan,
    InvalidBoundary,
    InvalidRegime,
    LadderNonConvergence,
    NonConvergence,
    OutOfRange,
    PreconditionViolated,
    UnresolvedLayer,
    UnsupportedCase,
)
from .model import (
    Box,
    EquationInstance,
    ErgodicData,
    ExponentPair,
    ScalarField,
    amplitude_C,
    chi,
    ergodic_data_for,
    face_normals,
    instance_from_config,
    instance_to_config,
    rescale_residual_factor,
    validate_exponents,
)
from .operators import (
    BellmanMax,
    CheckReport,
    EllipticityBounds,
    PucciMinus,
    PucciPlus,
    ScaledTrace,
    SymMatrix,
    check_homogeneity,
    check_uniform_ellipticity,
    eval_operator,
)
from .grid import (
    BoundaryLayer,
    GridFunction,
    UniformGrid,
    boundary_distance,
    boundary_layer,
    gradient,
    hessian,
    holder_seminorm,
    lipschitz_seminorm,
    load_binary,
    save_binary,
    save_csv,
)
from .solver import (
    SolveReport,
    SolverConfig,
    comparison_probe,
    regularized_rhs,
    residual,
    residual_field,
    solve_dirichlet,
)
from .oracle1d import (
    ShootState,
    blowup_profile_fit,
    ergodic_constant_1d,
    exact_dirichlet_1d,
    export_report,
    shoot_blowup,
)
from .ergodic import (
    ErgodicExperiment,
    check_uniqueness_hypotheses,
    estimate_ergodic_constant,
    rescaled_solution,
    solve_at,
    verify_blowup_profile,
    verify_gradient_rate,
    verify_uniqueness,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ErgopdeError", "OutOfRange", "DimensionMismatch", "DegenerateOperator",
    "BoundaryNode", "EmptyRegion", "InsufficientSpan", "InvalidBoundary",
    "NonConvergence", "PreconditionViolated", "InvalidRegime",
    "BracketFailure", "LadderNonConvergence", "UnresolvedLayer",
    "UnsupportedCase", "HypothesisViolated", "ConfigError",
    # model
    "ExponentPair", "ScalarField", "Box", "EquationInstance", "ErgodicData",
    "validate_exponents", "chi", "amplitude_C", "rescale_residual_factor",
    "face_normals", "ergodic_data_for", "instance_to_config",
    "instance_from_config",
    # operators
    "SymMatrix", "EllipticityBounds", "ScaledTrace", "PucciPlus",
    "PucciMinus", "BellmanMax", "CheckReport", "eval_operator",
    "check_uniform_ellipticity", "check_homogeneity",
    # grid
    "UniformGrid", "GridFunction", "BoundaryLayer", "gradient", "hessian",
    "holder_seminorm", "lipschitz_seminorm", "boundary_distance",
    "boundary_layer", "save_csv", "save_binary", "load_binary",
    # solver
    "SolverConfig", "SolveReport", "residual", "residual_field",
    "regularized_rhs", "solve_dirichlet", "comparison_probe",
    # oracle1d
    "ShootState", "exact_dirichlet_1d", "shoot_blowup",
    "ergodic_constant_1d", "blowup_profile_fit", "export_report",
    # ergodic
    "ErgodicExperiment", "solve_at", "estimate_ergodic_constant",
    "verify_blowup_profile", "verify_gradient_rate", "verify_uniqueness",
    "check_uniqueness_hypotheses", "rescaled_solution",
]
