"""
Explicit reconstruction of anisotropic complex admittivity tensors from
internal magnetic-field data in two dimensions.
"""
from .cgo import (
    CgoBasis,
    DEFAULT_ANGLES,
    IlluminationError,
    analytic_M,
    analytic_M_tilde,
    analytic_lambdas,
    cgo_determinant,
    cgo_field,
    check_independence,
    choose_illuminations,
    factor_Q,
    gamma_tilde,
    make_basis,
)
from .diff_ops import divergence, gradient, scalar_curl, vector_curl
from .experiment import (
    ExperimentConfig,
    StageError,
    load_config,
    rerun_from_fields,
    run_experiment,
    write_outputs,
)
from .forward import (
    BoundaryTrace,
    ForwardSolution,
    ForwardSolveError,
    assemble_operator,
    solve_maxwell,
    solve_maxwell_many,
)
from .grid import (
    ComplexScalarField,
    ComplexVectorField,
    Grid2D,
    PhysicsParams,
    SymTensorField,
    make_grid,
    validate_ellipticity,
)
from .metrics import cross_section, error_table, relative_l2
from .noise import add_noise
from .phantoms import discontinuity_mask, load_phantom, simulation1, simulation2
from .reconstruction import (
    build_M_system,
    compute_lambdas,
    finalize,
    reconstruct,
    solve_gamma_pointwise,
)
from .regularization import RegConfig, regularize, split_bregman_tv, tikhonov

__version__ = "0.1.0"
