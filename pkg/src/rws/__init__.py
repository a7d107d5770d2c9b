"""Spectral solver for time-periodic solutions of the completely resonant
forced wave equation u_tt - u_xx = eps * f(t, x, u) on (0, pi) with
Dirichlet boundary conditions.

The solve splits along the kernel of the wave operator: the component off
the kernel is obtained by a contracting fixed-point iteration, the kernel
component by constrained minimization of the reduced functional on a ball.
"""

from .errors import (
    AlphaOutOfRange,
    ConfigError,
    DimensionMismatch,
    Diverged,
    EvaluationDomain,
    EvenCount,
    GridTooLarge,
    KappaOutOfRange,
    MaxIterations,
    NegativeWeight,
    NonpositiveM,
    NoSignChange,
    NotInRange,
    NotInRangeSpace,
    RealityViolation,
    RwsError,
    SignMismatch,
    UnknownSymmetryClass,
    ZeroShift,
)
from .fields import (
    GridField,
    KernelElement,
    SpectralField,
    TorusProfile,
    analyze,
    integrate,
    kernel_embed,
    norm,
    synthesize,
)
from .forcing import (
    ForcingSpec,
    RescaledProblem,
    contraction_constants,
    custom_forcing,
    evaluate_F,
    evaluate_f,
    evaluate_f_u,
    monotone_forcing,
    power_plus_forcing,
    power_profile_forcing,
    rescale_resonant,
)
from .identities import (
    CutoffVariation,
    SymmetricFunction,
    alpha_k,
    coercivity_constant,
    coercivity_gap,
    cutoff_variation,
    elementary_inequalities,
    l2k_strip_bounds,
    odd_product_integral,
    strip_integral,
    symmetry_integral,
)
from .harness import (
    RunConfig,
    SolveReport,
    SweepResult,
    build_forcing,
    catalog_field,
    load_field,
    run_build_h,
    run_solve,
    run_sweep,
    run_verify,
    save_field,
)
from .hbuilder import (
    HResult,
    build_H,
    chi,
    compute_c,
    solve_kappa,
    verify_H,
)
from .operators import (
    OperatorWorkspace,
    dalembert_apply,
    dalembert_inverse,
    difference_quotient,
    project_kernel,
    project_range,
    translate,
    weak_residual,
)
from .range_solver import RangeSolution, range_residual, solve_range
from .reducer import (
    MinimizeConfig,
    ReducedState,
    directional_derivative,
    minimize_in_ball,
    reduced_functional,
    reduced_gradient,
)

__version__ = "0.1.0"
