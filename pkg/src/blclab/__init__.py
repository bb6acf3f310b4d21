"""Numerical laboratory for the four Gordon-type equations.

Solutions of the sine-Gordon, sinh-Gordon, and their elliptic variants are
linked by first-order transform systems and algebraic superposition
formulas, and each solution parametrizes a constant-curvature surface in
flat 3-space of Euclidean or Lorentzian signature.  This package evaluates
all six parameter cases, verifies the claimed identities numerically, and
builds the associated surfaces.
"""

from .case import (
    AnalyticSolution,
    CaseConfig,
    CongruenceParams,
    GridMismatch,
    GridTooSmall,
    InvalidCase,
    PhiOutOfRange,
    ScalarField,
    all_cases,
    case_by_id,
    congruence_params,
    derive_case,
    gen_trig,
    pde_residual,
    sample,
    uniform_axis,
)
from .seeds import (
    SeedKind,
    SeedSpec,
    UnknownSpec,
    example_solution,
    kink_seed,
    seed_solution,
    zero_seed,
)
from .backlund import (
    AlphaUndefinedOnGrid,
    BTSystem,
    SeedNotOnGrid,
    bt_gradient,
    bt_residual,
    bt_system,
    compatibility_defect,
    integrate_bt,
)
from .superpose import (
    DuplicatePhi,
    EqualPhis,
    Lattice,
    LatticeNode,
    SuperposeInput,
    WrongCaseFamily,
    bianchi_lattice,
    elliptic_sine_constraint,
    elliptic_sinh_constraint,
    hyperbolic_coefficient,
    singularity_mask,
    structure_constants,
    superpose,
    superpose_elliptic_sine,
    superpose_elliptic_sinh,
    superpose_hyperbolic,
)
from .geometry import (
    CongruenceReport,
    DegenerateAlpha,
    DegenerateMetric,
    FormCoefficients,
    GridContainsSingularAxis,
    ParametricSurface,
    SurfaceMesh,
    SurfaceName,
    builtin_surface,
    congruence_check,
    detect_index,
    fundamental_forms_from_alpha,
    numerical_curvature,
    predicted_index,
    pseudo_cross,
    pseudo_dot,
    sample_surface,
    surface_forms,
    transform_surface,
)

__version__ = "0.1.0"
