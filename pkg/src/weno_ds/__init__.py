"""WENO-DS package initialization.

This package provides fifth-order WENO-JS, WENO-Z and learned WENO-DS
finite-difference solvers for 1-D conservation laws, together with the
tape-based training pipeline and benchmark tools.
"""

from .errors import (
    SolverAbort,
    NonPhysicalState,
    ModelFileError,
    ProblemSpecError,
    TapeError,
    RiemannSolverError,
    ReferenceMissing
)
from .mesh import (
    Boundary,
    Grid1D,
    SolutionField,
    GhostExtension,
    make_grid,
    extend_with_ghosts,
    write_snapshot,
    read_snapshot
)
from .weno_kernel import (
    Weighting,
    SchemeConfig,
    candidate_fluxes,
    smoothness_indicators,
    weights_js,
    weights_z,
    interface_flux
)
from .deep_smoothness import (
    Activation,
    ConvLayerSpec,
    ConvNet,
    MultiplierSource,
    ConstantMultiplier,
    SmoothnessModel,
    default_architecture,
    init_model,
    save_params,
    load_params
)
from .autodiff import Tape, Variable, grad_check
from .flux_models import (
    PrimitiveState,
    RoeFrame,
    lf_split,
    roe_frame,
    euler_flux
)
from .problems import (
    ProblemFamily,
    BurgersIC,
    ScalarProblem,
    EulerProblem,
    parse_problem,
    expand_problem_set
)
from .semidiscrete import semidiscrete_rhs
from .time_integration import StepMode, StepPlan, Trajectory, rk3_step, run
from .reference_oracles import (
    ReferenceSolution,
    StarState,
    fine_reference,
    exact_riemann,
    exact_solution
)
from .training import (
    ProblemSample,
    LossKind,
    TrainingOptions,
    TrainingResult,
    generate_dataset,
    train
)
from .benchmark import (
    L2Convention,
    ErrorReport,
    ConvergenceTable,
    CompareOptions,
    compare,
    convergence_study
)

__all__ = [
    # Errors
    'SolverAbort',
    'NonPhysicalState',
    'ModelFileError',
    'ProblemSpecError',
    'TapeError',
    'RiemannSolverError',
    'ReferenceMissing',

    # Grids and fields
    'Boundary',
    'Grid1D',
    'SolutionField',
    'GhostExtension',
    'make_grid',
    'extend_with_ghosts',
    'write_snapshot',
    'read_snapshot',

    # Reconstruction
    'Weighting',
    'SchemeConfig',
    'candidate_fluxes',
    'smoothness_indicators',
    'weights_js',
    'weights_z',
    'interface_flux',

    # Smoothness network
    'Activation',
    'ConvLayerSpec',
    'ConvNet',
    'MultiplierSource',
    'ConstantMultiplier',
    'SmoothnessModel',
    'default_architecture',
    'init_model',
    'save_params',
    'load_params',

    # Autodiff
    'Tape',
    'Variable',
    'grad_check',

    # Fluxes and problems
    'PrimitiveState',
    'RoeFrame',
    'lf_split',
    'roe_frame',
    'euler_flux',
    'ProblemFamily',
    'BurgersIC',
    'ScalarProblem',
    'EulerProblem',
    'parse_problem',
    'expand_problem_set',

    # Solver
    'semidiscrete_rhs',
    'StepMode',
    'StepPlan',
    'Trajectory',
    'rk3_step',
    'run',

    # References
    'ReferenceSolution',
    'StarState',
    'fine_reference',
    'exact_riemann',
    'exact_solution',

    # Training
    'ProblemSample',
    'LossKind',
    'TrainingOptions',
    'TrainingResult',
    'generate_dataset',
    'train',

    # Benchmarks
    'L2Convention',
    'ErrorReport',
    'ConvergenceTable',
    'CompareOptions',
    'compare',
    'convergence_study'
]
