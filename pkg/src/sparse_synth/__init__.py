"""Sparse linear array synthesis by low-rank Hankel matrix completion."""

from .errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    PencilError,
    SolverError,
    SynthError,
)
from .array_model import (
    ElementLayout,
    Excitation,
    PatternMetrics,
    PatternSampleGrid,
    dolph_chebyshev_taper,
    evaluate_pattern,
    pattern_metrics,
    steering_vector,
)
from .sampling import (
    ConstraintSpec,
    Notch,
    RegionPartition,
    SampleSet,
    build_constraints,
    partition_mainlobe,
    sample_reference,
)
from .hankel import HankelSpec, antidiagonal_index, dehankelize, hankelize, numerical_rank
from .completion import (
    ConicSubproblem,
    LogDetState,
    build_subproblem,
    hermitian_real_embedding,
    init_state,
    run_logdet,
)
from .solvers import ClarabelSolver, ConicProblem, ConicSolution, ScsSolver, SolverInterface
from .pencil import (
    SparseArraySolution,
    baseline_mpm,
    ls_weights,
    pencil_eigenvalues,
    pencil_matrices,
    positions_from_eigenvalues,
    reconstruct_pattern,
    solve_pencil,
)

__version__ = "0.1.0"
