"""Embedded and hybridizable discontinuous Galerkin solvers for mixed
diffusion problems on polygonal meshes, with a convergence-study harness."""
from .basis import BasisConditioningError, CellBasis, EdgeBasis, build_cell_basis, build_edge_basis
from .condensed_system import (
    CondensedSystem,
    DiscreteSolution,
    SolverError,
    TraceSpace,
    assemble,
    build_trace_space,
    recover,
    solve,
    solve_problem,
)
from .error_analysis import (
    ConvergenceReport,
    ErrorRecord,
    field_norms,
    l2_error_sigma,
    l2_error_u,
    observed_rates,
    seminorm_error,
)
from .estimator import EDGSolver, locate_points
from .harness import RunConfig, RunError, run_convergence, run_dof_comparison
from .local_solver import CoefficientError, LocalSolveError, assemble_local, condense
from .mesh import (
    Mesh,
    MeshError,
    generate_uniform_quadrilateral,
    generate_uniform_triangular,
    read_mesh,
    validate_regularity,
    write_mesh,
)
from .problems import ProblemDefinition, polynomial_problem, sine_product_problem
from .projections import averaged_trace, boundary_interpolant, project_M, project_V, project_W

__all__ = [name for name in dir() if not name.startswith("_")]
