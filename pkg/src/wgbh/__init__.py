"""Weak Galerkin finite elements for the Ciarlet-Raviart biharmonic problem on triangles."""

from .assembly import LinearSystem, assemble_stab_mass, assemble_stiffness, assemble_system
from .mesh import Mesh, MeshError, dump_mesh, generate_unit_square, load_mesh, refine_uniform
from .norms import (
    ErrorReport,
    edge_norm,
    error_norms,
    error_report,
    fit_order,
    norm_0h,
    seminorm_1h,
    triple_bar_norm,
    weak_grad_norm,
)
from .problems import ProblemSpec, builtin_problem
from .projections import neumann_project, ritz_project
from .quadrature import QuadRule, integrate_edge, integrate_tri, segment_rule, triangle_rule
from .rt import RtField, RtSpace, interpolate_Pih, project_Ph, rt_basis
from .solver import NotSPDError, Solution, SolverError, solve, solve_spd
from .space import WgFunction, WgSpace, mean_value, project_Qh
from .study import ConvergenceTable, StudyConfig, emit, run_convergence
from .weak_gradient import WeakGradOperator, build_operator

__version__ = "0.1.0"
