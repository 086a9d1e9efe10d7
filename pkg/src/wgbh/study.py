"""Convergence studies over nested red-refined meshes and table output."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_stab_mass, assemble_stiffness, assemble_system
from .mesh import Mesh, generate_unit_square, refine_uniform
from .norms import ErrorReport, OrderFit, error_norms, fit_order
from .problems import ProblemSpec, check_problem
from .projections import neumann_project, ritz_project
from .solver import Solution, solve
from .space import WgSpace, project_Qh
from .weak_gradient import WeakGradOperator

log = logging.getLogger(__name__)

COLUMNS = ("grad_e_u", "e_u0", "e_ub", "grad_e_w", "e_w0", "e_wb")
COLUMN_TITLES = ("||grad_w e_u||", "||e_u0||", "||e_ub||", "||grad_w e_w||", "||e_w0||", "||e_wb||")


@dataclass
class StudyConfig:
    n0: int = 14
    jitter: float = 0.2
    seed: int = 7
    j: int = 0
    solver: str = "direct"
    projection_errors: bool = False


@dataclass
class ConvergenceTable:
    problem: str
    j: int
    hs: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # one tuple of COLUMNS values per level

    def add(self, h: float, values) -> None:
        self.hs.append(float(h))
        self.rows.append(tuple(float(v) for v in values))

    def column(self, name: str) -> np.ndarray:
        return np.array([r[COLUMNS.index(name)] for r in self.rows])

    def orders(self) -> dict[str, OrderFit]:
        return {c: fit_order(self.hs, self.column(c)) for c in COLUMNS}


@dataclass(eq=False)
class LevelResult:
    mesh: Mesh
    space: WgSpace
    op: WeakGradOperator
    solution: Solution
    u_report: ErrorReport
    w_report: ErrorReport


def solve_level(mesh: Mesh, problem: ProblemSpec, j: int = 0, solver: str = "direct",
                projection_errors: bool = False) -> LevelResult:
    """Assemble, solve and measure errors for one problem on one mesh."""
    space = WgSpace(mesh, j)
    op = WeakGradOperator(space)
    S = assemble_stab_mass(space)
    A = assemble_stiffness(op)
    sys = assemble_system(space, op, problem.rhs_f, problem.g1, problem.g2, S=S, A=A)
    sol = solve(sys, method=solver)
    if projection_errors:
        if not problem.smooth:
            raise ValueError(f"projection errors are not defined for {problem.name}")
        ref_u = ritz_project(problem.exact_u, problem.grad_u, op, A=A).projected
        ref_w = neumann_project(problem.grad_w, op, A=A).projected
    else:
        ref_u = project_Qh(problem.exact_u, space)
        ref_w = project_Qh(problem.exact_w, space)
    return LevelResult(mesh, space, op, sol,
                       error_norms(ref_u - sol.u_h, op), error_norms(ref_w - sol.w_h, op))


def run_convergence(problem: ProblemSpec, levels: int = 5, config: StudyConfig | None = None,
                    mesh: Mesh | None = None) -> ConvergenceTable:
    """Solve on ``levels`` nested meshes, starting from ``mesh`` or a jittered unit square."""
    config = config or StudyConfig()
    if levels < 1:
        raise ValueError("levels must be >= 1")
    check_problem(problem)
    if mesh is None:
        mesh = generate_unit_square(config.n0, config.jitter, config.seed)
    table = ConvergenceTable(problem.name, config.j)
    for level in range(levels):
        if level:
            mesh = refine_uniform(mesh)
        res = solve_level(mesh, problem, config.j, config.solver, config.projection_errors)
        u, w = res.u_report, res.w_report
        table.add(mesh.h, (u.grad_norm, u.l2_0, u.edge, w.grad_norm, w.l2_0, w.edge))
        log.info("%s level %d: h=%.4g, %d triangles, solve %.1fs", problem.name, level,
                 mesh.h, mesh.n_triangles, res.solution.solve_stats.get("seconds", 0.0))
    return table


def _fmt(x: float) -> str:
    return f"{x:.2e}"


def emit(table: ConvergenceTable, fmt: str = "csv") -> str:
    """Render the table; two trailing order rows appear once there are >= 2 levels."""
    if not table.rows:
        raise ValueError("empty table")
    header = ["h", *COLUMNS]
    body = [[_fmt(h), *map(_fmt, row)] for h, row in zip(table.hs, table.rows)]
    if len(table.rows) >= 2:
        orders = table.orders()
        body.append(["order_lsq", *(f"{orders[c].lsq:.4f}" for c in COLUMNS)])
        body.append(["order_pairwise_last", *(f"{orders[c].pairwise[-1]:.4f}" for c in COLUMNS)])
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(["h", *COLUMN_TITLES]) + " |",
                 "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(r) + " |" for r in body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
