"""Ritz (Dirichlet) and Neumann projections: WG Poisson solves with Pi_h grad v data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import assemble_stiffness
from .rt import RtField, interpolate_Pih
from .solver import RESIDUAL_TOL, SolverError, solve_spd
from .space import WgFunction, project_edges
from .weak_gradient import WeakGradOperator


@dataclass(eq=False)
class ProjectionResult:
    projected: WgFunction
    rhs_interp: RtField
    residual: float
    multiplier: float = 0.0


def weak_grad_load(q: RtField, op: WeakGradOperator) -> np.ndarray:
    """b[a] = (q, grad_w phi_a) for every basis function phi_a of V_h."""
    sp = op.space
    local = np.einsum("km,kmn,kna->ka", q.coeffs, op.rt.mass, op.G)
    b = np.zeros(sp.n_dofs)
    np.add.at(b, sp.local_to_global.ravel(), local.ravel())
    return b


def _relres(M, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(M @ x - b)
    return float(r / nb) if nb > 0 else float(r)


def ritz_project(v, grad_v, op: WeakGradOperator, A=None) -> ProjectionResult:
    """R_h v in V_{0,h} from (grad_w R_h v, grad_w psi) = (Pi_h grad v, grad_w psi).

    ``v`` is only used for its boundary trace: if it does not vanish there,
    the boundary edge values are set to Q_b v and the equation is imposed
    on V_{0,h} test functions.
    """
    sp = op.space
    A = assemble_stiffness(op) if A is None else A
    q = interpolate_Pih(grad_v, op.rt)
    b = weak_grad_load(q, op)
    free, bnd = sp.free_dofs, sp.boundary_dofs
    bnd_edges = np.flatnonzero(sp.mesh.boundary_edge)
    x = np.zeros(sp.n_dofs)
    x[bnd] = project_edges(v, sp, edges=bnd_edges).ravel()
    rhs = b[free] - A[free][:, bnd] @ x[bnd]
    A_ff = A[free][:, free]
    x[free] = solve_spd(A_ff, rhs)
    return ProjectionResult(sp.from_vector(x), q, _relres(A_ff, x[free], rhs))


def neumann_project(grad_v, op: WeakGradOperator, A=None) -> ProjectionResult:
    """N_h v in the mean-zero subspace, via a Lagrange multiplier on int v_0."""
    sp = op.space
    A = assemble_stiffness(op) if A is None else A
    q = interpolate_Pih(grad_v, op.rt)
    b = weak_grad_load(q, op)
    m = sps.csr_matrix(sp.interior_integrals[None, :])
    K = sps.bmat([[A, m.T], [m, None]], format="csc")
    rhs = np.concatenate([b, [0.0]])
    try:
        x = spla.splu(K).solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"Neumann projection factorisation failed: {exc}") from exc
    res = _relres(K, x, rhs)
    if res > RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.2e} exceeds {RESIDUAL_TOL:.0e}")
    return ProjectionResult(sp.from_vector(x[:-1]), q, res, float(x[-1]))
