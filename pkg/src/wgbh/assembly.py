"""Global matrices and the saddle-point system of the WG mixed scheme.

Unknowns are ordered ``[w (all of V_h), u (free DOFs of V_{0,h})]`` and the
system reads

    [ S   -A_f ] [w]   [ -G2 + A_b u_b ]
    [-A_f^T  0 ] [u] = [ -F_f          ]

with S the stabilised mass matrix, A the weak-gradient stiffness matrix,
A_f / A_b its columns on free / boundary DOFs, u_b = Q_b g1 the eliminated
essential values, G2 = <g2, phi_b> over the boundary and F = (f, psi_0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .space import RHS_EDGE_DEGREE, RHS_TRI_DEGREE, WgSpace, project_edges
from .weak_gradient import WeakGradOperator


def _scatter(space: WgSpace, local: np.ndarray) -> sps.csr_matrix:
    l2g = space.local_to_global
    n = space.n_local
    rows = np.repeat(l2g, n, axis=1).ravel()
    cols = np.tile(l2g, (1, n)).ravel()
    mat = sps.coo_matrix((local.ravel(), (rows, cols)), shape=(space.n_dofs,) * 2).tocsr()
    mat.sum_duplicates()
    return mat


def local_stab_mass(space: WgSpace) -> np.ndarray:
    """Local matrices of (v0, phi0)_K + h_K <v0 - vb, phi0 - phib>_dK, (nt, n_local, n_local)."""
    nt = space.mesh.n_triangles
    local = np.zeros((nt, space.n_local, space.n_local))
    local[:, : space.n_int, : space.n_int] = space.interior_mass
    D, w, _ = space.trace_jump_basis(2 * space.j + 2)
    local += space.mesh.h_per_tri[:, None, None] * np.einsum("klq,klqa,klqb->kab", w, D, D)
    return local


def assemble_stab_mass(space: WgSpace) -> sps.csr_matrix:
    S = _scatter(space, local_stab_mass(space))
    return ((S + S.T) * 0.5).tocsr()


def local_stiffness(op: WeakGradOperator) -> np.ndarray:
    return np.einsum("kda,kde,keb->kab", op.G, op.rt.mass, op.G)


def assemble_stiffness(op: WeakGradOperator) -> sps.csr_matrix:
    """A_full[a, b] = (grad_w phi_a, grad_w phi_b) over all of V_h."""
    A = _scatter(op.space, local_stiffness(op))
    # exact symmetry; quadrature round-off may break it in the last bit
    return ((A + A.T) * 0.5).tocsr()


def load_vector(space: WgSpace, f, degree: int = RHS_TRI_DEGREE) -> np.ndarray:
    """F[a] = (f, phi_a^0) on interior DOFs, zero on edge DOFs."""
    pts, w = space.tri_quadrature(degree)
    phi = space.interior_basis(pts)
    F = np.zeros(space.n_dofs)
    F[: space.n_interior_dofs] = np.einsum("kq,kqa,kq->ka", w, phi, f(pts[..., 0], pts[..., 1])).ravel()
    return F


def boundary_flux_vector(space: WgSpace, g2, degree: int = RHS_EDGE_DEGREE) -> np.ndarray:
    """G2[a] = <g2, phi_b> on boundary edge DOFs; ``g2(x, y, nx, ny)`` uses outward normals."""
    mesh = space.mesh
    bnd = np.flatnonzero(mesh.boundary_edge)
    G = np.zeros(space.n_dofs)
    if not bnd.size:
        return G
    pts, w, s = space.edge_quadrature(degree, bnd)
    n = mesh.boundary_outward_normals()[:, None, :]
    vals = g2(pts[..., 0], pts[..., 1], np.broadcast_to(n[..., 0], w.shape), np.broadcast_to(n[..., 1], w.shape))
    G[space.edge_dofs(bnd)] = np.einsum("eq,qk,eq->ek", w, space.edge_basis(s), vals).ravel()
    return G


@dataclass(eq=False)
class LinearSystem:
    space: WgSpace
    op: WeakGradOperator
    S: sps.csr_matrix
    A: sps.csr_matrix
    matrix: sps.csr_matrix
    rhs: np.ndarray
    free_u: np.ndarray  # global DOF indices of the u unknowns
    lift_dofs: np.ndarray  # eliminated boundary DOFs
    lift_values: np.ndarray  # Q_b g1 on those DOFs
    F: np.ndarray
    G2: np.ndarray

    @property
    def n_w(self) -> int:
        return self.space.n_dofs

    @property
    def n_u(self) -> int:
        return len(self.free_u)


def _zero(x, y, *rest):
    return np.zeros_like(x)


def assemble_system(space: WgSpace, op: WeakGradOperator, f, g1=None, g2=None,
                    S=None, A=None) -> LinearSystem:
    """Assemble the mixed WG system for data f, u = g1 and du/dn = g2 on the boundary.

    ``S`` and ``A`` may be passed in to reuse matrices across right-hand sides.
    """
    g1 = _zero if g1 is None else g1
    g2 = _zero if g2 is None else g2
    S = assemble_stab_mass(space) if S is None else S
    A = assemble_stiffness(op) if A is None else A
    free = space.free_dofs
    bnd = space.boundary_dofs
    bnd_edges = np.flatnonzero(space.mesh.boundary_edge)
    ub = project_edges(g1, space, RHS_EDGE_DEGREE, bnd_edges).ravel()

    A_f = A[:, free]
    matrix = sps.bmat([[S, -A_f], [-A_f.T, None]], format="csr")
    F = load_vector(space, f)
    G2 = boundary_flux_vector(space, g2)
    top = -G2 + A[:, bnd] @ ub
    rhs = np.concatenate([top, -F[free]])
    return LinearSystem(space, op, S, A, matrix, rhs, free, bnd, ub, F, G2)
