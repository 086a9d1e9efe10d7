"""The weak Galerkin space V_h = {v_0 on triangles, v_b on edges}.

Interior basis on K: monomials in ``((x - c_K) / h_K, (y - c_K) / h_K)`` up to
degree j.  Edge basis: shifted Legendre polynomials in the global arclength
parameter ``s`` running from the lower to the higher vertex index.

Global numbering puts all interior DOFs first (triangle-major), followed by
the edge DOFs (edge-major).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Mesh
from .quadrature import map_segment, map_triangle, segment_rule, triangle_rule

SUPPORTED_ORDERS = (0, 1)
RHS_TRI_DEGREE = 8
RHS_EDGE_DEGREE = 10


def monomial_exponents(degree: int) -> list[tuple[int, int]]:
    return [(d - k, k) for d in range(degree + 1) for k in range(d + 1)]


def eval_monomials(xi, eta, degree: int) -> np.ndarray:
    """Stack of xi^a eta^b for all a + b <= degree, along a new last axis."""
    return np.stack([xi**a * eta**b for a, b in monomial_exponents(degree)], axis=-1)


def eval_monomial_grads(xi, eta, degree: int) -> np.ndarray:
    """d/dxi and d/deta of each monomial, shape (..., nmon, 2)."""
    out = []
    for a, b in monomial_exponents(degree):
        dx = a * xi ** max(a - 1, 0) * eta**b if a else np.zeros_like(xi)
        dy = b * xi**a * eta ** max(b - 1, 0) if b else np.zeros_like(xi)
        out.append(np.stack([dx, dy], axis=-1))
    return np.stack(out, axis=-2)


def legendre01(s, degree: int) -> np.ndarray:
    """Shifted Legendre polynomials on [0, 1] up to ``degree`` (degree <= 1)."""
    cols = [np.ones_like(s)]
    if degree >= 1:
        cols.append(2.0 * s - 1.0)
    return np.stack(cols, axis=-1)


class WgSpace:
    """DOF bookkeeping and local bases for V_h of order j on ``mesh``."""

    def __init__(self, mesh: Mesh, j: int = 0):
        if j not in SUPPORTED_ORDERS:
            raise ValueError(f"order j={j} not supported (choose from {SUPPORTED_ORDERS})")
        self.mesh = mesh
        self.j = j
        self.n_int = (j + 1) * (j + 2) // 2
        self.n_edge = j + 1
        self.n_local = self.n_int + 3 * self.n_edge
        self.n_interior_dofs = mesh.n_triangles * self.n_int
        self.n_dofs = self.n_interior_dofs + mesh.n_edges * self.n_edge

    # -- numbering ---------------------------------------------------------
    @cached_property
    def local_to_global(self) -> np.ndarray:
        """(nt, n_local): interior DOFs, then local edges 0, 1, 2."""
        nt = self.mesh.n_triangles
        interior = np.arange(self.n_interior_dofs).reshape(nt, self.n_int)
        e = self.mesh.tri_edges
        edge = self.n_interior_dofs + e[:, :, None] * self.n_edge + np.arange(self.n_edge)
        return np.hstack([interior, edge.reshape(nt, -1)])

    def edge_dofs(self, edges) -> np.ndarray:
        edges = np.asarray(edges)
        return (self.n_interior_dofs + edges[:, None] * self.n_edge + np.arange(self.n_edge)).ravel()

    @cached_property
    def boundary_dofs(self) -> np.ndarray:
        return self.edge_dofs(np.flatnonzero(self.mesh.boundary_edge))

    @cached_property
    def free_mask(self) -> np.ndarray:
        """True on DOFs of V_{0,h} (everything but boundary-edge DOFs)."""
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        return mask

    @cached_property
    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.free_mask)

    @cached_property
    def interior_integrals(self) -> np.ndarray:
        """Vector m with m @ v = int_Omega v_0 dx (zero on edge DOFs)."""
        pts, w = self.tri_quadrature(2 * self.j + 2)
        phi = self.interior_basis(pts)
        m = np.zeros(self.n_dofs)
        m[: self.n_interior_dofs] = np.einsum("kq,kqa->ka", w, phi).ravel()
        return m

    # -- bases -------------------------------------------------------------
    def local_coords(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Scaled local coordinates for points ``pts`` of shape (nt, nq, 2)."""
        c = self.mesh.centroids[:, None, :]
        h = self.mesh.h_per_tri[:, None]
        return (pts[..., 0] - c[..., 0]) / h, (pts[..., 1] - c[..., 1]) / h

    def interior_basis(self, pts: np.ndarray) -> np.ndarray:
        """Interior basis values at per-triangle points (nt, nq, 2) -> (nt, nq, n_int)."""
        xi, eta = self.local_coords(pts)
        return eval_monomials(xi, eta, self.j)

    def interior_basis_grad(self, pts: np.ndarray) -> np.ndarray:
        """Physical gradients (nt, nq, n_int, 2)."""
        xi, eta = self.local_coords(pts)
        return eval_monomial_grads(xi, eta, self.j) / self.mesh.h_per_tri[:, None, None, None]

    def edge_basis(self, s: np.ndarray) -> np.ndarray:
        return legendre01(s, self.j)

    # -- quadrature on all entities ------------------------------------------
    def tri_quadrature(self, degree: int):
        rule = triangle_rule(degree)
        return map_triangle(self.mesh.corners, rule)

    def edge_quadrature(self, degree: int, edges=None):
        """Points (ne, nq, 2), weights (ne, nq) and parameters s (nq,) on global edges."""
        rule = segment_rule(degree)
        e = self.mesh.edges if edges is None else self.mesh.edges[edges]
        pts, w = map_segment(self.mesh.vertices[e], rule)
        return pts, w, rule.points

    def local_edge_quadrature(self, degree: int):
        """Quadrature on the three local edges of each triangle (global edge parametrisation).

        Returns points (nt, 3, nq, 2), weights (nt, 3, nq) and parameters s (nq,).
        """
        rule = segment_rule(degree)
        seg = self.mesh.vertices[self.mesh.edges[self.mesh.tri_edges]]
        pts, w = map_segment(seg, rule)
        return pts, w, rule.points

    def trace_jump_basis(self, degree: int):
        """Values of v_0 - v_b for each local basis function on each local edge.

        Returns D (nt, 3, nq, n_local), weights (nt, 3, nq), parameters (nq,).
        """
        pts, w, s = self.local_edge_quadrature(degree)
        nt, nq = self.mesh.n_triangles, len(s)
        phi = self.interior_basis(pts.reshape(nt, -1, 2)).reshape(nt, 3, nq, self.n_int)
        L = self.edge_basis(s)
        D = np.zeros((nt, 3, nq, self.n_local))
        D[..., : self.n_int] = phi
        for l in range(3):
            start = self.n_int + l * self.n_edge
            D[:, l, :, start:start + self.n_edge] = -L
        return D, w, s

    @cached_property
    def interior_mass(self) -> np.ndarray:
        """Local interior mass matrices (nt, n_int, n_int)."""
        pts, w = self.tri_quadrature(2 * self.j + 2)
        phi = self.interior_basis(pts)
        return np.einsum("kq,kqa,kqb->kab", w, phi, phi)

    @cached_property
    def edge_mass_diag(self) -> np.ndarray:
        """Diagonal of the edge mass matrices (ne, n_edge): |e| / (2k + 1)."""
        k = np.arange(self.n_edge)
        return self.mesh.edge_lengths[:, None] / (2 * k + 1)

    # -- functions ---------------------------------------------------------
    def zeros(self) -> "WgFunction":
        return WgFunction(self, np.zeros((self.mesh.n_triangles, self.n_int)),
                          np.zeros((self.mesh.n_edges, self.n_edge)))

    def constant(self, c: float) -> "WgFunction":
        v = self.zeros()
        v.interior[:, 0] = c
        v.edge[:, 0] = c
        return v

    def from_vector(self, x: np.ndarray) -> "WgFunction":
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_dofs,):
            raise ValueError(f"expected vector of length {self.n_dofs}, got {x.shape}")
        return WgFunction(
            self,
            x[: self.n_interior_dofs].reshape(-1, self.n_int).copy(),
            x[self.n_interior_dofs:].reshape(-1, self.n_edge).copy(),
        )

    def random(self, rng: np.random.Generator, homogeneous: bool = False) -> "WgFunction":
        v = self.from_vector(rng.standard_normal(self.n_dofs))
        if homogeneous:
            v.edge[self.mesh.boundary_edge] = 0.0
        return v


@dataclass(eq=False)
class WgFunction:
    """v = {v_0, v_b}: interior coefficients (nt, n_int) and edge coefficients (ne, n_edge)."""

    space: WgSpace
    interior: np.ndarray
    edge: np.ndarray

    def __post_init__(self):
        sp = self.space
        if self.interior.shape != (sp.mesh.n_triangles, sp.n_int):
            raise ValueError("interior coefficient array has the wrong shape")
        if self.edge.shape != (sp.mesh.n_edges, sp.n_edge):
            raise ValueError("edge coefficient array has the wrong shape")

    @property
    def j(self) -> int:
        return self.space.j

    def vector(self) -> np.ndarray:
        return np.concatenate([self.interior.ravel(), self.edge.ravel()])

    def local(self) -> np.ndarray:
        """Local coefficient vectors (nt, n_local) in local_to_global order."""
        return self.vector()[self.space.local_to_global]

    def in_v0h(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.edge[self.space.mesh.boundary_edge]) <= tol))

    def eval(self, tri: int, point) -> float:
        """Value of v_0 on triangle ``tri`` at ``point``."""
        mesh = self.space.mesh
        if not 0 <= tri < mesh.n_triangles:
            raise IndexError(f"triangle index {tri} out of range")
        p = np.asarray(point, dtype=float)
        xi, eta = (p - mesh.centroids[tri]) / mesh.h_per_tri[tri]
        return float(eval_monomials(xi, eta, self.j) @ self.interior[tri])

    def eval_edge(self, edge: int, s: float) -> float:
        """Value of v_b on ``edge`` at parameter s in [0, 1] (from lower to higher vertex)."""
        if not 0 <= edge < self.space.mesh.n_edges:
            raise IndexError(f"edge index {edge} out of range")
        return float(legendre01(np.float64(s), self.j) @ self.edge[edge])

    def _combine(self, other, a, b):
        if other.space is not self.space:
            raise ValueError("functions live on different spaces")
        return WgFunction(self.space, a * self.interior + b * other.interior,
                          a * self.edge + b * other.edge)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, alpha: float):
        return WgFunction(self.space, alpha * self.interior, alpha * self.edge)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def project_Qh(f, space: WgSpace, tri_degree: int = RHS_TRI_DEGREE,
               edge_degree: int = RHS_EDGE_DEGREE) -> WgFunction:
    """Elementwise and edgewise L^2 projection Q_h f = {Q_0 f, Q_b f}."""
    pts, w = space.tri_quadrature(tri_degree)
    phi = space.interior_basis(pts)
    rhs = np.einsum("kq,kqa,kq->ka", w, phi, f(pts[..., 0], pts[..., 1]))
    interior = np.linalg.solve(space.interior_mass, rhs[..., None])[..., 0]
    return WgFunction(space, interior, project_edges(f, space, edge_degree))


def project_edges(f, space: WgSpace, degree: int = RHS_EDGE_DEGREE, edges=None) -> np.ndarray:
    """Q_b f on the selected edges (all by default), shape (n_sel, n_edge)."""
    pts, w, s = space.edge_quadrature(degree, edges)
    L = space.edge_basis(s)
    rhs = np.einsum("eq,qk,eq->ek", w, L, f(pts[..., 0], pts[..., 1]))
    diag = space.edge_mass_diag if edges is None else space.edge_mass_diag[edges]
    return rhs / diag


def mean_value(v: WgFunction) -> float:
    """int_Omega v_0 dx."""
    return float(v.space.interior_integrals @ v.vector())
