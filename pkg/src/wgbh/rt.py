"""Broken Raviart-Thomas space Sigma_h, the L^2 projection P_h and the interpolant Pi_h.

Basis functions on each triangle are stored as monomial coefficients in the
scaled local coordinates used by :mod:`wgbh.space`, one coefficient row per
vector component.  Local DOF order: normal moments on local edges 0, 1, 2
(against the shifted Legendre basis in the global edge parameter, with the
global edge normal), then interior moments against (P_{j-1})^2.  Because the
edge DOFs are tied to global edges, equal edge coefficients on both sides of
an edge mean a continuous normal component.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Mesh
from .quadrature import map_segment, map_triangle, segment_rule, triangle_rule
from .space import (
    RHS_EDGE_DEGREE,
    RHS_TRI_DEGREE,
    SUPPORTED_ORDERS,
    eval_monomials,
    legendre01,
    monomial_exponents,
)


class DegenerateElementError(ValueError):
    pass


def rt_dim(j: int) -> int:
    return (j + 1) * (j + 3)


def _derivative_matrices(degree: int):
    """Dx, Dy mapping monomial coefficients of ``degree`` to those of ``degree - 1``."""
    src = monomial_exponents(degree)
    dst = {e: i for i, e in enumerate(monomial_exponents(max(degree - 1, 0)))}
    Dx = np.zeros((len(dst), len(src)))
    Dy = np.zeros((len(dst), len(src)))
    for col, (a, b) in enumerate(src):
        if a:
            Dx[dst[(a - 1, b)], col] = a
        if b:
            Dy[dst[(a, b - 1)], col] = b
    return Dx, Dy


def _spanning_set(j: int) -> np.ndarray:
    """(P_j)^2 + xi * (homogeneous P_j) as coefficient arrays (r, 2, nmon(j+1))."""
    exps = monomial_exponents(j + 1)
    index = {e: i for i, e in enumerate(exps)}
    funcs = []
    for comp in (0, 1):
        for a, b in monomial_exponents(j):
            f = np.zeros((2, len(exps)))
            f[comp, index[(a, b)]] = 1.0
            funcs.append(f)
    for a, b in monomial_exponents(j):
        if a + b != j:
            continue
        f = np.zeros((2, len(exps)))
        f[0, index[(a + 1, b)]] = 1.0
        f[1, index[(a, b + 1)]] = 1.0
        funcs.append(f)
    out = np.array(funcs)
    assert len(out) == rt_dim(j)
    return out


class RtSpace:
    """Per-triangle RT_j tables: basis coefficients, divergences, mass matrices."""

    def __init__(self, mesh: Mesh, j: int = 0):
        if j not in SUPPORTED_ORDERS:
            raise ValueError(f"order j={j} not supported")
        if np.any(mesh.signed_areas <= 0):
            raise DegenerateElementError("triangle with non-positive area")
        self.mesh = mesh
        self.j = j
        self.dim = rt_dim(j)
        self.n_edge = j + 1
        self.n_mon = len(monomial_exponents(j + 1))
        self.coeffs = self._closed_form_rt0() if j == 0 else self._dual_basis()

    # -- construction ------------------------------------------------------
    def _closed_form_rt0(self) -> np.ndarray:
        # q_i = sign_i (x - p_i) / (2|K|) with x - p_i = (c - p_i) + h (xi, eta)
        m = self.mesh
        c = m.centroids[:, None, :] - m.corners  # (nt, 3, 2)
        scale = m.tri_sign / (2.0 * m.areas[:, None])
        C = np.zeros((m.n_triangles, 3, 2, 3))
        C[:, :, 0, 0] = c[..., 0]
        C[:, :, 1, 0] = c[..., 1]
        C[:, :, 0, 1] = m.h_per_tri[:, None]
        C[:, :, 1, 2] = m.h_per_tri[:, None]
        return C * scale[:, :, None, None]

    def _dual_basis(self) -> np.ndarray:
        span = _spanning_set(self.j)
        nt = self.mesh.n_triangles
        raw = np.broadcast_to(span, (nt,) + span.shape)
        D = self.dof_matrix(raw)  # (nt, ndof, nspan)
        cond = np.linalg.cond(D)
        if not np.all(np.isfinite(cond)) or cond.max() > 1e12:
            raise DegenerateElementError("RT degree-of-freedom matrix is singular")
        B = np.linalg.inv(D)  # column n of B gives basis n in the spanning set
        return np.einsum("kmn,mcp->kncp", B, span)

    def dof_matrix(self, coeffs: np.ndarray) -> np.ndarray:
        """Apply all local DOF functionals to fields given by monomial coefficients.

        ``coeffs`` has shape (nt, nf, 2, nmon); the result is (nt, dim, nf).
        """
        m = self.mesh
        deg = 2 * self.j + 2
        pts, w, s = self._local_edge_quadrature(deg)
        vals = self._eval_coeffs(coeffs, pts)  # (nt, 3*nq, nf, 2)
        nq = len(s)
        vals = vals.reshape(m.n_triangles, 3, nq, -1, 2)
        n = m.edge_normals[m.tri_edges]  # global normals (nt, 3, 2)
        flux = np.einsum("kiqfc,kic->kiqf", vals, n)
        L = legendre01(s, self.j)
        edge = np.einsum("kiq,qn,kiqf->kinf", w, L, flux).reshape(m.n_triangles, -1, coeffs.shape[1])
        if self.j == 0:
            return edge
        tp, tw = map_triangle(m.corners, triangle_rule(deg))
        tv = self._eval_coeffs(coeffs, tp)  # (nt, nq, nf, 2)
        xi, eta = self._local_coords(tp)
        P = eval_monomials(xi, eta, self.j - 1)  # (nt, nq, np)
        inner = np.einsum("kq,kqa,kqfc->kcaf", tw, P, tv).reshape(m.n_triangles, -1, coeffs.shape[1])
        inner = inner / m.h_per_tri[:, None, None]
        return np.concatenate([edge, inner], axis=1)

    # -- evaluation --------------------------------------------------------
    def _local_coords(self, pts):
        c = self.mesh.centroids[:, None, :]
        h = self.mesh.h_per_tri[:, None]
        return (pts[..., 0] - c[..., 0]) / h, (pts[..., 1] - c[..., 1]) / h

    def _eval_coeffs(self, coeffs, pts):
        xi, eta = self._local_coords(pts)
        mon = eval_monomials(xi, eta, self.j + 1)  # (nt, nq, nmon)
        return np.einsum("kfcp,kqp->kqfc", coeffs, mon)

    def eval_basis(self, pts: np.ndarray) -> np.ndarray:
        """Basis values at per-triangle points (nt, nq, 2) -> (nt, nq, dim, 2)."""
        return self._eval_coeffs(self.coeffs, pts)

    def _local_edge_quadrature(self, degree: int):
        """Points on the three local edges of each triangle, in global edge parametrisation.

        Returns points (nt, 3*nq, 2), weights (nt, 3, nq) and the parameters (nq,).
        """
        m = self.mesh
        rule = segment_rule(degree)
        e = m.tri_edges
        seg = m.vertices[m.edges[e]]  # (nt, 3, 2, 2)
        pts, w = map_segment(seg, rule)
        return pts.reshape(m.n_triangles, -1, 2), w, rule.points

    def edge_normal_traces(self, degree: int):
        """Outward normal traces of the basis on local edges.

        Returns values (nt, 3, nq, dim), weights (nt, 3, nq), parameters (nq,).
        """
        m = self.mesh
        pts, w, s = self._local_edge_quadrature(degree)
        vals = self.eval_basis(pts).reshape(m.n_triangles, 3, len(s), self.dim, 2)
        n_out = m.edge_normals[m.tri_edges] * m.tri_sign[..., None]
        return np.einsum("kiqdc,kic->kiqd", vals, n_out), w, s

    @cached_property
    def divergence(self) -> np.ndarray:
        """Divergence of each basis function as P_j monomial coefficients (nt, dim, nmon(j))."""
        Dx, Dy = _derivative_matrices(self.j + 1)
        d = self.coeffs[..., 0, :] @ Dx.T + self.coeffs[..., 1, :] @ Dy.T
        return d / self.mesh.h_per_tri[:, None, None]

    @cached_property
    def mass(self) -> np.ndarray:
        """Local mass matrices (nt, dim, dim)."""
        pts, w = map_triangle(self.mesh.corners, triangle_rule(2 * self.j + 2))
        v = self.eval_basis(pts)
        return np.einsum("kq,kqmc,kqnc->kmn", w, v, v)

    @cached_property
    def mass_cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.mass)
        except np.linalg.LinAlgError:
            raise DegenerateElementError("RT mass matrix is not positive definite") from None

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        """Solve M_K X = rhs for every triangle; rhs is (nt, dim) or (nt, dim, ncol)."""
        vec = rhs.ndim == 2
        b = rhs[..., None] if vec else rhs
        L = self.mass_cholesky
        y = np.linalg.solve(L, b)
        x = np.linalg.solve(np.swapaxes(L, -1, -2), y)
        return x[..., 0] if vec else x

    def zeros(self) -> "RtField":
        return RtField(self, np.zeros((self.mesh.n_triangles, self.dim)))


def rt_basis(tri, j: int = 0) -> RtSpace:
    """RT_j tables on a single triangle given by its three vertices.

    Edge normals follow the index convention of a one-element mesh, so
    local edges 0 and 2 carry outward normals and edge 1 an inward one.
    """
    tri = np.asarray(tri, dtype=float)
    return RtSpace(Mesh(tri, np.array([[0, 1, 2]])), j)


@dataclass(eq=False)
class RtField:
    space: RtSpace
    coeffs: np.ndarray  # (nt, dim)

    def __post_init__(self):
        if self.coeffs.shape != (self.space.mesh.n_triangles, self.space.dim):
            raise ValueError("RT coefficient array has the wrong shape")

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        """Field values at per-triangle points (nt, nq, 2) -> (nt, nq, 2)."""
        return np.einsum("kqdc,kd->kqc", self.space.eval_basis(pts), self.coeffs)

    def divergence(self) -> np.ndarray:
        """Elementwise divergence as P_j monomial coefficients (nt, nmon(j))."""
        return np.einsum("kdp,kd->kp", self.space.divergence, self.coeffs)

    def inner(self, other: "RtField") -> float:
        return float(np.einsum("km,kmn,kn->", self.coeffs, self.space.mass, other.coeffs))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def normal_jumps(self, degree: int | None = None) -> np.ndarray:
        """Legendre coefficients (ne, j+1) of the normal jump on every edge.

        Interior edges: sum of the two outward traces; boundary edges: the
        one-sided outward trace.
        """
        sp = self.space
        m = sp.mesh
        deg = 2 * sp.j + 2 if degree is None else degree
        tr, w, s = sp.edge_normal_traces(deg)
        vals = np.einsum("kiqd,kd->kiq", tr, self.coeffs)
        L = legendre01(s, sp.j)
        mom = np.einsum("kiq,qn,kiq->kin", w, L, vals)  # (nt, 3, nb)
        out = np.zeros((m.n_edges, sp.n_edge))
        np.add.at(out, m.tri_edges.ravel(), mom.reshape(-1, sp.n_edge))
        k = np.arange(sp.n_edge)
        return out / (m.edge_lengths[:, None] / (2 * k + 1))

    def __add__(self, other):
        return RtField(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return RtField(self.space, self.coeffs - other.coeffs)

    def __mul__(self, alpha):
        return RtField(self.space, alpha * self.coeffs)

    __rmul__ = __mul__


def project_Ph(q, space: RtSpace, degree: int = RHS_TRI_DEGREE) -> RtField:
    """Elementwise L^2 projection onto Sigma_h; ``q(x, y)`` returns (..., 2)."""
    pts, w = map_triangle(space.mesh.corners, triangle_rule(degree))
    vals = q(pts[..., 0], pts[..., 1])
    rhs = np.einsum("kq,kqdc,kqc->kd", w, space.eval_basis(pts), vals)
    return RtField(space, space.solve_mass(rhs))


def interpolate_Pih(q, space: RtSpace, edge_degree: int = RHS_EDGE_DEGREE,
                    tri_degree: int = RHS_TRI_DEGREE) -> RtField:
    """Canonical RT interpolant from the DOFs (normal-continuous by construction)."""
    m = space.mesh
    rule = segment_rule(edge_degree)
    pts, w = map_segment(m.vertices[m.edges], rule)
    qn = np.einsum("eqc,ec->eq", q(pts[..., 0], pts[..., 1]), m.edge_normals)
    L = legendre01(rule.points, space.j)
    edge_dofs = np.einsum("eq,qn,eq->en", w, L, qn)  # per global edge
    dofs = edge_dofs[m.tri_edges].reshape(m.n_triangles, -1)
    if space.j > 0:
        tp, tw = map_triangle(m.corners, triangle_rule(tri_degree))
        tv = q(tp[..., 0], tp[..., 1])
        xi, eta = space._local_coords(tp)
        P = eval_monomials(xi, eta, space.j - 1)
        inner = np.einsum("kq,kqa,kqc->kca", tw, P, tv).reshape(m.n_triangles, -1)
        dofs = np.hstack([dofs, inner / m.h_per_tri[:, None]])
    return RtField(space, dofs)
