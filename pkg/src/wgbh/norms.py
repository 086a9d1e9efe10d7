"""Mesh-dependent norms on V_h, error reports and convergence-order fits.

Wherever a length scale appears, the per-element h_K is used; edge terms of
the triple-bar norm use h_e, the largest h_K of the triangles sharing e.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sps

from .space import WgFunction, WgSpace, project_Qh
from .weak_gradient import WeakGradOperator


def _trace_jump_sq(v: WgFunction) -> np.ndarray:
    """||v_0 - v_b||^2_{dK} per triangle."""
    sp = v.space
    D, w, _ = sp.trace_jump_basis(2 * sp.j + 2)
    vals = np.einsum("klqa,ka->klq", D, v.local())
    return np.einsum("klq,klq->k", w, vals**2)


def _interior_sq(v: WgFunction) -> np.ndarray:
    pts, w = v.space.tri_quadrature(2 * v.j + 2)
    vals = np.einsum("kqa,ka->kq", v.space.interior_basis(pts), v.interior)
    return np.einsum("kq,kq->k", w, vals**2)


def _grad_sq(v: WgFunction) -> np.ndarray:
    pts, w = v.space.tri_quadrature(2 * v.j + 2)
    g = np.einsum("kqac,ka->kqc", v.space.interior_basis_grad(pts), v.interior)
    return np.einsum("kq,kqc->k", w, g**2)


def l2_interior(v: WgFunction) -> float:
    """||v_0||."""
    return float(np.sqrt(_interior_sq(v).sum()))


def norm_0h(v: WgFunction) -> float:
    hk = v.space.mesh.h_per_tri
    return float(np.sqrt(np.sum(_interior_sq(v) + hk * _trace_jump_sq(v))))


def seminorm_1h(v: WgFunction) -> float:
    hk = v.space.mesh.h_per_tri
    return float(np.sqrt(np.sum(_grad_sq(v) + _trace_jump_sq(v) / hk)))


def norm_1h(v: WgFunction) -> float:
    hk = v.space.mesh.h_per_tri
    return float(np.sqrt(np.sum(_interior_sq(v) + _grad_sq(v) + _trace_jump_sq(v) / hk)))


def weak_grad_norm(v: WgFunction, op: WeakGradOperator) -> float:
    return op.apply(v).norm()


def edge_norm(v: WgFunction) -> float:
    """(sum_K h_K ||v_b||^2_{dK})^{1/2}; every edge is counted once per adjacent triangle."""
    sp = v.space
    per_edge = np.sum(v.edge**2 * sp.edge_mass_diag, axis=1)
    per_tri = per_edge[sp.mesh.tri_edges].sum(axis=1)
    return float(np.sqrt(np.sum(sp.mesh.h_per_tri * per_tri)))


def weak_laplacian_parts(v: WgFunction, op: WeakGradOperator):
    """Elementwise div(grad_w v) (P_j coefficients) and the normal jumps of grad_w v."""
    q = op.apply(v)
    return q.divergence(), q.normal_jumps()


def triple_bar_norm(v: WgFunction, op: WeakGradOperator, tol: float = 0.0) -> float:
    if not v.in_v0h(tol):
        raise ValueError("triple-bar norm is only defined on V_{0,h}")
    sp = v.space
    div, jump = weak_laplacian_parts(v, op)
    div_sq = np.einsum("ka,kab,kb->", div, sp.interior_mass, div)
    jump_sq = np.sum(np.sum(jump**2 * sp.edge_mass_diag, axis=1) / sp.mesh.edge_h)
    return float(np.sqrt(div_sq + jump_sq))


def inf_sup_witness(psi: WgFunction, op: WeakGradOperator) -> WgFunction:
    """v* with v*_0 = -div grad_w psi and v*_b = h_e^{-1} [[grad_w psi . n]]."""
    div, jump = weak_laplacian_parts(psi, op)
    return WgFunction(psi.space, -div, jump / psi.space.mesh.edge_h[:, None])


def _scatter_local(space: WgSpace, local: np.ndarray) -> sps.csr_matrix:
    l2g = space.local_to_global
    n = space.n_local
    rows = np.repeat(l2g, n, axis=1).ravel()
    cols = np.tile(l2g, (1, n)).ravel()
    return sps.csr_matrix((local.ravel(), (rows, cols)), shape=(space.n_dofs,) * 2)


def local_seminorm_1h(space: WgSpace) -> np.ndarray:
    """Element blocks of the |.|_{1,h}^2 Gram matrix, (nt, n_local, n_local)."""
    pts, w = space.tri_quadrature(2 * space.j + 2)
    g = space.interior_basis_grad(pts)
    local = np.zeros((space.mesh.n_triangles, space.n_local, space.n_local))
    local[:, : space.n_int, : space.n_int] = np.einsum("kq,kqac,kqbc->kab", w, g, g)
    D, wq, _ = space.trace_jump_basis(2 * space.j + 2)
    local += np.einsum("klq,klqa,klqb->kab", wq, D, D) / space.mesh.h_per_tri[:, None, None]
    return local


def seminorm_1h_matrix(space: WgSpace) -> sps.csr_matrix:
    """Gram matrix H with v^T H v = |v|_{1,h}^2."""
    return _scatter_local(space, local_seminorm_1h(space))


def jump_matrix(op: WeakGradOperator) -> sps.csr_matrix:
    """Linear map from V_h coefficients to the Legendre coefficients of [[grad_w v . n]].

    Rows are ordered edge-major, (n_edges * (j+1), n_dofs).
    """
    sp = op.space
    m = sp.mesh
    tr, w, s = op.rt.edge_normal_traces(2 * sp.j + 2)
    L = sp.edge_basis(s)
    P = np.einsum("kiq,qn,kiqd->kind", w, L, tr)
    J = np.einsum("kind,kda->kina", P, op.G)
    J /= sp.edge_mass_diag[m.tri_edges][..., None]
    nb, na = sp.n_edge, sp.n_local
    rows = (m.tri_edges[..., None] * nb + np.arange(nb))[..., None]
    rows = np.broadcast_to(rows, J.shape)
    cols = np.broadcast_to(sp.local_to_global[:, None, None, :], J.shape)
    return sps.csr_matrix((J.ravel(), (rows.ravel(), cols.ravel())),
                          shape=(m.n_edges * nb, sp.n_dofs))


def triple_bar_matrix(op: WeakGradOperator) -> sps.csr_matrix:
    """Gram matrix T with v^T T v = |||v|||^2 for v in V_{0,h} (all of V_h as a form)."""
    sp = op.space
    dv = np.einsum("kdp,kda->kpa", op.rt.divergence, op.G)
    local = np.einsum("kpa,kpr,krb->kab", dv, sp.interior_mass, dv)
    J = jump_matrix(op)
    weights = (sp.edge_mass_diag / sp.mesh.edge_h[:, None]).ravel()
    return (_scatter_local(sp, local) + J.T @ sps.diags(weights) @ J).tocsr()


@dataclass(frozen=True)
class ErrorReport:
    grad_norm: float
    l2_0: float
    edge: float
    l2_0h: float
    h1_semi: float
    triple_bar: float | None = None


def error_norms(e: WgFunction, op: WeakGradOperator, v0h_tol: float = 1e-12) -> ErrorReport:
    """All norms of an error function ``e``.

    The triple-bar norm is filled in only when e lies in V_{0,h} (boundary
    edge coefficients below ``v0h_tol`` times the largest coefficient).
    """
    scale = max(float(np.abs(e.vector()).max(initial=0.0)), 1e-300)
    tb = None
    if e.in_v0h(v0h_tol * scale):
        e = WgFunction(e.space, e.interior, e.edge.copy())
        e.edge[e.space.mesh.boundary_edge] = 0.0
        tb = triple_bar_norm(e, op)
    return ErrorReport(
        grad_norm=weak_grad_norm(e, op),
        l2_0=l2_interior(e),
        edge=edge_norm(e),
        l2_0h=norm_0h(e),
        h1_semi=seminorm_1h(e),
        triple_bar=tb,
    )


def error_report(v: WgFunction, exact, op: WeakGradOperator) -> ErrorReport:
    """Norms of e = Q_h(exact) - v; ``exact`` may also be a WgFunction reference."""
    ref = exact if isinstance(exact, WgFunction) else project_Qh(exact, v.space)
    return error_norms(ref - v, op)


class OrderFit(NamedTuple):
    lsq: float
    pairwise: list


def fit_order(hs, errs) -> OrderFit:
    """Least-squares slope of log(err) against log(h), plus consecutive-level orders."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if len(hs) != len(errs) or len(hs) < 2:
        raise ValueError("need at least two (h, error) pairs")
    if np.any(errs <= 0) or np.any(hs <= 0):
        raise ValueError("mesh sizes and errors must be positive")
    lh, le = np.log(hs), np.log(errs)
    slope = float(np.polyfit(lh, le, 1)[0])
    pairwise = list(np.diff(le) / np.diff(lh))
    return OrderFit(slope, [float(p) for p in pairwise])
