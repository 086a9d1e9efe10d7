"""Independent reference computations used by several test modules.

These deliberately avoid the library's precomputed tables: divergences come
from central differences (exact for the quadratic RT fields), outward normals
from raw vertex geometry, and integrals from fresh quadrature.
"""

import numpy as np

from wgbh.quadrature import map_segment, map_triangle, segment_rule, triangle_rule


def outward_normal(a, b, c):
    """Outward unit normal of edge (a, b) of a triangle whose third vertex is c."""
    t = b - a
    n = np.array([t[1], -t[0]]) / np.hypot(*t)
    return n if np.dot(n, c - a) < 0 else -n


def rt_values(rt, k, pts):
    """Basis values (nq, dim, 2) of triangle k at physical points (nq, 2)."""
    full = np.zeros((rt.mesh.n_triangles, len(pts), 2))
    full[k] = pts
    return rt.eval_basis(full)[k]


def rt_divergence(rt, k, pts, eps=1e-3):
    ex, ey = np.array([eps, 0.0]), np.array([0.0, eps])
    dx = (rt_values(rt, k, pts + ex) - rt_values(rt, k, pts - ex))[..., 0] / (2 * eps)
    dy = (rt_values(rt, k, pts + ey) - rt_values(rt, k, pts - ey))[..., 1] / (2 * eps)
    return dx + dy


def wg_interior(v, k, pts):
    sp = v.space
    full = np.zeros((sp.mesh.n_triangles, len(pts), 2))
    full[k] = pts
    return sp.interior_basis(full)[k] @ v.interior[k]


def wg_edge(v, e, s):
    return np.array([v.eval_edge(e, si) for si in s])


def weak_gradient_defect(op, v, k):
    """max_i |(grad_w v, q_i)_K + (v_0, div q_i)_K - <v_b, q_i . n>_dK| on triangle k."""
    rt, mesh = op.rt, op.space.mesh
    corners = mesh.corners[k]
    pts, w = map_triangle(corners, triangle_rule(6))
    q = rt_values(rt, k, pts)
    gw = op.apply(v).evaluate(np.broadcast_to(pts, (mesh.n_triangles,) + pts.shape))[k]
    lhs = np.einsum("q,qc,qic->i", w, gw, q)
    vol = np.einsum("q,q,qi->i", w, wg_interior(v, k, pts), rt_divergence(rt, k, pts))
    bnd = np.zeros(rt.dim)
    rule = segment_rule(6)
    for l in range(3):
        e = mesh.tri_edges[k, l]
        a, b = mesh.vertices[mesh.edges[e]]
        c = corners[l]
        n = outward_normal(a, b, c)
        ep, ew = map_segment(np.array([a, b]), rule)
        qe = rt_values(rt, k, ep)
        bnd += np.einsum("q,q,qic,c->i", ew, wg_edge(v, e, rule.points), qe, n)
    scale = max(1.0, np.abs(lhs).max())
    return float(np.abs(lhs + vol - bnd).max() / scale)


def l2_error_field(field, q, degree=10):
    """|| field - q || for an RtField and an analytic vector field."""
    mesh = field.space.mesh
    pts, w = map_triangle(mesh.corners, triangle_rule(degree))
    diff = field.evaluate(pts) - q(pts[..., 0], pts[..., 1])
    return float(np.sqrt(np.einsum("kq,kqc->", w, diff**2)))


def stab_inner(v, phi, degree=6):
    """<<v, phi>> by direct evaluation on every triangle and edge."""
    mesh = v.space.mesh
    rule_t, rule_e = triangle_rule(degree), segment_rule(degree)
    total = 0.0
    for k in range(mesh.n_triangles):
        pts, w = map_triangle(mesh.corners[k], rule_t)
        total += np.sum(w * wg_interior(v, k, pts) * wg_interior(phi, k, pts))
        hk = mesh.h_per_tri[k]
        for l in range(3):
            e = mesh.tri_edges[k, l]
            ep, ew = map_segment(mesh.vertices[mesh.edges[e]], rule_e)
            jv = wg_interior(v, k, ep) - wg_edge(v, e, rule_e.points)
            jp = wg_interior(phi, k, ep) - wg_edge(phi, e, rule_e.points)
            total += hk * np.sum(ew * jv * jp)
    return total
