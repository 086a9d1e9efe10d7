"""Discrete weak gradient: per-element maps from local WG DOFs to RT coefficients.

On each triangle K the weak gradient of v = {v_0, v_b} is the RT_j(K) field
with

    (grad_w v, q)_K = -(v_0, div q)_K + <v_b, q . n>_{dK}   for all q in RT_j(K),

so with M_K the RT mass matrix and B_K the right-hand side functional,
G_K = M_K^{-1} B_K.
"""

from __future__ import annotations

import numpy as np

from .rt import RtField, RtSpace
from .space import WgFunction, WgSpace


class WeakGradOperator:
    def __init__(self, space: WgSpace, rt: RtSpace | None = None):
        if rt is None:
            rt = RtSpace(space.mesh, space.j)
        if rt.mesh is not space.mesh or rt.j != space.j:
            raise ValueError("WG and RT spaces must share mesh and order")
        self.space = space
        self.rt = rt
        self.rhs = self._rhs_matrices()
        self.G = rt.solve_mass(self.rhs)  # (nt, dim, n_local)

    def _rhs_matrices(self) -> np.ndarray:
        sp, rt = self.space, self.rt
        nt = sp.mesh.n_triangles
        B = np.empty((nt, rt.dim, sp.n_local))
        # interior basis and divergences share the same scaled monomials
        B[:, :, : sp.n_int] = -np.einsum("kip,kap->kia", rt.divergence, sp.interior_mass)
        tr, w, s = rt.edge_normal_traces(2 * sp.j + 2)
        L = sp.edge_basis(s)
        edge = np.einsum("klq,qn,klqi->kiln", w, L, tr)
        B[:, :, sp.n_int:] = edge.reshape(nt, rt.dim, -1)
        return B

    def apply(self, v: WgFunction) -> RtField:
        if v.space is not self.space:
            raise ValueError("function does not live on this operator's space")
        return RtField(self.rt, np.einsum("kda,ka->kd", self.G, v.local()))

    __call__ = apply

    def residual(self, v: WgFunction) -> float:
        """Max defining-equation residual |M_K G_K v_K - B_K v_K| over all elements."""
        loc = v.local()
        lhs = np.einsum("kmn,kn->km", self.rt.mass, self.apply(v).coeffs)
        rhs = np.einsum("kia,ka->ki", self.rhs, loc)
        return float(np.abs(lhs - rhs).max())


def build_operator(space: WgSpace) -> WeakGradOperator:
    return WeakGradOperator(space)
