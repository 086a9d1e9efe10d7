"""Gauss rules on the reference triangle {x, y >= 0, x + y <= 1} and on [0, 1].

The triangle rules are collapsed (Duffy) products of Gauss-Jacobi and
Gauss-Legendre points, so every supported degree is exact by construction
and all weights are positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_TRIANGLE_DEGREE = 10
MAX_SEGMENT_DEGREE = 20


@dataclass(frozen=True, eq=False)
class QuadRule:
    points: np.ndarray  # (nq, 2) on the reference triangle, (nq,) on [0, 1]
    weights: np.ndarray
    exact_degree: int

    def __len__(self):
        return len(self.weights)


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    if not 1 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree}")
    n = degree // 2 + 1
    # x = (1 + a)/2 carries the (1 - x) Jacobian factor via the Jacobi weight
    a, wa = roots_jacobi(n, 1.0, 0.0)
    b, wb = roots_legendre(n)
    x = 0.5 * (1.0 + a)
    s = 0.5 * (1.0 + b)
    X = np.repeat(x, n)
    Y = (1.0 - X) * np.tile(s, n)
    # (1-x) = (1-a)/2: Jacobi weight (1-a) -> factor 1/2, two interval maps -> 1/4
    W = np.repeat(wa, n) * np.tile(wb, n) / 8.0
    pts = np.column_stack([X, Y])
    _freeze(pts, W)
    return QuadRule(pts, W, 2 * n - 1)


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadRule:
    if not 1 <= degree <= MAX_SEGMENT_DEGREE:
        raise ValueError(f"unsupported segment quadrature degree {degree}")
    n = degree // 2 + 1
    x, w = roots_legendre(n)
    pts = 0.5 * (1.0 + x)
    W = 0.5 * w
    _freeze(pts, W)
    return QuadRule(pts, W, 2 * n - 1)


def map_triangle(tri: np.ndarray, rule: QuadRule):
    """Physical points (..., nq, 2) and weights (..., nq) for triangle(s) ``tri`` (..., 3, 2)."""
    tri = np.asarray(tri, dtype=float)
    p0 = tri[..., 0, :]
    d1 = tri[..., 1, :] - p0
    d2 = tri[..., 2, :] - p0
    xi, eta = rule.points[:, 0], rule.points[:, 1]
    pts = (
        p0[..., None, :]
        + xi[:, None] * d1[..., None, :]
        + eta[:, None] * d2[..., None, :]
    )
    jac = np.abs(d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])
    return pts, jac[..., None] * rule.weights


def map_segment(seg: np.ndarray, rule: QuadRule):
    """Physical points (..., nq, 2) and weights (..., nq) for segment(s) ``seg`` (..., 2, 2)."""
    seg = np.asarray(seg, dtype=float)
    a = seg[..., 0, :]
    d = seg[..., 1, :] - a
    pts = a[..., None, :] + rule.points[:, None] * d[..., None, :]
    length = np.hypot(d[..., 0], d[..., 1])
    return pts, length[..., None] * rule.weights


def integrate_tri(f, tri, rule: QuadRule) -> float:
    pts, w = map_triangle(tri, rule)
    return float(np.sum(w * f(pts[..., 0], pts[..., 1])))


def integrate_edge(f, edge, rule: QuadRule) -> float:
    pts, w = map_segment(edge, rule)
    return float(np.sum(w * f(pts[..., 0], pts[..., 1])))
