from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wgbh.quadrature import (
    MAX_SEGMENT_DEGREE,
    MAX_TRIANGLE_DEGREE,
    integrate_edge,
    integrate_tri,
    segment_rule,
    triangle_rule,
)

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def beta_integral(a, b):
    """int_{ref triangle} x^a y^b = a! b! / (a + b + 2)!"""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(1, MAX_TRIANGLE_DEGREE + 1))
def test_triangle_rule_exactness(degree):
    rule = triangle_rule(degree)
    assert rule.exact_degree >= degree
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-14)
    assert np.all(rule.weights > 0)
    x, y = rule.points.T
    assert np.all((x >= 0) & (y >= 0) & (x + y <= 1))
    for a in range(rule.exact_degree + 1):
        for b in range(rule.exact_degree + 1 - a):
            exact = beta_integral(a, b)
            assert abs(np.sum(rule.weights * x**a * y**b) - exact) <= 1e-13 * exact


@pytest.mark.parametrize("degree", range(1, MAX_SEGMENT_DEGREE + 1))
def test_segment_rule_exactness(degree):
    rule = segment_rule(degree)
    assert rule.exact_degree >= degree
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    for k in range(rule.exact_degree + 1):
        assert np.sum(rule.weights * rule.points**k) == pytest.approx(1 / (k + 1), rel=1e-13)


def test_documented_values():
    assert integrate_tri(lambda x, y: np.ones_like(x), REF, triangle_rule(1)) == pytest.approx(0.5)
    assert integrate_tri(lambda x, y: x, REF, triangle_rule(2)) == pytest.approx(1 / 6, rel=1e-14)
    val = integrate_tri(lambda x, y: x**4 * y**4, REF, triangle_rule(8))
    assert abs(val - beta_integral(4, 4)) <= 1e-13 * beta_integral(4, 4)
    seg = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert integrate_edge(lambda x, y: np.ones_like(x), seg, segment_rule(1)) == pytest.approx(1.0)
    two_point = segment_rule(3)
    assert len(two_point) == 2
    assert integrate_edge(lambda x, y: x**3, seg, two_point) == pytest.approx(0.25, rel=1e-15)
    assert abs(integrate_edge(lambda x, y: np.sin(2 * np.pi * x), seg, segment_rule(20))) <= 1e-12


@pytest.mark.parametrize("degree", [0, MAX_TRIANGLE_DEGREE + 1])
def test_triangle_rule_rejects(degree):
    with pytest.raises(ValueError):
        triangle_rule(degree)


@pytest.mark.parametrize("degree", [0, MAX_SEGMENT_DEGREE + 1])
def test_segment_rule_rejects(degree):
    with pytest.raises(ValueError):
        segment_rule(degree)


def test_rules_are_immutable():
    with pytest.raises(ValueError):
        triangle_rule(4).weights[0] = 1.0


coord = st.floats(-2.0, 2.0)


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.tuples(coord, coord), min_size=3, max_size=3),
       a=st.integers(0, 3), b=st.integers(0, 3))
def test_affine_mapping(pts, a, b):
    tri = np.array(pts)
    d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(det) < 1e-3:
        return
    ref = triangle_rule(10)
    assert integrate_tri(lambda x, y: np.ones_like(x), tri, ref) == pytest.approx(abs(det) / 2, rel=1e-13)
    # oracle: pull x^a y^b back to the reference triangle, expand, integrate with beta integrals
    X = np.zeros((2, 2)); X[0, 0], X[1, 0], X[0, 1] = tri[0, 0], d1[0], d2[0]
    Y = np.zeros((2, 2)); Y[0, 0], Y[1, 0], Y[0, 1] = tri[0, 1], d1[1], d2[1]
    poly = np.ones((1, 1))
    for _ in range(a):
        poly = _mul2d(poly, X)
    for _ in range(b):
        poly = _mul2d(poly, Y)
    exact = abs(det) * sum(c * beta_integral(i, k) for (i, k), c in np.ndenumerate(poly))
    got = integrate_tri(lambda x, y: x**a * y**b, tri, ref)
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)


def _mul2d(p, q):
    out = np.zeros((p.shape[0] + q.shape[0] - 1, p.shape[1] + q.shape[1] - 1))
    for (i, k), c in np.ndenumerate(p):
        out[i:i + q.shape[0], k:k + q.shape[1]] += c * q
    return out
