import numpy as np
import pytest

from wgbh.mesh import generate_unit_square
from wgbh.problems import PROBLEMS, ProblemSpec, builtin_problem, check_problem, consistency_errors

PI = np.pi
rng = np.random.default_rng(3)
X, Y = rng.uniform(0.05, 0.95, (2, 50))


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_finite_difference_consistency(name):
    errs = consistency_errors(builtin_problem(name))
    assert max(errs.values()) <= 1e-7
    check_problem(builtin_problem(name))


def test_unknown_problem():
    with pytest.raises(ValueError, match="unknown problem"):
        builtin_problem("u5")


def test_u2_fields():
    p = builtin_problem("u2")
    u = np.sin(2 * PI * X) * np.sin(2 * PI * Y)
    np.testing.assert_allclose(p.exact_w(X, Y), 8 * PI**2 * u, rtol=1e-14)
    np.testing.assert_allclose(p.rhs_f(X, Y), 64 * PI**4 * u, rtol=1e-14)


def test_u3_is_phase_shifted():
    p = builtin_problem("u3")
    np.testing.assert_allclose(p.exact_u(X, Y), np.cos(2 * PI * X) * np.cos(2 * PI * Y), atol=1e-15)


def test_u4_fields():
    p = builtin_problem("u4")
    r, t = np.hypot(X, Y), np.arctan2(Y, X)
    np.testing.assert_allclose(p.exact_u(X, Y), r**1.5 * (np.sin(1.5 * t) - 3 * np.sin(0.5 * t)), rtol=1e-13)
    np.testing.assert_allclose(p.exact_w(X, Y), 6 * r**-0.5 * np.sin(0.5 * t), rtol=1e-13)
    assert np.all(p.rhs_f(X, Y) == 0)
    assert not p.smooth


def boundary_points(n=40):
    s = np.linspace(0.02, 0.98, n)
    zeros, ones = np.zeros(n), np.ones(n)
    pts = [(s, zeros, 0, -1), (ones, s, 1, 0), (s, ones, 0, 1), (zeros, s, -1, 0)]
    return [(x, y, nx * ones, ny * ones) for x, y, nx, ny in pts]


@pytest.mark.parametrize("name, g1_zero, g2_zero", [
    ("u1", True, True), ("u2", True, False), ("u3", False, True), ("u4", False, False),
])
def test_boundary_data(name, g1_zero, g2_zero):
    p = builtin_problem(name)
    g1 = np.concatenate([p.g1(x, y) for x, y, _, _ in boundary_points()])
    g2 = np.concatenate([p.g2(x, y, nx, ny) for x, y, nx, ny in boundary_points()])
    assert (np.abs(g1).max() <= 1e-14) == g1_zero
    assert (np.abs(g2).max() <= 1e-12) == g2_zero


def test_bad_problem_fails_preflight():
    p = builtin_problem("u2")
    broken = ProblemSpec("bad", p.exact_u, p.grad_u, lambda x, y: 2 * p.exact_w(x, y), p.grad_w, p.rhs_f)
    with pytest.raises(ValueError, match="self-check"):
        check_problem(broken)


def test_fields_accept_mesh_arrays():
    m = generate_unit_square(3)
    pts = m.corners  # (nt, 3, 2)
    for name in PROBLEMS:
        p = builtin_problem(name)
        # away from the u4 corner every field is finite and shaped like the input
        x, y = pts[..., 0] * 0.9 + 0.05, pts[..., 1] * 0.9 + 0.05
        assert p.exact_u(x, y).shape == x.shape
        assert p.grad_w(x, y).shape == x.shape + (2,)
        assert np.all(np.isfinite(p.rhs_f(x, y)))
