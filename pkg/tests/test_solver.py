import dataclasses

import numpy as np
import pytest
import scipy.sparse as sps

from wgbh.assembly import assemble_system
from wgbh.mesh import generate_unit_square
from wgbh.norms import error_report
from wgbh.problems import builtin_problem
from wgbh.solver import RESIDUAL_TOL, NotSPDError, SolverError, solve, solve_spd
from wgbh.space import WgSpace, mean_value
from wgbh.weak_gradient import WeakGradOperator


def system(problem="u1", n=6, j=0, scale=1.0):
    p = builtin_problem(problem)
    sp = WgSpace(generate_unit_square(n, 0.2, 7), j)
    op = WeakGradOperator(sp)
    f = (lambda x, y: scale * p.rhs_f(x, y))
    g1 = (lambda x, y: scale * p.g1(x, y))
    g2 = (lambda x, y, nx, ny: scale * p.g2(x, y, nx, ny))
    return assemble_system(sp, op, f, g1, g2)


@pytest.mark.parametrize("j", [0, 1])
def test_zero_solution(j):
    sys = system(j=j, scale=0.0)
    sol = solve(sys)
    assert np.abs(sol.u_h.vector()).max() <= 1e-10
    assert np.abs(sol.w_h.vector()).max() <= 1e-10


@pytest.mark.parametrize("j", [0, 1])
@pytest.mark.parametrize("problem", ["u1", "u2", "u3", "u4"])
def test_discrete_equations_hold(j, problem):
    sys = system(problem, j=j)
    sol = solve(sys)
    assert sol.residual_norm <= RESIDUAL_TOL
    u, w = sol.u_h.vector(), sol.w_h.vector()
    # first equation against every phi in V_h; second against every psi in V_{0,h}
    r1 = sys.S @ w - sys.A @ u + sys.G2
    r2 = (sys.A @ w - sys.F)[sys.free_u]
    scale = max(np.abs(sys.S @ w).max(), np.abs(sys.F).max(), 1e-300)
    assert np.abs(r1).max() <= 1e-9 * scale
    assert np.abs(r2).max() <= 1e-9 * scale
    np.testing.assert_allclose(u[sys.lift_dofs], sys.lift_values, atol=1e-15)


@pytest.mark.parametrize("j", [0, 1])
def test_mean_zero_w(j):
    for problem in ("u1",):
        sol = solve(system(problem, j=j))
        assert abs(mean_value(sol.w_h)) <= 1e-9


def test_linearity():
    a = solve(system("u2"))
    b = solve(system("u2", scale=10.0))
    for x, y in ((a.u_h, b.u_h), (a.w_h, b.w_h)):
        assert np.linalg.norm(y.vector() - 10 * x.vector()) <= 1e-10 * np.linalg.norm(y.vector())


def test_minres_matches_direct():
    sys = system("u3", j=1)
    d, m = solve(sys), solve(sys, method="minres")
    assert m.solve_stats["iterations"] > 0
    assert np.linalg.norm(d.u_h.vector() - m.u_h.vector()) <= 1e-8 * np.linalg.norm(d.u_h.vector())


def test_unknown_method():
    with pytest.raises(ValueError):
        solve(system(), method="cg")


def test_deterministic():
    a, b = solve(system("u4")), solve(system("u4"))
    np.testing.assert_array_equal(a.u_h.vector(), b.u_h.vector())


def test_singular_system_reported():
    sys = system()
    broken = dataclasses.replace(sys, matrix=sps.csr_matrix(sys.matrix.shape))
    with pytest.raises(SolverError):
        solve(broken)


def test_table_scale_check():
    """u1 on the n=10 jittered mesh: ||grad_w e_u|| within a factor 3 of 1.33e-3."""
    p = builtin_problem("u1")
    sp = WgSpace(generate_unit_square(10, 0.2, 7), 0)
    op = WeakGradOperator(sp)
    sol = solve(assemble_system(sp, op, p.rhs_f, p.g1, p.g2))
    rep = error_report(sol.u_h, p.exact_u, op)
    assert 1.33e-3 / 3 <= rep.grad_norm <= 1.33e-3 * 3
    assert 2.40e-4 / 3 <= rep.l2_0 <= 2.40e-4 * 3


def test_solve_spd_examples(rng):
    b = rng.standard_normal(5)
    np.testing.assert_allclose(solve_spd(sps.identity(5), b), b)
    np.testing.assert_allclose(solve_spd(sps.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0])), [1.0, 1.0])
    B = rng.standard_normal((100, 100))
    M = B @ B.T + 100 * np.eye(100)
    rhs = rng.standard_normal(100)
    x = solve_spd(sps.csr_matrix(M), rhs)
    assert np.linalg.norm(M @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)


@pytest.mark.parametrize("M", [
    [[1.0, 2.0], [2.0, 1.0]],      # indefinite
    [[1.0, 0.0], [0.0, -1.0]],     # negative diagonal
    [[1.0, 0.5], [0.0, 1.0]],      # not symmetric
    [[1.0, 1.0], [1.0, 1.0]],      # singular
])
def test_solve_spd_rejects(M):
    with pytest.raises(NotSPDError):
        solve_spd(sps.csr_matrix(M), np.ones(2))
