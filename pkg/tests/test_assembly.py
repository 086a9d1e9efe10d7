import numpy as np
import pytest
import scipy.sparse as sps

from wgbh.assembly import assemble_stab_mass, assemble_stiffness, assemble_system, load_vector
from wgbh.mesh import Mesh, generate_unit_square, refine_uniform
from wgbh.problems import builtin_problem
from wgbh.space import WgSpace, project_Qh
from wgbh.weak_gradient import WeakGradOperator

from oracles import stab_inner

REF_MESH = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))


def setup(n=5, jitter=0.2, seed=3, j=0):
    sp = WgSpace(generate_unit_square(n, jitter, seed), j)
    return sp, WeakGradOperator(sp)


def max_asym(M):
    d = abs(M - M.T)
    return d.max() if d.nnz else 0.0


@pytest.mark.parametrize("j", [0, 1])
def test_stab_mass_examples(j):
    sp, _ = setup(j=j)
    S = assemble_stab_mass(sp)
    one = sp.constant(1.0).vector()
    assert one @ S @ one == pytest.approx(1.0, rel=1e-13)
    assert max_asym(S) == 0.0
    np.linalg.cholesky(S.toarray())  # SPD


def test_stab_mass_reference_triangle():
    sp = WgSpace(REF_MESH, 0)
    v = sp.zeros()
    v.interior[:] = 1.0
    x = v.vector()
    hk = np.sqrt(2.0)
    expected = 0.5 + hk * (2.0 + np.sqrt(2.0))
    assert x @ assemble_stab_mass(sp) @ x == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("j", [0, 1])
def test_stab_mass_matches_direct_evaluation(j, rng):
    sp = WgSpace(generate_unit_square(3, 0.25, 1), j)
    v, phi = sp.random(rng), sp.random(rng)
    S = assemble_stab_mass(sp)
    assert v.vector() @ S @ phi.vector() == pytest.approx(stab_inner(v, phi), rel=1e-12)
    assert v.vector() @ S @ phi.vector() == pytest.approx(phi.vector() @ S @ v.vector(), rel=1e-13)


@pytest.mark.parametrize("j", [0, 1])
def test_stiffness_examples(j):
    sp, op = setup(j=j)
    A = assemble_stiffness(op)
    assert max_asym(A) == 0.0
    assert np.abs(A @ sp.constant(2.0).vector()).max() <= 1e-12
    x = project_Qh(lambda x, y: x + 0 * y, sp).vector()
    assert x @ A @ x == pytest.approx(1.0, rel=1e-12)
    ev = np.linalg.eigvalsh(A.toarray())
    assert ev.min() >= -1e-10 * ev.max()
    # the kernel of A_full on a connected mesh is exactly the constants
    assert np.sum(ev < 1e-10 * ev.max()) == 1


def test_zero_data_gives_zero_rhs():
    sp, op = setup()
    sys = assemble_system(sp, op, lambda x, y: 0 * x)
    assert np.all(sys.rhs == 0)
    assert len(sys.lift_dofs) == sp.mesh.boundary_edge.sum()
    assert max_asym(sys.matrix) == 0.0
    assert sys.matrix.shape == (sys.n_w + sys.n_u,) * 2


def test_block_structure():
    sp, op = setup(j=1)
    p = builtin_problem("u1")
    sys = assemble_system(sp, op, p.rhs_f, p.g1, p.g2)
    M = sys.matrix.tocsr()
    n = sys.n_w
    assert abs(M[:n, :n] - sys.S).max() == 0
    assert abs(M[:n, n:] + sys.A[:, sys.free_u]).max() == 0
    assert M[n:, n:].nnz == 0 or abs(M[n:, n:]).max() == 0


def test_u2_rhs_pattern():
    # g1 = 0, g2 != 0: w rows touched only on boundary edges, u rows carry f
    sp, op = setup()
    p = builtin_problem("u2")
    sys = assemble_system(sp, op, p.rhs_f, p.g1, p.g2)
    top = sys.rhs[: sys.n_w]
    assert np.all(sys.lift_values == pytest.approx(0.0, abs=1e-15))
    nz = np.flatnonzero(np.abs(top) > 1e-14)
    assert nz.size and np.all(np.isin(nz, sp.boundary_dofs))
    assert np.abs(sys.rhs[sys.n_w:]).max() > 0


def test_u3_lift():
    sp, op = setup()
    p = builtin_problem("u3")
    sys = assemble_system(sp, op, p.rhs_f, p.g1, p.g2)
    assert np.abs(sys.lift_values).max() > 0.1
    assert not np.any(np.isin(sys.free_u, sys.lift_dofs))
    assert np.abs(sys.G2).max() <= 1e-12  # du3/dn = 0 on the boundary
    assert sys.n_u == sp.n_dofs - len(sp.boundary_dofs)


def test_load_vector_constant():
    sp, _ = setup(j=1)
    F = load_vector(sp, lambda x, y: 2.0 + 0 * x)
    # centroid-centred linear monomials integrate to zero, so only the constants contribute
    assert F.sum() == pytest.approx(2.0, rel=1e-13)
    np.testing.assert_allclose(F[: sp.n_interior_dofs : sp.n_int], 2 * sp.mesh.areas, rtol=1e-13)


def test_patch_consistency_shrinks():
    """Plugging Q_h of the exact (u1, w1) into the system leaves a residual that decays."""
    p = builtin_problem("u1")
    mesh = generate_unit_square(6, 0.2, 2)
    res = []
    for _ in range(3):
        sp = WgSpace(mesh, 0)
        op = WeakGradOperator(sp)
        sys = assemble_system(sp, op, p.rhs_f, p.g1, p.g2)
        x = np.concatenate([project_Qh(p.exact_w, sp).vector(), project_Qh(p.exact_u, sp).vector()[sys.free_u]])
        r = sys.matrix @ x - sys.rhs
        res.append(np.linalg.norm(r) / np.linalg.norm(sys.rhs))
        mesh = refine_uniform(mesh)
    assert res[0] > res[1] > res[2]


def test_reuse_matrices():
    sp, op = setup()
    S, A = assemble_stab_mass(sp), assemble_stiffness(op)
    p = builtin_problem("u2")
    a = assemble_system(sp, op, p.rhs_f, p.g1, p.g2)
    b = assemble_system(sp, op, p.rhs_f, p.g1, p.g2, S=S, A=A)
    assert (a.matrix != b.matrix).nnz == 0
    np.testing.assert_array_equal(a.rhs, b.rhs)
    assert isinstance(a.matrix, sps.csr_matrix)
