"""Measurements behind the exact-identity and property checks.

Each ``measure_*`` function returns a number (usually an error); the
``quick_suite`` runs a small selection on coarse meshes for ``wgbh check``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import assemble_stab_mass, local_stab_mass, assemble_stiffness, assemble_system, boundary_flux_vector
from .mesh import Mesh, generate_unit_square, refine_uniform
from .norms import inf_sup_witness, local_seminorm_1h, norm_0h, seminorm_1h_matrix, triple_bar_matrix, triple_bar_norm
from .problems import builtin_problem
from .rt import interpolate_Pih, project_Ph
from .solver import solve
from .space import WgSpace, mean_value, project_Qh
from .weak_gradient import WeakGradOperator

# quadrature for the commutativity check: high enough that trig data is
# integrated to round-off on meshes with n >= 16
COMMUTE_TRI_DEGREE = 10
COMMUTE_EDGE_DEGREE = 12

# pencils up to this size are solved densely
DENSE_EIG_LIMIT = 1500


def _setup(mesh: Mesh, j: int):
    space = WgSpace(mesh, j)
    return space, WeakGradOperator(space)


def _relmax(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


def measure_weak_gradient_residual(mesh: Mesh, j: int, seed: int = 0, samples: int = 3) -> float:
    space, op = _setup(mesh, j)
    rng = np.random.default_rng(seed)
    return max(op.residual(space.random(rng)) for _ in range(samples))


def measure_commutativity(mesh: Mesh, j: int, v, grad_v) -> float:
    """max |coeffs(grad_w Q_h v) - coeffs(P_h grad v)|, relative to max(1, |P_h grad v|)."""
    space, op = _setup(mesh, j)
    lhs = op.apply(project_Qh(v, space, COMMUTE_TRI_DEGREE, COMMUTE_EDGE_DEGREE))
    rhs = project_Ph(grad_v, op.rt, COMMUTE_TRI_DEGREE)
    return _relmax(lhs.coeffs, rhs.coeffs)


def measure_commuting_diagram(mesh: Mesh, j: int, q, div_q) -> float:
    """max |Q_0(div q) - div(Pi_h q)| over all interior coefficients."""
    space, op = _setup(mesh, j)
    lhs = project_Qh(div_q, space).interior
    rhs = interpolate_Pih(q, op.rt).divergence()
    return _relmax(rhs, lhs)


def measure_divergence_identities(mesh: Mesh, j: int, q, div_q, seed: int = 0) -> tuple[float, float]:
    """Relative defects of (div q, v_0) = -(Pi_h q, grad_w v) [+ <q.n, v_b> on the boundary].

    The first value uses a random v in V_{0,h}, the second a random v in V_h
    with the boundary sum included.
    """
    space, op = _setup(mesh, j)
    rng = np.random.default_rng(seed)
    pq = interpolate_Pih(q, op.rt)
    pts, w = space.tri_quadrature(8)
    dq = div_q(pts[..., 0], pts[..., 1])
    phi = space.interior_basis(pts)
    qn = boundary_flux_vector(space, lambda x, y, nx, ny: _dot_n(q, x, y, nx, ny))

    def defect(v, boundary):
        lhs = float(np.einsum("kq,kq,kqa,ka->", w, dq, phi, v.interior))
        rhs = -pq.inner(op.apply(v)) + (float(qn @ v.vector()) if boundary else 0.0)
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)

    return defect(space.random(rng, homogeneous=True), False), defect(space.random(rng), True)


def _dot_n(q, x, y, nx, ny):
    val = q(x, y)
    return val[..., 0] * nx + val[..., 1] * ny


def measure_inf_sup_witness(mesh: Mesh, j: int, seed: int = 0) -> float:
    """|(grad_w v*, grad_w psi) - |||psi|||^2| / |||psi|||^2 for random psi in V_{0,h}."""
    space, op = _setup(mesh, j)
    psi = space.random(np.random.default_rng(seed), homogeneous=True)
    tb2 = triple_bar_norm(psi, op) ** 2
    lhs = op.apply(inf_sup_witness(psi, op)).inner(op.apply(psi))
    return abs(lhs - tb2) / tb2


def measure_stab_mass_consistency(mesh: Mesh, j: int, seed: int = 0) -> float:
    """|v^T S v - ||v||_{0,h}^2| / ||v||_{0,h}^2 for a random v."""
    space = WgSpace(mesh, j)
    v = space.random(np.random.default_rng(seed))
    x = v.vector()
    n2 = norm_0h(v) ** 2
    return abs(float(x @ (assemble_stab_mass(space) @ x)) - n2) / n2


def measure_zero_solution(mesh: Mesh, j: int) -> float:
    """max |coefficient| of (u_h, w_h) for f = 0 and homogeneous data."""
    space, op = _setup(mesh, j)
    zero = lambda x, y: np.zeros(np.broadcast(x, y).shape)  # noqa: E731
    sol = solve(assemble_system(space, op, zero))
    return float(max(np.abs(sol.u_h.vector()).max(), np.abs(sol.w_h.vector()).max()))


def measure_mean_zero(mesh: Mesh, j: int, problem: str = "u1", method: str = "direct") -> float:
    """|(w_h, 1)| for a problem with homogeneous boundary data."""
    p = builtin_problem(problem)
    space, op = _setup(mesh, j)
    sol = solve(assemble_system(space, op, p.rhs_f, p.g1, p.g2), method=method)
    return abs(mean_value(sol.w_h))


def _extreme_eig(a, b, largest: bool) -> float:
    """Extreme eigenvalue of the pencil (a, b) with b SPD."""
    a, b = sps.csc_matrix(a), sps.csc_matrix(b)
    if a.shape[0] <= DENSE_EIG_LIMIT:
        vals = sla.eigh(a.toarray(), b.toarray(), eigvals_only=True)
        return float(vals[-1] if largest else vals[0])
    if largest:
        val = spla.eigsh(a, k=1, M=b, which="LA", tol=1e-10, return_eigenvectors=False)
    else:
        val = spla.eigsh(a, k=1, M=b, sigma=0.0, which="LM", tol=1e-10, return_eigenvectors=False)
    return float(val[0])


def inequality_constants(mesh: Mesh, j: int) -> dict[str, float]:
    """Sharp discrete constants from generalized eigenvalue problems.

    norm_equiv_lo/hi: ||grad_w v|| / |v|_{1,h} on V_{0,h};
    inverse: h |v|_{1,h} / ||v||_{0,h} on V_h;
    poincare: ||v||_{0,h} / ||grad_w v|| on V_{0,h};
    triple_bar: ||grad_w v|| / |||v||| on V_{0,h}.
    """
    space, op = _setup(mesh, j)
    f = space.free_dofs

    def restrict(m):
        return m[f][:, f]

    A = assemble_stiffness(op)
    S = assemble_stab_mass(space)
    H = seminorm_1h_matrix(space)
    Aff, Hff = restrict(A), restrict(H)
    return {
        "norm_equiv_lo": np.sqrt(_extreme_eig(Aff, Hff, largest=False)),
        "norm_equiv_hi": np.sqrt(_extreme_eig(Aff, Hff, largest=True)),
        "inverse": mesh.h * np.sqrt(_extreme_eig(H, S, largest=True)),
        "poincare": 1.0 / np.sqrt(_extreme_eig(Aff, restrict(S), largest=False)),
        "triple_bar": 1.0 / np.sqrt(_extreme_eig(restrict(triple_bar_matrix(op)), Aff, largest=False)),
    }


def sampled_inverse_constant(mesh: Mesh, j: int, samples: int = 20, seed: int = 0) -> float:
    """max over random v in V_h of h |v|_{1,h} / ||v||_{0,h}."""
    space = WgSpace(mesh, j)
    rng = np.random.default_rng(seed)
    H = seminorm_1h_matrix(space)
    S = assemble_stab_mass(space)
    best = 0.0
    for _ in range(samples):
        x = rng.standard_normal(space.n_dofs)
        best = max(best, mesh.h * float(np.sqrt((x @ (H @ x)) / (x @ (S @ x)))))
    return best


def local_inverse_bound(mesh: Mesh, j: int) -> float:
    """max_K h sqrt(lambda_max(H_K, S_K)); bounds the global inverse constant from above."""
    space = WgSpace(mesh, j)
    H, S = local_seminorm_1h(space), local_stab_mass(space)
    S = 0.5 * (S + np.transpose(S, (0, 2, 1)))
    # S_K = L L^T, then lambda(H_K, S_K) = lambda(L^-1 H_K L^-T)
    L = np.linalg.cholesky(S)
    X = np.linalg.solve(L, H)
    C = np.linalg.solve(L, np.transpose(X, (0, 2, 1)))
    return mesh.h * float(np.sqrt(np.linalg.eigvalsh(0.5 * (C + np.transpose(C, (0, 2, 1))))[:, -1].max()))


def constant_tracking(mesh: Mesh, j: int, levels: int = 3) -> list[dict[str, float]]:
    out = []
    for level in range(levels):
        if level:
            mesh = refine_uniform(mesh)
        out.append(inequality_constants(mesh, j))
    return out


def relative_spread(values) -> float:
    """(max - min) / min of a positive sequence."""
    values = np.asarray(values, dtype=float)
    return float((values.max() - values.min()) / values.min())


# -- quick suite ---------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tol {self.tol:.0e})"


def _poly_q(x, y):
    return np.stack(np.broadcast_arrays(x * x + y, x * y - 2 * y), axis=-1)


def _poly_div_q(x, y):
    return 3 * x - 2 + 0 * y


def _xy(x, y):
    return x * y


def _grad_xy(x, y):
    return np.stack(np.broadcast_arrays(y, x), axis=-1)


def quick_suite(n: int = 6, jitter: float = 0.2, seed: int = 3) -> list[CheckResult]:
    """Coarse-mesh identity checks for both supported orders; takes a few seconds."""
    mesh = generate_unit_square(n, jitter, seed)
    results = []
    for j in (0, 1):
        hom, full = measure_divergence_identities(mesh, j, _poly_q, _poly_div_q)
        checks = [
            ("weak gradient defining equation", measure_weak_gradient_residual(mesh, j), 1e-12),
            ("commutativity grad_w Q_h = P_h grad", measure_commutativity(mesh, j, _xy, _grad_xy), 1e-11),
            ("Q_0 div q = div Pi_h q", measure_commuting_diagram(mesh, j, _poly_q, _poly_div_q), 1e-12),
            ("divergence identity on V_0h", hom, 1e-11),
            ("divergence identity on V_h", full, 1e-11),
            ("inf-sup witness", measure_inf_sup_witness(mesh, j), 1e-10),
            ("<<v,v>> = ||v||_0h^2", measure_stab_mass_consistency(mesh, j), 1e-12),
            ("zero data gives zero solution", measure_zero_solution(mesh, j), 1e-10),
            ("(w_h, 1) = 0", measure_mean_zero(mesh, j), 1e-9),
        ]
        results += [CheckResult(f"j={j} {name}", value, tol) for name, value, tol in checks]
    return results


def run_quick_suite(stream=None, **kwargs) -> bool:
    t0 = time.perf_counter()
    results = quick_suite(**kwargs)
    for r in results:
        print(r.line(), file=stream)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed "
          f"in {time.perf_counter() - t0:.1f}s", file=stream)
    return ok
