"""Sparse solves for the WG saddle-point system and for SPD projection systems."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import LinearSystem
from .space import WgFunction

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
MINRES_SWEEPS = 8


class SolverError(RuntimeError):
    pass


class NotSPDError(SolverError):
    pass


@dataclass(eq=False)
class Solution:
    u_h: WgFunction
    w_h: WgFunction
    residual_norm: float
    solve_stats: dict = field(default_factory=dict)


def _relative_residual(matrix, x, rhs) -> float:
    r = np.linalg.norm(matrix @ x - rhs)
    scale = np.linalg.norm(rhs)
    return float(r / scale) if scale > 0 else float(r)


def _factor(matrix: sps.spmatrix, **options):
    try:
        return spla.splu(sps.csc_matrix(matrix), **options)
    except RuntimeError as exc:
        # SuperLU reports "Factor is exactly singular" with the failing column
        raise SolverError(f"sparse factorisation failed: {exc}") from exc


def _block_preconditioner(sys: LinearSystem):
    S = sys.S
    lu_S = _factor(S)
    A_f = sys.A[:, sys.free_u]
    lumped = sps.diags(1.0 / S.diagonal())
    schur = (A_f.T @ lumped @ A_f).tocsc()
    lu_C = _factor(schur)
    n = sys.n_w

    def apply(r):
        return np.concatenate([lu_S.solve(r[:n]), lu_C.solve(r[n:])])

    size = n + sys.n_u
    return spla.LinearOperator((size, size), matvec=apply)


def solve(sys: LinearSystem, method: str = "direct", rtol: float = 1e-12,
          maxiter: int = 5000) -> Solution:
    """Solve the mixed system and rebuild full u_h (with boundary lift) and w_h."""
    t0 = time.perf_counter()
    stats: dict = {"method": method, "n_unknowns": sys.matrix.shape[0], "nnz": sys.matrix.nnz}
    if np.linalg.norm(sys.rhs) == 0.0:
        x = np.zeros(sys.matrix.shape[0])
    elif method == "direct":
        lu = _factor(sys.matrix, permc_spec="COLAMD")
        x = lu.solve(sys.rhs)
        stats["nnz_factor"] = int(lu.L.nnz + lu.U.nnz)
    elif method == "minres":
        # MINRES stops on the preconditioned residual, so correct with a few
        # refinement sweeps until the true residual meets RESIDUAL_TOL
        M = _block_preconditioner(sys)
        iters = [0]

        def count(_):
            iters[0] += 1

        x = np.zeros(sys.matrix.shape[0])
        for sweep in range(MINRES_SWEEPS):
            r = sys.rhs - sys.matrix @ x
            if np.linalg.norm(r) <= 0.1 * RESIDUAL_TOL * np.linalg.norm(sys.rhs):
                break
            dx, info = spla.minres(sys.matrix, r, M=M, rtol=rtol, maxiter=maxiter, callback=count)
            if info != 0:
                raise SolverError(f"MINRES did not converge (info={info})")
            x = x + dx
        stats["iterations"] = iters[0]
        stats["sweeps"] = sweep + 1
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite values")
    res = _relative_residual(sys.matrix, x, sys.rhs)
    stats["seconds"] = time.perf_counter() - t0
    log.debug("solve: %s", stats)
    if res > RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.2e} exceeds {RESIDUAL_TOL:.0e}")

    space = sys.space
    w = space.from_vector(x[: sys.n_w])
    u_vec = np.zeros(space.n_dofs)
    u_vec[sys.free_u] = x[sys.n_w:]
    u_vec[sys.lift_dofs] = sys.lift_values
    return Solution(space.from_vector(u_vec), w, res, stats)


def solve_spd(matrix: sps.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve an SPD system; raises NotSPDError if the matrix is not SPD.

    Uses a symmetric-mode LU with diagonal pivoting, so the pivots are the
    LDL^T diagonal and positivity certifies definiteness.
    """
    matrix = sps.csc_matrix(matrix)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError("matrix must be square")
    asym = abs(matrix - matrix.T)
    if asym.nnz and asym.max() > 1e-12 * abs(matrix).max():
        raise NotSPDError("matrix is not symmetric")
    try:
        lu = spla.splu(matrix, permc_spec="COLAMD", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise NotSPDError(f"factorisation failed: {exc}") from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise NotSPDError("factorisation required off-diagonal pivoting")
    pivots = lu.U.diagonal()
    if np.any(pivots <= 0):
        bad = int(lu.perm_c[np.argmax(pivots <= 0)])
        raise NotSPDError(f"non-positive pivot at row {bad}")
    x = lu.solve(np.asarray(rhs, dtype=float))
    res = _relative_residual(matrix, x, rhs)
    if res > RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.2e} exceeds {RESIDUAL_TOL:.0e}")
    return x
