"""Manufactured biharmonic test problems on the unit square.

Each problem carries u, grad u, w = -Laplace(u), grad w and f = Laplace^2(u),
all derived by hand, plus the clamped boundary data g1 = u and g2 = du/dn.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    exact_u: Callable
    grad_u: Callable  # (x, y) -> (..., 2)
    exact_w: Callable
    grad_w: Callable
    rhs_f: Callable
    smooth: bool = True  # w regular enough for Pi_h grad w (Neumann projection)

    def g1(self, x, y):
        return self.exact_u(x, y)

    def g2(self, x, y, nx, ny):
        g = self.grad_u(x, y)
        return g[..., 0] * nx + g[..., 1] * ny


def _stack(a, b):
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


# u1 = p(x) p(y), p(t) = t^2 (1 - t)^2
def _p(t):
    return t**2 * (1 - t) ** 2


def _p1(t):
    return 2 * t - 6 * t**2 + 4 * t**3


def _p2(t):
    return 2 - 12 * t + 12 * t**2


def _p3(t):
    return -12 + 24 * t


def _u1():
    return ProblemSpec(
        name="u1",
        exact_u=lambda x, y: _p(x) * _p(y),
        grad_u=lambda x, y: _stack(_p1(x) * _p(y), _p(x) * _p1(y)),
        exact_w=lambda x, y: -(_p2(x) * _p(y) + _p(x) * _p2(y)),
        grad_w=lambda x, y: -_stack(_p3(x) * _p(y) + _p1(x) * _p2(y),
                                    _p2(x) * _p1(y) + _p(x) * _p3(y)),
        rhs_f=lambda x, y: 24 * _p(y) + 2 * _p2(x) * _p2(y) + 24 * _p(x),
    )


def _trig(name: str, phase: float):
    # u = sin(2 pi x + phase) sin(2 pi y + phase); Laplace(u) = -8 pi^2 u
    k = 2 * PI

    def u(x, y):
        return np.sin(k * x + phase) * np.sin(k * y + phase)

    def gu(x, y):
        return k * _stack(np.cos(k * x + phase) * np.sin(k * y + phase),
                          np.sin(k * x + phase) * np.cos(k * y + phase))

    return ProblemSpec(
        name=name,
        exact_u=u,
        grad_u=gu,
        exact_w=lambda x, y: 2 * k**2 * u(x, y),
        grad_w=lambda x, y: 2 * k**2 * gu(x, y),
        rhs_f=lambda x, y: 4 * k**4 * u(x, y),
    )


def _polar(x, y):
    return np.hypot(x, y), np.arctan2(y, x)


def _rsin(lam, mu):
    """r^lam sin(mu theta) and its gradient."""

    def val(x, y):
        r, t = _polar(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            return r**lam * np.sin(mu * t)

    def grad(x, y):
        r, t = _polar(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            rl = r ** (lam - 1)
            s, c = np.sin(mu * t), np.cos(mu * t)
            return _stack(rl * (lam * s * np.cos(t) - mu * c * np.sin(t)),
                          rl * (lam * s * np.sin(t) + mu * c * np.cos(t)))

    return val, grad


def _u4():
    # Laplace(r^l sin(m t)) = (l^2 - m^2) r^(l-2) sin(m t)
    a, ga = _rsin(1.5, 1.5)
    b, gb = _rsin(1.5, 0.5)
    c, gc = _rsin(-0.5, 0.5)
    return ProblemSpec(
        name="u4",
        exact_u=lambda x, y: a(x, y) - 3 * b(x, y),
        grad_u=lambda x, y: ga(x, y) - 3 * gb(x, y),
        exact_w=lambda x, y: 6 * c(x, y),
        grad_w=lambda x, y: 6 * gc(x, y),
        rhs_f=lambda x, y: np.zeros(np.broadcast(x, y).shape),
        smooth=False,
    )


PROBLEMS = {
    "u1": _u1,
    "u2": lambda: _trig("u2", 0.0),
    "u3": lambda: _trig("u3", PI / 2),
    "u4": _u4,
}


def builtin_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


# -- self-consistency --------------------------------------------------------

def _fd_laplacian(f, x, y, h):
    return (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / h**2


def _fd_gradient(f, x, y, h):
    return _stack((f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h))


def _richardson(op, f, x, y, h):
    return (4 * op(f, x, y, h / 2) - op(f, x, y, h)) / 3


def consistency_errors(problem: ProblemSpec, n_samples: int = 64, seed: int = 0,
                       h: float = 2e-3) -> dict:
    """Relative mismatch between the hand-derived fields and finite differences.

    Samples stay at distance >= 0.3 from the origin (singular corner of u4)
    and >= 0.05 from the other sides.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.05, 0.95, size=(4 * n_samples, 2))
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) >= 0.3][:n_samples]
    x, y = pts[:, 0], pts[:, 1]

    def rel(approx, exact):
        return float(np.max(np.abs(approx - exact)) / max(1.0, np.max(np.abs(exact))))

    return {
        "w=-lap(u)": rel(-_richardson(_fd_laplacian, problem.exact_u, x, y, h), problem.exact_w(x, y)),
        "f=-lap(w)": rel(-_richardson(_fd_laplacian, problem.exact_w, x, y, h), problem.rhs_f(x, y)),
        "grad u": rel(_richardson(_fd_gradient, problem.exact_u, x, y, h), problem.grad_u(x, y)),
        "grad w": rel(_richardson(_fd_gradient, problem.exact_w, x, y, h), problem.grad_w(x, y)),
    }


def check_problem(problem: ProblemSpec, tol: float = 1e-5) -> None:
    errs = consistency_errors(problem)
    bad = {k: v for k, v in errs.items() if not v <= tol}
    if bad:
        raise ValueError(f"problem {problem.name} fails finite-difference self-check: {bad}")
