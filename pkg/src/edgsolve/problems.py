"""Manufactured-solution problem definitions for ``c sigma = grad u, -div sigma = f``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemDefinition:
    """Coefficient tensor, load, Dirichlet data and (optionally) the exact pair.

    ``c`` may return either a scalar field (isotropic tensor) or an array
    with trailing shape ``(2, 2)``; ``sigma`` returns a pair of arrays.
    """

    name: str
    c: Field
    f: Field
    g: Field
    u: Field | None = None
    sigma: Callable | None = None

    def c_tensor(self, x, y) -> np.ndarray:
        val = np.asarray(self.c(x, y), dtype=float)
        if val.shape == np.shape(x):
            return val[..., None, None] * np.eye(2)
        return np.broadcast_to(val, np.shape(x) + (2, 2))


def _c_weight(x, y):
    return 1.0 + x**2 * y**2


def _sinsin_u(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def _sinsin_sigma(x, y):
    a = _c_weight(x, y)
    ux = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
    uy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
    return ux / a, uy / a


def _sinsin_f(x, y):
    # -div(grad u / a) = -lap(u) / a + grad(a) . grad(u) / a^2
    a = _c_weight(x, y)
    u = _sinsin_u(x, y)
    ux = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
    uy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
    ax = 2.0 * x * y**2
    ay = 2.0 * x**2 * y
    return 2.0 * np.pi**2 * u / a + (ax * ux + ay * uy) / a**2


def sine_product_problem() -> ProblemDefinition:
    """``u = sin(pi x) sin(pi y)`` on the unit square with ``c = (1 + x^2 y^2) I``."""
    return ProblemDefinition(
        name="sinsin",
        c=_c_weight,
        f=_sinsin_f,
        g=lambda x, y: np.zeros(np.broadcast(x, y).shape),
        u=_sinsin_u,
        sigma=_sinsin_sigma,
    )


def polynomial_problem(coeffs, c=None, name="polynomial") -> ProblemDefinition:
    """Problem whose exact potential is ``sum coeffs[p, q] x^p y^q``.

    ``c`` is a constant symmetric positive definite 2x2 matrix (identity
    by default), so ``f = -trace(c^{-1} Hess u)`` is again a polynomial.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    cmat = np.eye(2) if c is None else np.asarray(c, dtype=float)
    cinv = np.linalg.inv(cmat)
    ux = P.polyder(coeffs, axis=0)
    uy = P.polyder(coeffs, axis=1)
    hxx = P.polyder(coeffs, 2, axis=0)
    hyy = P.polyder(coeffs, 2, axis=1)
    hxy = P.polyder(ux, axis=1)

    def u(x, y):
        return P.polyval2d(x, y, coeffs)

    def sigma(x, y):
        gx, gy = P.polyval2d(x, y, ux), P.polyval2d(x, y, uy)
        return cinv[0, 0] * gx + cinv[0, 1] * gy, cinv[1, 0] * gx + cinv[1, 1] * gy

    def f(x, y):
        xx, yy, xy = (P.polyval2d(x, y, h) for h in (hxx, hyy, hxy))
        return -(cinv[0, 0] * xx + (cinv[0, 1] + cinv[1, 0]) * xy + cinv[1, 1] * yy)

    def ctens(x, y):
        return np.broadcast_to(cmat, np.shape(x) + (2, 2))

    return ProblemDefinition(name=name, c=ctens, f=f, g=u, u=u, sigma=sigma)


def fd_divergence_residual(problem: ProblemDefinition, x, y, step: float = 1e-4):
    """``f + div(sigma)`` with the divergence taken by central differences."""
    sx_p, _ = problem.sigma(x + step, y)
    sx_m, _ = problem.sigma(x - step, y)
    _, sy_p = problem.sigma(x, y + step)
    _, sy_m = problem.sigma(x, y - step)
    div = (sx_p - sx_m) / (2 * step) + (sy_p - sy_m) / (2 * step)
    return problem.f(x, y) + div


def check_problem(problem: ProblemDefinition, npoints: int = 100, seed: int = 0,
                  tol: float = 1e-5) -> float:
    """Spot-check the closed-form load against a finite-difference divergence.

    Returns the largest relative residual; raises ``ValueError`` above ``tol``.
    """
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(0.05, 0.95, (2, npoints))
    res = np.abs(fd_divergence_residual(problem, x, y))
    scale = max(1.0, float(np.abs(problem.f(x, y)).max()))
    worst = float(res.max() / scale)
    if worst > tol:
        raise ValueError(f"{problem.name}: load inconsistent with exact flux ({worst:.2e})")
    return worst


PROBLEMS = {"sinsin": sine_product_problem}
