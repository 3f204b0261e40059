"""Quadrature on triangles, polygons (through their star-point split) and edges."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_TRIANGLE_EXACTNESS = 60
MAX_EDGE_POINTS = 20


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, f) -> float:
        pts = self.points
        vals = f(pts[..., 0], pts[..., 1]) if pts.shape[-1] == 2 else f(pts[..., 0])
        return float(np.sum(self.weights * vals))


@lru_cache(maxsize=None)
def _collapsed_rule(exactness: int):
    n = exactness // 2 + 1
    # x = r t, y = r (1 - t); Gauss-Jacobi(0, 1) in r absorbs the Jacobian r.
    a, wa = roots_jacobi(n, 0.0, 1.0)
    b, wb = np.polynomial.legendre.leggauss(n)
    r = (1.0 + a) / 2.0
    t = (1.0 + b) / 2.0
    x = np.outer(r, t)
    y = np.outer(r, 1.0 - t)
    w = np.outer(wa, wb) / 8.0
    return np.column_stack([x.ravel(), y.ravel()]), w.ravel()


def triangle_rule(exactness: int) -> QuadratureRule:
    """Positive-weight conical product rule on ``{x, y >= 0, x + y <= 1}``."""
    if exactness < 0 or exactness > MAX_TRIANGLE_EXACTNESS:
        raise ValueError(
            f"triangle exactness {exactness} outside 0..{MAX_TRIANGLE_EXACTNESS}"
        )
    pts, w = _collapsed_rule(int(exactness))
    return QuadratureRule(pts.copy(), w.copy(), int(exactness))


def edge_rule(npoints: int) -> QuadratureRule:
    """Gauss-Legendre rule on ``[0, 1]``, exact to degree ``2 * npoints - 1``."""
    if not 1 <= npoints <= MAX_EDGE_POINTS:
        raise ValueError(f"npoints must lie in 1..{MAX_EDGE_POINTS}, got {npoints}")
    x, w = np.polynomial.legendre.leggauss(npoints)
    return QuadratureRule(((x + 1.0) / 2.0)[:, None], w / 2.0, 2 * npoints - 1)


@lru_cache(maxsize=None)
def gauss_lobatto_nodes(npoints: int) -> np.ndarray:
    """Gauss-Lobatto nodes on ``[0, 1]`` (endpoints included), ascending."""
    if npoints < 2:
        raise ValueError("Gauss-Lobatto rules need at least two points")
    if npoints == 2:
        inner = np.empty(0)
    else:
        c = np.zeros(npoints)
        c[-1] = 1.0
        inner = np.sort(np.polynomial.legendre.Legendre(c).deriv().roots().real)
    x = np.concatenate([[-1.0], inner, [1.0]])
    return (x + 1.0) / 2.0


def cell_quadrature_points(vertices: np.ndarray, star_points: np.ndarray, exactness: int):
    """Batched quadrature over polygons with a common vertex count.

    Parameters
    ----------
    vertices : (nc, m, 2) array
    star_points : (nc, 2) array

    Returns
    -------
    points : (nc, m * nq, 2) array
    weights : (nc, m * nq) array
    """
    rule = triangle_rule(exactness)
    a = star_points[:, None, :]
    b = vertices
    c = np.roll(vertices, -1, axis=1)
    e1, e2 = b - a, c - a
    jac = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]  # (nc, m)
    xi, eta = rule.points[:, 0], rule.points[:, 1]
    pts = (
        a[:, :, None, :]
        + xi[None, None, :, None] * e1[:, :, None, :]
        + eta[None, None, :, None] * e2[:, :, None, :]
    )
    w = jac[:, :, None] * rule.weights[None, None, :]
    nc = vertices.shape[0]
    return pts.reshape(nc, -1, 2), w.reshape(nc, -1)


def cell_quadrature(cell, exactness: int) -> QuadratureRule:
    """Quadrature over one polygonal cell, exact to total degree ``exactness``."""
    pts, w = cell_quadrature_points(
        np.asarray(cell.vertices, float)[None], np.asarray(cell.star_point, float)[None],
        exactness,
    )
    return QuadratureRule(pts[0], w[0], int(exactness))
