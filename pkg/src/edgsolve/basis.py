"""Orthonormal cell bases and nodal edge bases.

Cell bases start from total-degree monomials in the local coordinates
``(x - M_T) / h_T`` and are orthonormalized against each physical cell's
mass matrix; all arrays carry a leading cell axis so a whole group of
cells is processed at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import cell_quadrature_points, gauss_lobatto_nodes

GRAM_RCOND = 1e-13


class BasisConditioningError(np.linalg.LinAlgError):
    def __init__(self, cell_id, message="Gram matrix numerically singular"):
        self.cell_id = cell_id
        super().__init__(f"cell {cell_id}: {message}")


def polynomial_dim(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def monomial_exponents(degree: int) -> np.ndarray:
    """Exponent pairs ``(p, q)`` ordered by total degree, then by ``q``."""
    return np.array([(d - q, q) for d in range(degree + 1) for q in range(d + 1)])


def monomials(s: np.ndarray, degree: int, grad: bool = False):
    """Evaluate ``s_x^p s_y^q`` for all total degrees ``<= degree``.

    ``s`` has shape ``(..., 2)``; values have shape ``(..., nm)`` and
    gradients (w.r.t. ``s``) shape ``(..., nm, 2)``.
    """
    exps = monomial_exponents(degree)
    sx, sy = s[..., 0], s[..., 1]
    px = np.stack([sx**i for i in range(degree + 1)], axis=-1)
    py = np.stack([sy**i for i in range(degree + 1)], axis=-1)
    vals = px[..., exps[:, 0]] * py[..., exps[:, 1]]
    if not grad:
        return vals
    dpx = np.zeros_like(px)
    dpy = np.zeros_like(py)
    for i in range(1, degree + 1):
        dpx[..., i] = i * px[..., i - 1]
        dpy[..., i] = i * py[..., i - 1]
    gx = dpx[..., exps[:, 0]] * py[..., exps[:, 1]]
    gy = px[..., exps[:, 0]] * dpy[..., exps[:, 1]]
    return vals, np.stack([gx, gy], axis=-1)


@dataclass(frozen=True)
class CellBasis:
    """Orthonormal basis of ``P_degree`` on one or more cells.

    ``center`` is ``(..., 2)``, ``scale`` is ``(...)`` and ``coeffs`` maps
    monomials to basis functions with shape ``(..., nm, dim)``.
    """

    degree: int
    center: np.ndarray
    scale: np.ndarray
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return polynomial_dim(self.degree)

    def _local(self, points):
        return (points - self.center[..., None, :]) / self.scale[..., None, None]

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Values at ``points`` of shape ``(..., npts, 2)`` -> ``(..., npts, dim)``."""
        m = monomials(self._local(points), self.degree)
        return np.einsum("...pm,...md->...pd", m, self.coeffs)

    def eval_grad(self, points: np.ndarray):
        """Values and gradients; gradients have shape ``(..., npts, dim, 2)``."""
        m, dm = monomials(self._local(points), self.degree, grad=True)
        vals = np.einsum("...pm,...md->...pd", m, self.coeffs)
        grads = np.einsum("...pmc,...md->...pdc", dm, self.coeffs)
        return vals, grads / self.scale[..., None, None, None]


def subset_basis(b: CellBasis, ids) -> CellBasis:
    """Restrict a batched basis to the cells ``ids``."""
    return CellBasis(b.degree, b.center[ids], b.scale[ids], b.coeffs[ids])


def orthonormal_cell_basis(
    vertices: np.ndarray,
    star_points: np.ndarray,
    diameters: np.ndarray,
    degree: int,
    exactness: int | None = None,
    cell_ids=None,
) -> CellBasis:
    """Batched construction over cells sharing a vertex count.

    Uses two passes of Cholesky-based Gram-Schmidt so the computed mass
    matrix matches the identity to near machine precision.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if exactness is None:
        exactness = 2 * degree
    pts, w = cell_quadrature_points(vertices, star_points, exactness)
    s = (pts - star_points[:, None, :]) / diameters[:, None, None]
    m = monomials(s, degree)
    nc, nm = len(vertices), m.shape[-1]
    coeffs = np.broadcast_to(np.eye(nm), (nc, nm, nm)).copy()
    ids = np.arange(nc) if cell_ids is None else np.asarray(cell_ids)
    for sweep in range(2):
        phi = np.einsum("cpm,cmd->cpd", m, coeffs)
        gram = np.einsum("cp,cpi,cpj->cij", w, phi, phi)
        if sweep == 0:
            ev = np.linalg.eigvalsh(gram)
            bad = ev[:, 0] <= GRAM_RCOND * ev[:, -1]
            if np.any(bad):
                raise BasisConditioningError(int(ids[np.flatnonzero(bad)[0]]))
        try:
            chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            raise BasisConditioningError(int(ids[0]), "Cholesky of Gram matrix failed")
        # phi_new = phi L^{-T}
        linv = np.linalg.inv(chol)
        coeffs = np.einsum("cmd,ced->cme", coeffs, linv)
    return CellBasis(degree, star_points.copy(), diameters.copy(), coeffs)


def build_cell_basis(cell, degree: int) -> CellBasis:
    """Orthonormal ``P_degree`` basis on a single :class:`~edgsolve.mesh.Cell`."""
    b = orthonormal_cell_basis(
        np.asarray(cell.vertices, float)[None],
        np.asarray(cell.star_point, float)[None],
        np.array([cell.diameter]),
        degree,
        cell_ids=[cell.id],
    )
    return CellBasis(degree, b.center[0], b.scale[0], b.coeffs[0])


@lru_cache(maxsize=None)
def _lagrange_weights(degree: int) -> np.ndarray:
    nodes = gauss_lobatto_nodes(degree + 1)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


@dataclass(frozen=True)
class EdgeBasis:
    """Lagrange basis of ``P_degree`` on an edge at Gauss-Lobatto nodes.

    Parameter ``t`` runs over ``[0, 1]`` from the first to the second
    endpoint.
    """

    degree: int
    nodes: np.ndarray
    length: float = 1.0

    def eval(self, t) -> np.ndarray:
        """Values ``(..., degree + 1)`` at parameters ``t``."""
        t = np.asarray(t, dtype=float)[..., None]
        x = self.nodes
        diff = t - x
        out = np.empty(diff.shape)
        for i in range(len(x)):
            others = np.delete(diff, i, axis=-1)
            out[..., i] = others.prod(axis=-1)
        return out * _lagrange_weights(self.degree)

    def mass(self) -> np.ndarray:
        """Mass matrix on the physical edge."""
        from .quadrature import edge_rule

        r = edge_rule(self.degree + 1)
        phi = self.eval(r.points[:, 0])
        return self.length * (phi.T * r.weights) @ phi


def reference_edge_basis(degree: int) -> EdgeBasis:
    if degree < 1 or degree > 20:
        raise ValueError(f"edge degree must lie in 1..20, got {degree}")
    return EdgeBasis(degree, gauss_lobatto_nodes(degree + 1))


def build_edge_basis(edge, degree: int) -> EdgeBasis:
    """Nodal basis of ``P_degree`` on a :class:`~edgsolve.mesh.SkeletonEdge`."""
    b = reference_edge_basis(degree)
    return EdgeBasis(degree, b.nodes, float(edge.length))
