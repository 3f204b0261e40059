"""Element-local problems and static condensation.

On each cell ``T`` the potential lives in ``P_{k+1}(T)``, the flux in
``[P_k(T)]^2`` and the trace on every edge in ``P_{k+1}(F)``. The local
trace vector of a cell with ``m`` edges has ``m * (k + 2)`` entries:
Gauss-Lobatto nodal values edge by edge, each edge traversed in the
cell's own counter-clockwise direction.

Everything here is batched over a leading cell axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import CellBasis, orthonormal_cell_basis, reference_edge_basis
from .quadrature import cell_quadrature_points, edge_rule

SINGULAR_RTOL = 1e-12
PENALTIES = ("edge", "diameter")


class LocalSolveError(np.linalg.LinAlgError):
    pass


class CoefficientError(ValueError):
    pass


def default_cell_exactness(k: int) -> int:
    return 2 * (k + 2) + 4


def default_edge_points(k: int) -> int:
    return k + 4


@dataclass
class LocalSystem:
    """Local matrices for a batch of cells with ``m`` edges each.

    Flux unknowns are ordered component-major: all x-components, then all
    y-components of the scalar ``P_k`` basis.
    """

    cell_ids: np.ndarray
    k: int
    n_edges: int
    alpha: np.ndarray  # (nc, m) penalty per local edge
    A: np.ndarray  # (c sigma, tau)
    D: np.ndarray  # (u, div tau): rows flux, cols potential
    E: np.ndarray  # alpha <u, v> on the cell boundary
    C: np.ndarray  # <lambda, tau.n>: rows flux, cols trace
    H: np.ndarray  # alpha <lambda, v>: rows potential, cols trace
    G: np.ndarray  # alpha <lambda, mu>
    F: np.ndarray | None  # (f, v) moments, (nc, nV)
    vbasis: CellBasis
    wbasis: CellBasis

    @property
    def n_potential(self) -> int:
        return self.E.shape[-1]

    @property
    def n_flux(self) -> int:
        return self.A.shape[-1]

    @property
    def n_trace(self) -> int:
        return self.G.shape[-1]

    def saddle_matrix(self) -> np.ndarray:
        """Local operator acting on ``(sigma, u)`` as the equations are written."""
        top = np.concatenate([self.A, self.D], axis=-1)
        bot = np.concatenate([-np.swapaxes(self.D, -1, -2), self.E], axis=-1)
        return np.concatenate([top, bot], axis=-2)


@dataclass
class LocalSolution:
    """Linear maps from trace values and load moments to local fields."""

    sigma_trace: np.ndarray  # (nc, nW, nL)
    u_trace: np.ndarray  # (nc, nV, nL)
    sigma_load: np.ndarray  # (nc, nW, nV)
    u_load: np.ndarray  # (nc, nV, nV)


@dataclass
class CondensedElementBlock:
    cell_ids: np.ndarray
    S: np.ndarray  # (nc, nL, nL)
    r: np.ndarray | None  # (nc, nL)
    maps: LocalSolution


def group_geometry(mesh, cell_ids):
    verts = np.stack([mesh.points[mesh.cell_vertices[t]] for t in cell_ids])
    return verts, mesh.star_points[cell_ids], mesh.cell_diameter[cell_ids]


def edge_points(vertices: np.ndarray, npoints: int):
    """Gauss points on every local edge.

    Returns points ``(nc, m, nq, 2)``, physical weights ``(nc, m, nq)``,
    outward unit normals ``(nc, m, 2)`` and the reference parameters.
    """
    rule = edge_rule(npoints)
    t = rule.points[:, 0]
    a = vertices
    d = np.roll(vertices, -1, axis=1) - a
    length = np.hypot(d[..., 0], d[..., 1])
    pts = a[:, :, None, :] + t[None, None, :, None] * d[:, :, None, :]
    w = length[..., None] * rule.weights
    normal = np.stack([d[..., 1], -d[..., 0]], axis=-1) / length[..., None]
    return pts, w, normal, t


def penalty_parameter(verts, diam, penalty: str = "edge") -> np.ndarray:
    """Stabilization weight on every local edge, shape ``(nc, m)``.

    ``"edge"`` uses the reciprocal edge length, ``"diameter"`` the
    reciprocal cell diameter on all edges of the cell.
    """
    if penalty == "edge":
        d = np.roll(verts, -1, axis=1) - verts
        return 1.0 / np.hypot(d[..., 0], d[..., 1])
    if penalty == "diameter":
        return np.repeat((1.0 / diam)[:, None], verts.shape[1], axis=1)
    raise ValueError(f"penalty must be one of {PENALTIES}, got {penalty!r}")


def _check_spd(cvals, cell_ids, pts):
    tr = cvals[..., 0, 0] + cvals[..., 1, 1]
    det = cvals[..., 0, 0] * cvals[..., 1, 1] - cvals[..., 0, 1] * cvals[..., 1, 0]
    asym = np.abs(cvals[..., 0, 1] - cvals[..., 1, 0])
    bad = ~((tr > 0) & (det > 0) & (asym <= 1e-12 * np.abs(tr)))
    if np.any(bad):
        c, q = np.argwhere(bad)[0]
        raise CoefficientError(
            f"coefficient tensor not symmetric positive definite in cell "
            f"{int(cell_ids[c])} at point {tuple(pts[c, q])}"
        )


def evaluate_tensor(coef, x, y) -> np.ndarray:
    """Evaluate a coefficient callable and broadcast it to ``(..., 2, 2)``."""
    val = np.asarray(coef(x, y), dtype=float)
    if val.shape == x.shape:
        val = val[..., None, None] * np.eye(2)
    return np.broadcast_to(val, x.shape + (2, 2))


def assemble_local_group(
    mesh,
    cell_ids,
    coef,
    k: int,
    f=None,
    cell_exactness: int | None = None,
    edge_npoints: int | None = None,
    penalty: str = "edge",
) -> LocalSystem:
    """Build :class:`LocalSystem` for cells sharing a vertex count."""
    cell_ids = np.asarray(cell_ids, dtype=np.int64)
    verts, star, diam = group_geometry(mesh, cell_ids)
    return _assemble(
        verts, star, diam, cell_ids, coef, k, f, cell_exactness, edge_npoints, penalty
    )


def assemble_local(cell, coef, k: int, f=None, **quad) -> LocalSystem:
    """Local system for a single :class:`~edgsolve.mesh.Cell` (batch of one)."""
    return _assemble(
        np.asarray(cell.vertices, float)[None],
        np.asarray(cell.star_point, float)[None],
        np.array([cell.diameter]),
        np.array([cell.id]),
        coef,
        k,
        f,
        quad.get("cell_exactness"),
        quad.get("edge_npoints"),
        quad.get("penalty", "edge"),
    )


def _assemble(verts, star, diam, cell_ids, coef, k, f, cell_exactness, edge_npoints, penalty):
    if k < 0:
        raise ValueError("k must be non-negative")
    qx = default_cell_exactness(k) if cell_exactness is None else cell_exactness
    qe = default_edge_points(k) if edge_npoints is None else edge_npoints
    nc, m = verts.shape[:2]
    alpha = penalty_parameter(verts, diam, penalty)

    vb = orthonormal_cell_basis(verts, star, diam, k + 1, cell_ids=cell_ids)
    wb = orthonormal_cell_basis(verts, star, diam, k, cell_ids=cell_ids)
    nk = wb.dim

    pts, w = cell_quadrature_points(verts, star, qx)
    phi = vb.eval(pts)
    psi, dpsi = wb.eval_grad(pts)
    cv = evaluate_tensor(coef, pts[..., 0], pts[..., 1])
    _check_spd(cv, cell_ids, pts)

    A = np.einsum("cq,cqab,cqi,cqj->caibj", w, cv, psi, psi, optimize=True)
    A = A.reshape(nc, 2 * nk, 2 * nk)
    D = np.einsum("cq,cqj,cqia->caij", w, phi, dpsi, optimize=True).reshape(nc, 2 * nk, -1)
    F = None
    if f is not None:
        fv = np.broadcast_to(np.asarray(f(pts[..., 0], pts[..., 1]), float), w.shape)
        F = np.einsum("cq,cq,cqi->ci", w, fv, phi)

    epts, ew, normal, t = edge_points(verts, qe)
    mu = reference_edge_basis(k + 1).eval(t)  # (nq, k+2)
    flat = epts.reshape(nc, -1, 2)
    phie = vb.eval(flat).reshape(nc, m, len(t), -1)
    psie = wb.eval(flat).reshape(nc, m, len(t), -1)

    E = np.einsum("ce,ceq,ceqi,ceqj->cij", alpha, ew, phie, phie)
    H = np.einsum("ce,ceq,ceqi,qn->cien", alpha, ew, phie, mu).reshape(nc, -1, m * (k + 2))
    C = np.einsum("ceq,ceqi,cea,qn->caien", ew, psie, normal, mu, optimize=True)
    C = C.reshape(nc, 2 * nk, m * (k + 2))
    emass = np.einsum("ceq,qi,qj->ceij", ew, mu, mu)
    G = np.zeros((nc, m, k + 2, m, k + 2))
    for e in range(m):
        G[:, e, :, e, :] = alpha[:, e, None, None] * emass[:, e]
    G = G.reshape(nc, m * (k + 2), m * (k + 2))
    return LocalSystem(cell_ids, k, m, alpha, A, D, E, C, H, G, F, vb, wb)


def factorize(ls: LocalSystem) -> LocalSolution:
    """Solve the local problems for every trace basis function and load moment."""
    M = ls.saddle_matrix()
    sv = np.linalg.svd(M, compute_uv=False)
    bad = sv[:, -1] <= SINGULAR_RTOL * sv[:, 0]
    if np.any(bad):
        raise LocalSolveError(f"singular local matrix in cell {int(ls.cell_ids[bad][0])}")
    nc, nW, nV, nL = len(ls.cell_ids), ls.n_flux, ls.n_potential, ls.n_trace
    rhs = np.zeros((nc, nW + nV, nL + nV))
    rhs[:, :nW, :nL] = ls.C
    rhs[:, nW:, :nL] = ls.H
    rhs[:, nW:, nL:] = np.eye(nV)
    X = np.linalg.solve(M, rhs)
    return LocalSolution(
        sigma_trace=X[:, :nW, :nL],
        u_trace=X[:, nW:, :nL],
        sigma_load=X[:, :nW, nL:],
        u_load=X[:, nW:, nL:],
    )


def solve_local_lambda(ls: LocalSystem, lam: np.ndarray, maps: LocalSolution | None = None):
    """Local fields ``(u, sigma)`` driven by trace values ``lam`` (nc, nL)."""
    maps = factorize(ls) if maps is None else maps
    u = np.einsum("cij,cj->ci", maps.u_trace, lam)
    s = np.einsum("cij,cj->ci", maps.sigma_trace, lam)
    return u, s


def solve_local_f(ls: LocalSystem, fmom: np.ndarray, maps: LocalSolution | None = None):
    """Local fields ``(u, sigma)`` driven by load moments ``(f, v)`` (nc, nV)."""
    maps = factorize(ls) if maps is None else maps
    u = np.einsum("cij,cj->ci", maps.u_load, fmom)
    s = np.einsum("cij,cj->ci", maps.sigma_load, fmom)
    return u, s


def condense(ls: LocalSystem, maps: LocalSolution | None = None) -> CondensedElementBlock:
    """Schur complement onto the local trace unknowns.

    The trace equation reads ``C^T sigma - H^T u + G lam = 0``; inserting
    the local solution maps gives ``S lam = r``.
    """
    maps = factorize(ls) if maps is None else maps
    Ct = np.swapaxes(ls.C, -1, -2)
    Ht = np.swapaxes(ls.H, -1, -2)
    S = ls.G + Ct @ maps.sigma_trace - Ht @ maps.u_trace
    r = None
    if ls.F is not None:
        R = Ht @ maps.u_load - Ct @ maps.sigma_load
        r = np.einsum("cij,cj->ci", R, ls.F)
    return CondensedElementBlock(ls.cell_ids, S, r, maps)
