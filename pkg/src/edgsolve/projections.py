"""L2 projections onto the discrete spaces and the continuous boundary interpolant."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import CellBasis, orthonormal_cell_basis, reference_edge_basis, subset_basis
from .local_solver import group_geometry
from .quadrature import cell_quadrature_points, edge_rule


@dataclass
class ScalarFieldOnCell:
    cell_id: int
    coefficients: np.ndarray
    basis: CellBasis

    def __call__(self, x, y):
        pts = np.stack(np.broadcast_arrays(x, y), axis=-1)
        shape = pts.shape[:-1]
        vals = self.basis.eval(pts.reshape(-1, 2)) @ self.coefficients
        return vals.reshape(shape)


@dataclass
class TraceField:
    """Nodal trace values per edge in the edge's own orientation.

    ``values`` has shape ``(n_edges, k + 2)``; rows of edges outside
    ``mask`` are unused and hold NaN.
    """

    k: int
    values: np.ndarray
    mask: np.ndarray
    continuous: bool

    def max_vertex_mismatch(self, mesh) -> float:
        """Largest disagreement between edges sharing a vertex."""
        worst = 0.0
        ends = {}
        for e in np.flatnonzero(self.mask):
            a, b = mesh.edges[e]
            for v, val in ((a, self.values[e, 0]), (b, self.values[e, -1])):
                if v in ends:
                    worst = max(worst, abs(ends[v] - val))
                else:
                    ends[v] = val
        return worst


def _cell_data(mesh, cell_ids, degree, exactness):
    verts, star, diam = group_geometry(mesh, cell_ids)
    basis = orthonormal_cell_basis(verts, star, diam, degree, cell_ids=cell_ids)
    pts, w = cell_quadrature_points(verts, star, exactness)
    return basis, pts, w


def project_V(cell, f, degree: int, exactness: int | None = None) -> ScalarFieldOnCell:
    """L2 projection of ``f(x, y)`` onto ``P_degree`` of one cell."""
    from .basis import build_cell_basis
    from .quadrature import cell_quadrature

    q = exactness if exactness is not None else 2 * degree + 8
    basis = build_cell_basis(cell, degree)
    rule = cell_quadrature(cell, q)
    phi = basis.eval(rule.points)
    fv = f(rule.points[:, 0], rule.points[:, 1])
    return ScalarFieldOnCell(cell.id, (rule.weights * fv) @ phi, basis)


def project_cells(mesh, f, degree: int, exactness: int | None = None):
    """Cellwise L2 projection of a scalar or vector function over the mesh.

    ``f`` returns either an array shaped like ``x`` or a tuple of such
    arrays (one per component). Returns ``(coeffs, basis)`` with
    ``coeffs`` of shape ``(n_cells, dim)`` or ``(n_cells, ncomp, dim)``
    and a basis covering all cells.
    """
    q = exactness if exactness is not None else 2 * degree + 8
    dim = (degree + 1) * (degree + 2) // 2
    coeffs = None
    center = np.empty((mesh.n_cells, 2))
    scale = np.empty(mesh.n_cells)
    bcoef = np.empty((mesh.n_cells, dim, dim))
    for ids in mesh.cell_groups().values():
        basis, pts, w = _cell_data(mesh, ids, degree, q)
        phi = basis.eval(pts)
        fv = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
        if fv.shape == w.shape:
            c = np.einsum("cq,cq,cqi->ci", w, fv, phi)
        else:
            c = np.einsum("cq,kcq,cqi->cki", w, fv, phi)
        if coeffs is None:
            coeffs = np.empty((mesh.n_cells,) + c.shape[1:])
        coeffs[ids] = c
        center[ids], scale[ids], bcoef[ids] = basis.center, basis.scale, basis.coeffs
    return coeffs, CellBasis(degree, center, scale, bcoef)


def project_W(mesh, tau, k: int, exactness: int | None = None):
    """Cellwise projection of a vector field onto ``[P_k]^2``."""
    return project_cells(mesh, tau, k, exactness)


def _edge_geometry(mesh, edges, npoints):
    rule = edge_rule(npoints)
    a = mesh.points[mesh.edges[edges, 0]]
    b = mesh.points[mesh.edges[edges, 1]]
    t = rule.points[:, 0]
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    return pts, rule.weights, t


def project_M(mesh, g, k: int, edges=None, npoints: int | None = None) -> TraceField:
    """Edgewise L2 projection onto ``P_{k+1}`` in Gauss-Lobatto nodal form."""
    edges = np.arange(mesh.n_edges) if edges is None else np.asarray(edges, dtype=np.int64)
    npoints = k + 5 if npoints is None else npoints
    basis = reference_edge_basis(k + 1)
    pts, w, t = _edge_geometry(mesh, edges, npoints)
    mu = basis.eval(t)
    mref = (mu.T * w) @ mu
    gv = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float)
    gv = np.broadcast_to(gv, pts.shape[:-1])
    rhs = np.einsum("q,eq,qn->en", w, gv, mu)
    vals = np.full((mesh.n_edges, k + 2), np.nan)
    vals[edges] = np.linalg.solve(mref, rhs.T).T
    mask = np.zeros(mesh.n_edges, dtype=bool)
    mask[edges] = True
    return TraceField(k, vals, mask, continuous=False)


def averaged_trace(mesh, g, k: int, edges=None, npoints: int | None = None) -> TraceField:
    """Edgewise projection with endpoint values averaged over the given edges.

    Interior nodes keep the projected values; each vertex receives the
    mean of the projections from all edges in ``edges`` that touch it.
    """
    proj = project_M(mesh, g, k, edges, npoints)
    edges = np.flatnonzero(proj.mask)
    nv = mesh.n_vertices
    total = np.zeros(nv)
    count = np.zeros(nv)
    ends = mesh.edges[edges]
    np.add.at(total, ends[:, 0], proj.values[edges, 0])
    np.add.at(total, ends[:, 1], proj.values[edges, -1])
    np.add.at(count, ends.ravel(), 1)
    avg = total / np.maximum(count, 1)
    vals = proj.values.copy()
    vals[edges, 0] = avg[ends[:, 0]]
    vals[edges, -1] = avg[ends[:, 1]]
    return TraceField(k, vals, proj.mask, continuous=True)


def boundary_interpolant(g, mesh, k: int, npoints: int | None = None) -> TraceField:
    """Continuous piecewise ``P_{k+1}`` interpolant of boundary data ``g``."""
    return averaged_trace(mesh, g, k, mesh.boundary_edges, npoints)


def trace_on_cells(field: TraceField, mesh, cell_ids) -> np.ndarray:
    """Gather edge nodal values into the local trace layout of each cell."""
    rows = []
    for t in cell_ids:
        parts = []
        for e, s in zip(mesh.cell_edges[t], mesh.cell_edge_signs[t]):
            parts.append(field.values[e] if s > 0 else field.values[e][::-1])
        rows.append(np.concatenate(parts))
    return np.array(rows)


def projection_errors(mesh, v, tau, k: int, exactness: int | None = None,
                      npoints: int | None = None) -> tuple[float, float, float]:
    """L2 errors of the three projections on a mesh.

    Returns ``||v - P_V v||``, ``||tau - P_W tau||`` and
    ``(sum_T ||v - P_M v||^2_{dT})^{1/2}``, where interior edges count
    once for each neighbouring cell.
    """
    q = 2 * (k + 2) + 6 if exactness is None else exactness
    ev = ew = 0.0
    cu, bu = project_cells(mesh, v, k + 1, q)
    ct, bt = project_cells(mesh, tau, k, q)
    for ids in mesh.cell_groups().values():
        verts, star, _ = group_geometry(mesh, ids)
        pts, w = cell_quadrature_points(verts, star, q)
        x, y = pts[..., 0], pts[..., 1]
        approx = np.einsum("cqi,ci->cq", subset_basis(bu, ids).eval(pts), cu[ids])
        ev += np.einsum("cq,cq->", w, (v(x, y) - approx) ** 2)
        approx = np.einsum("cqi,cai->acq", subset_basis(bt, ids).eval(pts), ct[ids])
        ew += np.einsum("cq,acq->", w, (np.stack(tau(x, y)) - approx) ** 2)

    ne = 2 * (k + 2) + 4 if npoints is None else npoints
    proj = project_M(mesh, v, k, npoints=k + 5)
    pts, w, t = _edge_geometry(mesh, np.arange(mesh.n_edges), ne)
    approx = proj.values @ reference_edge_basis(k + 1).eval(t).T
    err = np.einsum("q,eq->e", w, (v(pts[..., 0], pts[..., 1]) - approx) ** 2)
    err *= mesh.edge_length
    sides = np.where(mesh.edge_cells[:, 1] >= 0, 2.0, 1.0)
    return float(np.sqrt(ev)), float(np.sqrt(ew)), float(np.sqrt((sides * err).sum()))
