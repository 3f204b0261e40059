"""Two-dimensional polygonal meshes and their skeleton topology.

A :class:`Mesh` stores vertex coordinates and counter-clockwise cell
connectivity as arrays; edges, cell/edge incidence and the star-point
sub-triangulation are derived once at construction and never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

AREA_RTOL = 1e-12


class MeshError(ValueError):
    """Raised for invalid cells or inconsistent connectivity."""


@dataclass(frozen=True)
class Vertex:
    id: int
    position: tuple[float, float]


@dataclass(frozen=True)
class Cell:
    id: int
    vertex_ids: tuple[int, ...]
    vertices: np.ndarray
    star_point: np.ndarray
    diameter: float
    area: float
    sub_triangles: tuple[tuple[int, int, int], ...]
    """Index triples into ``vertices`` with ``-1`` standing for the star point."""


@dataclass(frozen=True)
class SkeletonEdge:
    id: int
    endpoint_ids: tuple[int, int]
    left_cell: int
    right_cell: int | None
    length: float
    unit_normal: np.ndarray

    @property
    def is_boundary(self) -> bool:
        return self.right_cell is None


def polygon_area(xy: np.ndarray) -> float:
    """Signed shoelace area, positive for counter-clockwise ordering."""
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(xy: np.ndarray) -> np.ndarray:
    """Area centroid of a simple polygon."""
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        raise MeshError("degenerate polygon with zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def polygon_diameter(xy: np.ndarray) -> float:
    d = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


def sub_triangulate(vertices, star_point=None) -> list[np.ndarray]:
    """Split a convex polygon into triangles sharing the apex ``star_point``.

    Returns one ``(3, 2)`` array per polygon edge, ordered
    ``(star_point, v_i, v_{i+1})`` so every triangle is counter-clockwise.
    """
    xy = np.asarray(vertices, dtype=float)
    area = polygon_area(xy)
    scale = polygon_diameter(xy) ** 2
    if not area > AREA_RTOL * scale:
        raise MeshError(f"degenerate or clockwise polygon (signed area {area:g})")
    m = polygon_centroid(xy) if star_point is None else np.asarray(star_point, float)
    tris = []
    for i in range(len(xy)):
        tri = np.array([m, xy[i], xy[(i + 1) % len(xy)]])
        if not polygon_area(tri) > 0.0:
            raise MeshError("star point is not strictly interior to the polygon")
        tris.append(tri)
    return tris


class Mesh:
    """Conforming polygonal mesh of a simply connected planar domain.

    Parameters
    ----------
    points : (nv, 2) array_like
        Vertex coordinates.
    cells : sequence of sequences of int
        Counter-clockwise vertex indices of each convex cell.
    """

    def __init__(self, points, cells: Sequence[Sequence[int]]):
        self.points = np.ascontiguousarray(points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise MeshError("points must have shape (nv, 2)")
        if not np.all(np.isfinite(self.points)):
            raise MeshError("vertex coordinates must be finite")
        self.cell_vertices = [np.asarray(c, dtype=np.int64) for c in cells]
        nv = len(self.points)
        for t, cv in enumerate(self.cell_vertices):
            if len(cv) < 3 or cv.min() < 0 or cv.max() >= nv:
                raise MeshError(f"cell {t}: invalid vertex list {cv.tolist()}")
            if len(set(cv.tolist())) != len(cv):
                raise MeshError(f"cell {t}: repeated vertex")
        self._build_geometry()
        self._build_topology()

    # ------------------------------------------------------------------
    def _build_geometry(self):
        nc = self.n_cells
        self.cell_area = np.empty(nc)
        self.cell_diameter = np.empty(nc)
        self.star_points = np.empty((nc, 2))
        for t, cv in enumerate(self.cell_vertices):
            xy = self.points[cv]
            area = polygon_area(xy)
            diam = polygon_diameter(xy)
            if not area > AREA_RTOL * diam**2:
                raise MeshError(f"cell {t}: degenerate or clockwise (area {area:g})")
            e = np.roll(xy, -1, axis=0) - xy
            turn = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
            if np.any(turn < -1e-12 * diam**2):
                raise MeshError(f"cell {t}: polygon is not convex")
            self.cell_area[t] = area
            self.cell_diameter[t] = diam
            self.star_points[t] = polygon_centroid(xy)

    def _build_topology(self):
        edge_index: dict[tuple[int, int], int] = {}
        endpoints: list[tuple[int, int]] = []
        left: list[int] = []
        right: list[int] = []
        self.cell_edges = []
        self.cell_edge_signs = []
        for t, cv in enumerate(self.cell_vertices):
            ids, signs = [], []
            m = len(cv)
            for i in range(m):
                a, b = int(cv[i]), int(cv[(i + 1) % m])
                key = (min(a, b), max(a, b))
                e = edge_index.get(key)
                if e is None:
                    e = len(endpoints)
                    edge_index[key] = e
                    endpoints.append((a, b))
                    left.append(t)
                    right.append(-1)
                    signs.append(1)
                else:
                    if right[e] != -1:
                        raise MeshError(f"edge {key} shared by more than two cells")
                    if endpoints[e] != (b, a):
                        raise MeshError(
                            f"cells {left[e]} and {t} traverse edge {key} in the "
                            "same direction"
                        )
                    right[e] = t
                    signs.append(-1)
                ids.append(e)
            self.cell_edges.append(np.array(ids, dtype=np.int64))
            self.cell_edge_signs.append(np.array(signs, dtype=np.int64))
        self.edges = np.array(endpoints, dtype=np.int64).reshape(-1, 2)
        self.edge_cells = np.column_stack([left, right]).astype(np.int64)
        d = self.points[self.edges[:, 1]] - self.points[self.edges[:, 0]]
        self.edge_length = np.hypot(d[:, 0], d[:, 1])
        self.edge_normal = np.column_stack([d[:, 1], -d[:, 0]]) / self.edge_length[:, None]
        self.boundary_edges = np.flatnonzero(self.edge_cells[:, 1] < 0)
        self.interior_edges = np.flatnonzero(self.edge_cells[:, 1] >= 0)
        on_bnd = np.zeros(self.n_vertices, dtype=bool)
        on_bnd[self.edges[self.boundary_edges].ravel()] = True
        self.boundary_vertex_mask = on_bnd

    # ------------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def n_cells(self) -> int:
        return len(self.cell_vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_interior_vertices(self) -> int:
        return int((~self.boundary_vertex_mask).sum())

    @property
    def n_interior_edges(self) -> int:
        return len(self.interior_edges)

    @property
    def h(self) -> float:
        return float(self.cell_diameter.max())

    @property
    def regularity(self) -> float:
        return float((self.cell_diameter**2 / self.cell_area).max())

    def vertex(self, i: int) -> Vertex:
        x, y = self.points[i]
        return Vertex(int(i), (float(x), float(y)))

    def cell(self, t: int) -> Cell:
        cv = self.cell_vertices[t]
        m = len(cv)
        return Cell(
            id=int(t),
            vertex_ids=tuple(int(v) for v in cv),
            vertices=self.points[cv].copy(),
            star_point=self.star_points[t].copy(),
            diameter=float(self.cell_diameter[t]),
            area=float(self.cell_area[t]),
            sub_triangles=tuple((-1, i, (i + 1) % m) for i in range(m)),
        )

    def edge(self, e: int) -> SkeletonEdge:
        a, b = self.edges[e]
        r = int(self.edge_cells[e, 1])
        return SkeletonEdge(
            id=int(e),
            endpoint_ids=(int(a), int(b)),
            left_cell=int(self.edge_cells[e, 0]),
            right_cell=None if r < 0 else r,
            length=float(self.edge_length[e]),
            unit_normal=self.edge_normal[e].copy(),
        )

    def cell_groups(self) -> dict[int, np.ndarray]:
        """Cell ids grouped by vertex count, for batched element loops."""
        sizes = np.array([len(cv) for cv in self.cell_vertices])
        return {int(m): np.flatnonzero(sizes == m) for m in np.unique(sizes)}

    def check(self) -> None:
        """Assert the conformity and incidence invariants; raise on failure."""
        if self.n_vertices - self.n_edges + self.n_cells != 1:
            raise MeshError("Euler relation V - E + C = 1 violated")
        for t, (es, ss) in enumerate(zip(self.cell_edges, self.cell_edge_signs)):
            for e, s in zip(es, ss):
                owner = self.edge_cells[e, 0 if s > 0 else 1]
                if owner != t:
                    raise MeshError(f"cell {t} / edge {e} incidence mismatch")
        for t in range(self.n_cells):
            tris = sub_triangulate(self.points[self.cell_vertices[t]], self.star_points[t])
            total = sum(polygon_area(tr) for tr in tris)
            if abs(total - self.cell_area[t]) > AREA_RTOL * max(1.0, self.cell_area[t]):
                raise MeshError(f"cell {t}: sub-triangles do not partition the cell")
        if not np.isclose(self.cell_area.sum(), abs(_boundary_area(self)), rtol=1e-12):
            raise MeshError("cell areas do not sum to the domain area")

    def __repr__(self):
        return (
            f"Mesh(n_vertices={self.n_vertices}, n_cells={self.n_cells}, "
            f"n_edges={self.n_edges}, h={self.h:.4g})"
        )


def _boundary_area(mesh: Mesh) -> float:
    # sum of x dy over oriented boundary edges
    a = mesh.points[mesh.edges[mesh.boundary_edges, 0]]
    b = mesh.points[mesh.edges[mesh.boundary_edges, 1]]
    return 0.5 * float((a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]).sum())


def generate_uniform_triangular(n: int) -> Mesh:
    """Unit square split into ``n x n`` squares, each cut along its
    lower-left to upper-right diagonal."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s, indexing="xy")
    points = np.column_stack([X.ravel(), Y.ravel()])
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return Mesh(points, cells)


def generate_uniform_quadrilateral(n: int) -> Mesh:
    """Unit square split into ``n x n`` equal squares."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s, indexing="xy")
    points = np.column_stack([X.ravel(), Y.ravel()])
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            cells.append((v00, v00 + 1, v00 + n + 2, v00 + n + 1))
    return Mesh(points, cells)


def read_mesh(path) -> Mesh:
    """Read the plain-text polygon format.

    Line 1 holds ``nv nc``; then ``nv`` lines ``x y``; then ``nc`` lines
    ``m v0 ... v(m-1)`` with counter-clockwise vertex indices.
    """
    tokens = Path(path).read_text().split()
    try:
        nv, nc = int(tokens[0]), int(tokens[1])
        pos = 2
        pts = np.array(tokens[pos : pos + 2 * nv], dtype=float).reshape(nv, 2)
        pos += 2 * nv
        cells = []
        for _ in range(nc):
            m = int(tokens[pos])
            cells.append([int(v) for v in tokens[pos + 1 : pos + 1 + m]])
            if len(cells[-1]) != m:
                raise IndexError
            pos += 1 + m
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed mesh file") from exc
    if pos != len(tokens):
        raise MeshError(f"{path}: trailing data after {nc} cells")
    return Mesh(pts, cells)


def write_mesh(mesh: Mesh, path) -> None:
    lines = [f"{mesh.n_vertices} {mesh.n_cells}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.points.tolist()]
    lines += [" ".join(map(str, [len(cv), *cv.tolist()])) for cv in mesh.cell_vertices]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class RegularityReport:
    star_shaped: np.ndarray
    edge_ratio_ok: np.ndarray
    inscribed_ratio: np.ndarray
    min_vertex_distance_ratio: np.ndarray

    @property
    def all_pass(self) -> bool:
        return bool(self.star_shaped.all() and self.edge_ratio_ok.all())


def _inscribed_radius(xy: np.ndarray, point: np.ndarray | None = None) -> float:
    """Radius of the largest disc inside the convex polygon ``xy``.

    With ``point`` given, the disc is centred there; otherwise the
    Chebyshev centre is found by linear programming.
    """
    from scipy.optimize import linprog

    e = np.roll(xy, -1, axis=0) - xy
    n = np.column_stack([e[:, 1], -e[:, 0]])
    n /= np.linalg.norm(n, axis=1)[:, None]
    off = (n * xy).sum(1)
    if point is not None:
        return float((off - n @ point).min())
    # maximize r subject to n_i . c + r <= off_i
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=np.column_stack([n, np.ones(len(n))]),
        b_ub=off,
        bounds=[(None, None), (None, None), (0, None)],
    )
    return float(res.x[2])


def validate_regularity(mesh: Mesh, theta: float, ell: float) -> RegularityReport:
    """Per-cell check of the star-shapedness and vertex-separation bounds.

    A cell is star-shaped in the required sense when some disc of radius
    ``theta * h_T`` fits inside it; the star point is tried first and the
    Chebyshev centre second. Failures are reported, never raised.
    """
    if not (0 < theta < 1 and 0 < ell < 1):
        raise ValueError("theta and ell must lie in (0, 1)")
    nc = mesh.n_cells
    ratio = np.empty(nc)
    dist_ratio = np.empty(nc)
    for t, cv in enumerate(mesh.cell_vertices):
        xy = mesh.points[cv]
        h = mesh.cell_diameter[t]
        r = _inscribed_radius(xy, mesh.star_points[t])
        if r < theta * h:
            r = max(r, _inscribed_radius(xy))
        ratio[t] = r / h
        d = np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(-1))
        dist_ratio[t] = d[np.triu_indices(len(xy), 1)].min() / h
    return RegularityReport(
        star_shaped=ratio >= theta,
        edge_ratio_ok=dist_ratio >= ell,
        inscribed_ratio=ratio,
        min_vertex_distance_ratio=dist_ratio,
    )
