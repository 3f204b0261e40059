"""Estimator-style wrapper around the condensed solver."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .condensed_system import solve_problem

LOCATE_TOL = 1e-12


def locate_points(mesh, points: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Index of a cell containing each point, ``-1`` if outside the mesh.

    Cells are convex, so a point lies in a cell when it is on the inner
    side of every edge. Points on shared edges go to the lowest cell id.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.full(len(points), -1, dtype=np.int64)
    for ids in sorted(mesh.cell_groups().values(), key=lambda a: a[0]):
        verts = np.stack([mesh.points[mesh.cell_vertices[t]] for t in ids])
        d = np.roll(verts, -1, axis=1) - verts
        scale = mesh.cell_diameter[ids][:, None, None]
        for start in range(0, len(points), chunk):
            sl = slice(start, start + chunk)
            p = points[sl]
            rel = p[None, None, :, :] - verts[:, :, None, :]
            cross = d[..., None, 0] * rel[..., 1] - d[..., None, 1] * rel[..., 0]
            inside = np.all(cross >= -LOCATE_TOL * scale**2, axis=1)
            hit = inside.any(axis=0)
            cell = ids[inside.argmax(axis=0)]
            sub = out[sl]
            take = hit & ((sub < 0) | (cell < sub))
            sub[take] = cell[take]
    return out


class EDGSolver(BaseEstimator):
    """Mixed DG solver for ``c sigma = grad u, -div sigma = f, u = g``.

    Parameters
    ----------
    method : {"edg", "hdg"}
        Continuous (``"edg"``) or edgewise (``"hdg"``) trace space.
    k : int
        Flux degree; the potential and the trace use degree ``k + 1``.
    solver : {"direct", "cg"}
        Sparse solver for the condensed trace system.
    tol : float
        Relative tolerance of the iterative solver.
    penalty : {"edge", "diameter"}
        Stabilization weight, reciprocal edge length or cell diameter.

    Attributes
    ----------
    solution_ : DiscreteSolution
    system_ : CondensedSystem
    n_dofs_ : int
        Number of free trace unknowns.
    """

    def __init__(self, method="edg", k=1, solver="direct", tol=1e-12, penalty="edge"):
        self.method = method
        self.k = k
        self.solver = solver
        self.tol = tol
        self.penalty = penalty

    def fit(self, mesh, problem):
        """Assemble and solve on ``mesh`` for ``problem``."""
        self.solution_, self.system_ = solve_problem(
            mesh, problem, self.k, self.method, self.solver, self.tol, penalty=self.penalty
        )
        self.mesh_ = mesh
        self.n_dofs_ = self.system_.space.n_interior
        return self

    def _located(self, points):
        if not hasattr(self, "solution_"):
            raise NotFittedError("call fit before predict")
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        cells = locate_points(self.mesh_, pts)
        if np.any(cells < 0):
            bad = pts[np.flatnonzero(cells < 0)[0]]
            raise ValueError(f"point {bad.tolist()} lies outside the mesh")
        return pts, cells

    def predict(self, points) -> np.ndarray:
        """Potential ``u_h`` at ``points`` of shape ``(N, 2)``."""
        pts, cells = self._located(points)
        return self.solution_.evaluate_u(cells, pts[:, None, :])[:, 0]

    def predict_flux(self, points) -> np.ndarray:
        """Flux ``sigma_h`` at ``points``, shape ``(N, 2)``."""
        pts, cells = self._located(points)
        return self.solution_.evaluate_sigma(cells, pts[:, None, :])[:, 0, :]
