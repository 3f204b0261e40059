"""Error norms of discrete solutions and observed convergence rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import reference_edge_basis, subset_basis
from .local_solver import edge_points, evaluate_tensor, group_geometry, penalty_parameter
from .projections import (
    TraceField,
    averaged_trace,
    project_cells,
    project_M,
    trace_on_cells,
)
from .quadrature import cell_quadrature_points


def default_error_exactness(k: int) -> int:
    return 2 * (k + 2) + 6


def _cellwise_sq(sol, exact, which, exactness):
    mesh = sol.mesh
    out = np.empty(mesh.n_cells)
    for ids in mesh.cell_groups().values():
        verts, star, _ = group_geometry(mesh, ids)
        pts, w = cell_quadrature_points(verts, star, exactness)
        x, y = pts[..., 0], pts[..., 1]
        if which == "u":
            diff = exact(x, y) - sol.evaluate_u(ids, pts)
            out[ids] = np.einsum("cq,cq->c", w, diff**2)
        else:
            sx, sy = exact(x, y)
            sh = sol.evaluate_sigma(ids, pts)
            out[ids] = np.einsum("cq,cq->c", w, (sx - sh[..., 0]) ** 2 + (sy - sh[..., 1]) ** 2)
    return out


def l2_error_u(sol, u_exact, exactness: int | None = None) -> float:
    """``||u - u_h||`` over the domain."""
    q = default_error_exactness(sol.k) if exactness is None else exactness
    return math.sqrt(_cellwise_sq(sol, u_exact, "u", q).sum())


def l2_error_sigma(sol, sigma_exact, exactness: int | None = None) -> float:
    """``||sigma - sigma_h||`` over the domain."""
    q = default_error_exactness(sol.k) if exactness is None else exactness
    return math.sqrt(_cellwise_sq(sol, sigma_exact, "sigma", q).sum())


def seminorm(mesh, coef, k, u_coef, vbasis, sigma_coef, wbasis, trace_local_by_group,
             penalty="edge", edge_npoints=None, exactness=None) -> float:
    """Energy seminorm of a discrete triple.

    ``(c tau, tau) + sum_T ||alpha^{1/2} (v - mu)||^2_{dT}`` for cellwise
    potential/flux coefficients and local trace vectors keyed by vertex
    count.
    """
    q = default_error_exactness(k) if exactness is None else exactness
    ne = k + 5 if edge_npoints is None else edge_npoints
    mu_basis = reference_edge_basis(k + 1)
    total = 0.0
    for m, ids in mesh.cell_groups().items():
        verts, star, diam = group_geometry(mesh, ids)
        pts, w = cell_quadrature_points(verts, star, q)
        tau = np.einsum("cpi,cai->cpa", subset_basis(wbasis, ids).eval(pts), sigma_coef[ids])
        cv = evaluate_tensor(coef, pts[..., 0], pts[..., 1])
        total += np.einsum("cq,cqa,cqab,cqb->", w, tau, cv, tau)
        epts, ew, _, t = edge_points(verts, ne)
        flat = epts.reshape(len(ids), -1, 2)
        v = np.einsum("cpi,ci->cp", subset_basis(vbasis, ids).eval(flat), u_coef[ids])
        v = v.reshape(len(ids), m, len(t))
        lam = trace_local_by_group[m].reshape(len(ids), m, k + 2)
        muv = np.einsum("cen,qn->ceq", lam, mu_basis.eval(t))
        alpha = penalty_parameter(verts, diam, penalty)
        total += np.einsum("ce,ceq,ceq->", alpha, ew, (v - muv) ** 2)
    return math.sqrt(max(total, 0.0))


def seminorm_error(sol, problem, penalty="edge", edge_npoints=None) -> float:
    """Seminorm of ``(P_V u - u_h, I u - lambda_h, P_W sigma - sigma_h)``.

    ``I u`` is the edgewise projection of ``u`` (HDG) or the same with
    vertex values averaged over all incident edges (EDG), a computable
    stand-in for the analysis interpolant.
    """
    mesh, k = sol.mesh, sol.k
    # project_cells rebuilds the same orthonormal bases, so coefficients
    # are directly comparable with the solution's
    pu, _ = project_cells(mesh, problem.u, k + 1)
    ps, _ = project_cells(mesh, lambda x, y: np.stack(problem.sigma(x, y)), k)
    if sol.method == "edg":
        tu = averaged_trace(mesh, problem.u, k)
    else:
        tu = project_M(mesh, problem.u, k)
    diff = TraceField(k, tu.values - sol.trace_field().values, tu.mask, tu.continuous)
    local = {m: trace_on_cells(diff, mesh, ids) for m, ids in mesh.cell_groups().items()}
    return seminorm(mesh, problem.c, k, pu - sol.u, sol.vbasis, ps - sol.sigma,
                    sol.wbasis, local, penalty, edge_npoints)


def field_norms(problem, exactness: int = 30) -> tuple[float, float]:
    """``(||u||, ||sigma||)`` on the unit square, for relative errors."""
    verts = np.array([[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]])
    pts, w = cell_quadrature_points(verts, np.array([[0.5, 0.5]]), exactness)
    x, y = pts[..., 0], pts[..., 1]
    sx, sy = problem.sigma(x, y)
    return (math.sqrt(float((w * problem.u(x, y) ** 2).sum())),
            math.sqrt(float((w * (sx**2 + sy**2)).sum())))


@dataclass
class ErrorRecord:
    mesh: str
    n: int
    h: float
    n_dofs: int
    err_u: float
    err_sigma: float
    seminorm_err: float | None = None

    def __post_init__(self):
        for v in (self.err_u, self.err_sigma):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"invalid error value {v}")


@dataclass
class ConvergenceReport:
    """Error records of one ``(method, k, mesh family)`` refinement sweep."""

    method: str
    k: int
    mesh: str = ""
    norm: str = "absolute"
    records: list = field(default_factory=list)

    def rates(self, attr: str) -> list:
        return observed_rates([getattr(r, attr) for r in self.records],
                              [r.h for r in self.records])


def observed_rates(errors, hs=None) -> list:
    """``log2(e_coarse / e_fine)`` between consecutive records.

    Entries are ``None`` where either error is zero, or where ``hs`` is
    given and the mesh size does not halve (ratio 2 within 1e-12).
    """
    out = []
    for i in range(len(errors) - 1):
        a, b = errors[i], errors[i + 1]
        halved = hs is None or abs(hs[i] / hs[i + 1] - 2.0) <= 1e-12
        out.append(math.log2(a / b) if a > 0 and b > 0 and halved else None)
    return out
