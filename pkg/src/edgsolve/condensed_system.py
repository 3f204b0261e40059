"""Global trace numbering, condensed assembly, SPD solve and local recovery."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import CellBasis, polynomial_dim, subset_basis
from .local_solver import (
    CondensedElementBlock,
    LocalSystem,
    assemble_local_group,
    condense,
    factorize,
)
from .projections import TraceField, boundary_interpolant, project_M

log = logging.getLogger(__name__)

METHODS = ("edg", "hdg")


class SolverError(RuntimeError):
    pass


@dataclass
class TraceSpace:
    """Skeleton degrees of freedom.

    EDG numbers every mesh vertex first (shared by all incident edges),
    then the ``k`` interior Gauss-Lobatto nodes of each edge. HDG gives
    every edge its own ``k + 2`` nodes.
    """

    method: str
    k: int
    edge_dofs: np.ndarray  # (n_edges, k + 2), edge orientation
    boundary: np.ndarray  # (n_dofs,) bool

    @property
    def n_dofs(self) -> int:
        return len(self.boundary)

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def n_interior(self) -> int:
        return int((~self.boundary).sum())

    def cell_dofs(self, mesh, cell_ids) -> np.ndarray:
        """Global dof of every local trace node, shape ``(nc, m * (k + 2))``."""
        out = []
        for t in cell_ids:
            parts = [
                self.edge_dofs[e] if s > 0 else self.edge_dofs[e][::-1]
                for e, s in zip(mesh.cell_edges[t], mesh.cell_edge_signs[t])
            ]
            out.append(np.concatenate(parts))
        return np.array(out, dtype=np.int64)

    def from_field(self, tf: TraceField) -> np.ndarray:
        """Global vector holding the field's values (zeros elsewhere)."""
        vec = np.zeros(self.n_dofs)
        vec[self.edge_dofs[tf.mask]] = tf.values[tf.mask]
        return vec

    def to_field(self, vec: np.ndarray) -> TraceField:
        vals = vec[self.edge_dofs]
        return TraceField(self.k, vals, np.ones(len(vals), bool), self.method == "edg")


def build_trace_space(mesh, k: int, method: str) -> TraceSpace:
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if k < 0:
        raise ValueError("k must be non-negative")
    ne = mesh.n_edges
    if method == "edg":
        nv = mesh.n_vertices
        inner = nv + np.arange(ne * k).reshape(ne, k)
        edge_dofs = np.column_stack([mesh.edges[:, 0], inner, mesh.edges[:, 1]])
        n = nv + ne * k
    else:
        edge_dofs = np.arange(ne * (k + 2)).reshape(ne, k + 2)
        n = ne * (k + 2)
    boundary = np.zeros(n, dtype=bool)
    boundary[edge_dofs[mesh.boundary_edges].ravel()] = True
    return TraceSpace(method, k, edge_dofs.astype(np.int64), boundary)


@dataclass
class ElementGroup:
    cell_ids: np.ndarray
    local: LocalSystem
    block: CondensedElementBlock
    dofs: np.ndarray


@dataclass
class CondensedSystem:
    mesh: object
    space: TraceSpace
    K: sp.csr_matrix  # free x free
    F: np.ndarray
    boundary_values: np.ndarray  # full-length, zero on free dofs
    groups: list = field(default_factory=list)
    K_full: sp.csr_matrix | None = None

    def dump_matrix(self, path) -> None:
        """Write the lower triangle of ``K`` as ``i j value`` lines (0-based)."""
        low = sp.tril(self.K).tocoo()
        order = np.lexsort((low.col, low.row))
        with Path(path).open("w") as fh:
            for i, j, v in zip(low.row[order].tolist(), low.col[order].tolist(),
                               low.data[order].tolist()):
                fh.write(f"{i} {j} {v!r}\n")


def dirichlet_values(mesh, space: TraceSpace, g, npoints: int | None = None) -> np.ndarray:
    """Boundary trace values: continuous interpolant (EDG) or edgewise L2
    projection (HDG)."""
    if space.method == "edg":
        tf = boundary_interpolant(g, mesh, space.k, npoints)
    else:
        tf = project_M(mesh, g, space.k, mesh.boundary_edges, npoints)
    vals = space.from_field(tf)
    vals[~space.boundary] = 0.0
    return vals


def assemble(
    mesh,
    space: TraceSpace,
    problem,
    cell_exactness: int | None = None,
    edge_npoints: int | None = None,
    penalty: str = "edge",
) -> CondensedSystem:
    """Assemble the condensed trace system and eliminate Dirichlet dofs."""
    k = space.k
    rows, cols, vals = [], [], []
    rhs = np.zeros(space.n_dofs)
    groups = []
    for ids in mesh.cell_groups().values():
        ls = assemble_local_group(
            mesh, ids, problem.c, k, problem.f, cell_exactness, edge_npoints, penalty
        )
        block = condense(ls, factorize(ls))
        dofs = space.cell_dofs(mesh, ids)
        nl = dofs.shape[1]
        rows.append(np.repeat(dofs, nl, axis=1).ravel())
        cols.append(np.tile(dofs, (1, nl)).ravel())
        vals.append(block.S.ravel())
        np.add.at(rhs, dofs.ravel(), block.r.ravel())
        groups.append(ElementGroup(ids, ls, block, dofs))
    n = space.n_dofs
    K_full = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    K_full.sum_duplicates()
    bvals = dirichlet_values(mesh, space, problem.g, edge_npoints)
    free = space.free
    F = rhs[free] - K_full[free][:, space.boundary] @ bvals[space.boundary]
    K = K_full[free][:, free].tocsr()
    return CondensedSystem(mesh, space, K, F, bvals, groups, K_full)


def solve_spd(K, F, solver: str = "direct", tol: float = 1e-12) -> np.ndarray:
    """Solve ``K x = F`` for a sparse SPD ``K``."""
    if K.shape[0] == 0:
        return np.zeros(0)
    normF = np.linalg.norm(F)
    if normF == 0.0:
        return np.zeros_like(F)
    if solver == "direct":
        try:
            lu = spla.splu(
                sp.csc_matrix(K),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc
        piv = lu.U.diagonal()
        if np.any(piv <= 0.0):
            raise SolverError(
                f"non-positive pivot {piv.min():.3e}: matrix is not positive definite"
            )
        x = lu.solve(F)
        # one step of iterative refinement
        x += lu.solve(F - K @ x)
    elif solver == "cg":
        d = K.diagonal()
        if np.any(d <= 0.0):
            raise SolverError("non-positive diagonal entry in SPD system")
        M = sp.diags(1.0 / d)
        x, info = spla.cg(K, F, rtol=tol, atol=0.0, M=M, maxiter=20 * K.shape[0])
        if info != 0:
            raise SolverError(f"conjugate gradients did not converge (info={info})")
    else:
        raise ValueError(f"unknown solver {solver!r}")
    res = np.linalg.norm(K @ x - F) / normF
    limit = 1e-10 if solver == "direct" else 10 * tol
    if res > limit:
        log.warning("relative residual %.2e above %.0e", res, limit)
    return x


def solve(system: CondensedSystem, solver: str = "direct", tol: float = 1e-12) -> np.ndarray:
    """Full trace vector: solved interior values plus imposed boundary values."""
    x = system.boundary_values.copy()
    x[system.space.free] = solve_spd(system.K, system.F, solver, tol)
    return x


@dataclass
class DiscreteSolution:
    mesh: object
    k: int
    method: str
    space: TraceSpace
    trace: np.ndarray
    u: np.ndarray  # (n_cells, dim P_{k+1})
    sigma: np.ndarray  # (n_cells, 2, dim P_k)
    vbasis: CellBasis
    wbasis: CellBasis

    def evaluate_u(self, cell_ids, points) -> np.ndarray:
        """``u_h`` at per-cell points ``(nc, np, 2)``."""
        b = subset_basis(self.vbasis, cell_ids)
        return np.einsum("cpi,ci->cp", b.eval(points), self.u[cell_ids])

    def evaluate_sigma(self, cell_ids, points) -> np.ndarray:
        """``sigma_h`` at per-cell points, shape ``(nc, np, 2)``."""
        b = subset_basis(self.wbasis, cell_ids)
        return np.einsum("cpi,cai->cpa", b.eval(points), self.sigma[cell_ids])

    def trace_field(self) -> TraceField:
        return self.space.to_field(self.trace)


def recover(system: CondensedSystem, trace: np.ndarray) -> DiscreteSolution:
    """Back-substitute the trace into the stored local solution maps."""
    mesh, k = system.mesh, system.space.k
    nc = mesh.n_cells
    nV, nk = polynomial_dim(k + 1), polynomial_dim(k)
    u = np.empty((nc, nV))
    sigma = np.empty((nc, 2, nk))
    vb = [np.empty((nc, 2)), np.empty(nc), np.empty((nc, nV, nV))]
    wb = [np.empty((nc, 2)), np.empty(nc), np.empty((nc, nk, nk))]
    for grp in system.groups:
        maps, ls, ids = grp.block.maps, grp.local, grp.cell_ids
        lam = trace[grp.dofs]
        u[ids] = np.einsum("cij,cj->ci", maps.u_trace, lam) + np.einsum(
            "cij,cj->ci", maps.u_load, ls.F
        )
        s = np.einsum("cij,cj->ci", maps.sigma_trace, lam) + np.einsum(
            "cij,cj->ci", maps.sigma_load, ls.F
        )
        sigma[ids] = s.reshape(len(ids), 2, nk)
        for dst, src in ((vb, ls.vbasis), (wb, ls.wbasis)):
            dst[0][ids], dst[1][ids], dst[2][ids] = src.center, src.scale, src.coeffs
    return DiscreteSolution(
        mesh, k, system.space.method, system.space, trace, u, sigma,
        CellBasis(k + 1, *vb), CellBasis(k, *wb),
    )


def solve_problem(
    mesh,
    problem,
    k: int,
    method: str = "edg",
    solver: str = "direct",
    tol: float = 1e-12,
    cell_exactness: int | None = None,
    edge_npoints: int | None = None,
    penalty: str = "edge",
):
    """Assemble, solve and recover in one call; returns ``(solution, system)``."""
    space = build_trace_space(mesh, k, method)
    system = assemble(mesh, space, problem, cell_exactness, edge_npoints, penalty)
    trace = solve(system, solver, tol)
    return recover(system, trace), system
