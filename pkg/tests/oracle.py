"""Brute-force three-field reference solver for small meshes.

Everything here is built independently of the library's local solver:
global monomial bases, a fan triangulation from the first vertex with a
Duffy-mapped Gauss-Legendre rule, and edge Lagrange bases on Lobatto
nodes computed from Legendre polynomials. Only the mesh topology and the
trace dof numbering convention are shared.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre

NQ = 12


def lobatto_nodes(degree):
    inner = np.sort(legendre.Legendre.basis(degree).deriv().roots().real) if degree > 1 else []
    return np.concatenate([[-1.0], inner, [1.0]]) * 0.5 + 0.5


def lagrange(nodes, t):
    t = np.asarray(t, float)[..., None]
    out = np.ones(t.shape[:-1] + (len(nodes),))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                out[..., i] *= (t[..., 0] - xj) / (xi - xj)
    return out


def exponents(d):
    return [(p, s - p) for s in range(d + 1) for p in range(s + 1)]


def mono(x, y, d):
    return np.stack([x**p * y**q for p, q in exponents(d)], axis=-1)


def mono_grad(x, y, d):
    gx, gy = [], []
    for p, q in exponents(d):
        gx.append(p * x ** max(p - 1, 0) * y**q if p else 0 * x)
        gy.append(q * x**p * y ** max(q - 1, 0) if q else 0 * x)
    return np.stack(gx, -1), np.stack(gy, -1)


def cell_rule(xy):
    g, wg = legendre.leggauss(NQ)
    s, ws = 0.5 * (g + 1), 0.5 * wg
    pts, wts = [], []
    for i in range(1, len(xy) - 1):
        a, b, c = xy[0], xy[i], xy[i + 1]
        jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        S, T = np.meshgrid(s, s, indexing="ij")
        W = np.outer(ws, ws) * S * jac
        P = a + S[..., None] * (b - a) + (S * T)[..., None] * (c - b)
        pts.append(P.reshape(-1, 2))
        wts.append(W.ravel())
    return np.concatenate(pts), np.concatenate(wts)


def edge_rule():
    g, wg = legendre.leggauss(NQ)
    return 0.5 * (g + 1), 0.5 * wg


def trace_numbering(mesh, k, method):
    """Global dof of each (edge, node), nodes ordered along ``mesh.edges``."""
    ne = mesh.n_edges
    if method == "edg":
        nv = mesh.n_vertices
        dofs = np.zeros((ne, k + 2), int)
        dofs[:, 0], dofs[:, -1] = mesh.edges[:, 0], mesh.edges[:, 1]
        dofs[:, 1:-1] = nv + np.arange(ne * k).reshape(ne, k)
        return dofs, nv + ne * k
    return np.arange(ne * (k + 2)).reshape(ne, k + 2), ne * (k + 2)


def boundary_values(mesh, k, method, g, dofs, n):
    nodes = lobatto_nodes(k + 1)
    t, w = edge_rule()
    L = lagrange(nodes, t)
    mass = (L.T * w) @ L
    vals = np.zeros(n)
    count = np.zeros(n)
    for e in mesh.boundary_edges:
        a, b = mesh.points[mesh.edges[e]]
        p = a + t[:, None] * (b - a)
        coef = np.linalg.solve(mass, (L.T * w) @ g(p[:, 0], p[:, 1]))
        vals[dofs[e]] += coef
        count[dofs[e]] += 1
    fixed = count > 0
    vals[fixed] /= count[fixed]
    return vals, fixed


def monolithic_solve(mesh, k, method, f, g):
    """Solve the full (sigma, u, lambda) system with ``c = I``.

    Returns per-cell callables for ``u`` and ``sigma``, nodal trace
    values ``(n_edges, k + 2)``, the full matrix, the block sizes and the
    trace-dof Schur complement on free dofs.
    """
    nV, nK = len(exponents(k + 1)), len(exponents(k))
    nW = 2 * nK
    nc = mesh.n_cells
    dofs, nt = trace_numbering(mesh, k, method)
    nloc = nW + nV
    N = nc * nloc + nt
    M = np.zeros((N, N))
    rhs = np.zeros(N)
    nodes = lobatto_nodes(k + 1)
    te, we = edge_rule()
    L = lagrange(nodes, te)

    for T, cv in enumerate(mesh.cell_vertices):
        xy = mesh.points[cv]
        p, w = cell_rule(xy)
        x, y = p[:, 0], p[:, 1]
        phi = mono(x, y, k + 1)
        psi = mono(x, y, k)
        gx, gy = mono_grad(x, y, k)
        tau = np.zeros((len(x), nW, 2))
        tau[:, :nK, 0] = psi
        tau[:, nK:, 1] = psi
        div = np.concatenate([gx, gy], axis=1)
        s0 = T * nloc
        S_, U_ = slice(s0, s0 + nW), slice(s0 + nW, s0 + nloc)
        # (sigma, tau) + (u, div tau) - <lambda, tau.n> = 0
        M[S_, S_] += np.einsum("q,qia,qja->ij", w, tau, tau)
        M[S_, U_] += np.einsum("q,qi,qj->ij", w, div, phi)
        # -(v, div sigma) + <alpha (u - lambda), v> = (f, v)
        M[U_, S_] -= np.einsum("q,qi,qj->ij", w, phi, div)
        rhs[U_] += np.einsum("q,q,qi->i", w, f(x, y), phi)
        m = len(cv)
        for i in range(m):
            a, b = xy[i], xy[(i + 1) % m]
            length = np.hypot(*(b - a))
            normal = np.array([b[1] - a[1], a[0] - b[0]]) / length
            alpha = 1.0 / length
            ep = a + te[:, None] * (b - a)
            ew = we * length
            ephi = mono(ep[:, 0], ep[:, 1], k + 1)
            epsi = mono(ep[:, 0], ep[:, 1], k)
            tn = np.concatenate([epsi * normal[0], epsi * normal[1]], axis=1)
            e = _find_edge(mesh, cv[i], cv[(i + 1) % m])
            # local parameter runs a -> b; flip if the edge is stored b -> a
            mu = L if mesh.edges[e, 0] == cv[i] else L[:, ::-1]
            lam = dofs[e]
            M[S_, nc * nloc + lam] -= np.einsum("q,qi,qn->in", ew, tn, mu)
            M[U_, U_] += alpha * np.einsum("q,qi,qj->ij", ew, ephi, ephi)
            M[U_, nc * nloc + lam] -= alpha * np.einsum("q,qi,qn->in", ew, ephi, mu)
            # <sigma.n - alpha (u - lambda), mu> = 0
            rows = nc * nloc + lam
            M[np.ix_(rows, range(s0, s0 + nW))] += np.einsum("q,qn,qi->ni", ew, mu, tn)
            M[np.ix_(rows, range(s0 + nW, s0 + nloc))] -= alpha * np.einsum(
                "q,qn,qi->ni", ew, mu, ephi
            )
            M[np.ix_(rows, rows)] += alpha * np.einsum("q,qn,qm->nm", ew, mu, mu)

    bvals, fixed = boundary_values(mesh, k, method, g, dofs, nt)
    full = M.copy()
    fixed_rows = nc * nloc + np.flatnonzero(fixed)
    rhs -= M[:, fixed_rows] @ bvals[fixed]
    M[fixed_rows, :] = 0.0
    M[:, fixed_rows] = 0.0
    M[fixed_rows, fixed_rows] = 1.0
    rhs[fixed_rows] = bvals[fixed]
    sol = np.linalg.solve(M, rhs)

    free = nc * nloc + np.flatnonzero(~fixed)
    loc = np.arange(nc * nloc)
    Axx = full[np.ix_(loc, loc)]
    Axl = full[np.ix_(loc, free)]
    Alx = full[np.ix_(free, loc)]
    Schur = full[np.ix_(free, free)] - Alx @ np.linalg.solve(Axx, Axl)

    coef = sol[: nc * nloc].reshape(nc, nloc)
    trace = sol[nc * nloc:][dofs]

    def u_at(T, x, y):
        return mono(x, y, k + 1) @ coef[T, nW:]

    def sigma_at(T, x, y):
        psi = mono(x, y, k)
        return np.stack([psi @ coef[T, :nK], psi @ coef[T, nK:nW]], axis=-1)

    return u_at, sigma_at, trace, Schur


def _find_edge(mesh, a, b):
    hit = np.flatnonzero(
        ((mesh.edges[:, 0] == a) & (mesh.edges[:, 1] == b))
        | ((mesh.edges[:, 0] == b) & (mesh.edges[:, 1] == a))
    )
    return int(hit[0])
