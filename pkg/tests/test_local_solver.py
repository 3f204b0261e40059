import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from edgsolve.local_solver import (
    CoefficientError,
    LocalSolveError,
    assemble_local,
    assemble_local_group,
    condense,
    factorize,
    solve_local_f,
    solve_local_lambda,
)
from edgsolve.mesh import Mesh, generate_uniform_quadrilateral, generate_uniform_triangular
from edgsolve.projections import project_M, trace_on_cells
from edgsolve.quadrature import cell_quadrature
from oracle import monolithic_solve


def identity(x, y):
    return np.ones_like(x)


def weighted(x, y):
    return 1.0 + x**2 * y**2


def unit_square():
    return generate_uniform_quadrilateral(1)


def pentagon():
    pts = np.array([[0, 0], [1, 0], [1.3, 0.6], [0.5, 1.1], [-0.2, 0.7]])
    return Mesh(pts, [(0, 1, 2, 3, 4)])


def local_trace(mesh, g, k, cell=0):
    tf = project_M(mesh, g, k)
    return trace_on_cells(tf, mesh, [cell])


def fields_at(ls, u, s, pts):
    uv = ls.vbasis.eval(pts[None]) @ u[0]
    nk = ls.wbasis.dim
    psi = ls.wbasis.eval(pts[None])[0]
    sv = np.stack([psi @ s[0, :nk], psi @ s[0, nk:]], axis=-1)
    return uv[0], sv


def test_identity_coefficient_unit_square():
    m = unit_square()
    ls = assemble_local(m.cell(0), identity, 0)
    assert np.allclose(ls.A[0], np.eye(2), atol=1e-14)
    # stabilization: alpha = 1 / |F| on each unit edge, times the edge mass
    phi_mass = np.zeros((3, 3))
    t = np.polynomial.legendre.leggauss(6)
    s, w = 0.5 * (t[0] + 1), 0.5 * t[1]
    corners = m.points[m.cell_vertices[0]]
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        p = a + s[:, None] * (b - a)
        phi = ls.vbasis.eval(p[None])[0]
        phi_mass += (phi.T * w) @ phi
    assert np.allclose(ls.E[0], phi_mass, atol=1e-13)
    ld = assemble_local(m.cell(0), identity, 0, penalty="diameter")
    assert np.allclose(ld.E[0], phi_mass / np.sqrt(2), atol=1e-13)


def test_weighted_coefficient_mass():
    m = generate_uniform_triangular(2)
    c = m.cell(5)
    ls = assemble_local(c, weighted, 1)
    A = ls.A[0]
    assert np.abs(A - A.T).max() < 1e-13
    r = cell_quadrature(c, 20)
    psi = ls.wbasis.eval(r.points[None])[0]
    ref = (psi.T * (r.weights * weighted(r.points[:, 0], r.points[:, 1]))) @ psi
    nk = psi.shape[1]
    assert np.allclose(A[:nk, :nk], ref, atol=1e-12)
    assert np.allclose(A[nk:, nk:], ref, atol=1e-12)
    assert np.abs(A[:nk, nk:]).max() < 1e-14
    assert np.linalg.eigvalsh(A).min() > 0
    assert np.linalg.eigvalsh(ls.E[0]).min() > -1e-13


def test_rejects_non_spd_coefficient():
    c = unit_square().cell(0)
    with pytest.raises(CoefficientError, match="cell 0"):
        assemble_local(c, lambda x, y: np.zeros_like(x), 0)

    def indefinite(x, y):
        out = np.zeros(x.shape + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = x - 0.5
        return out

    with pytest.raises(CoefficientError):
        assemble_local(c, indefinite, 1)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_linear_trace_reproduced(k):
    m = generate_uniform_triangular(2)
    ls = assemble_local(m.cell(3), identity, k)
    lam = local_trace(m, lambda x, y: x, k, cell=3)
    u, s = solve_local_lambda(ls, lam)
    pts = m.cell(3).vertices * 0.8 + 0.2 * m.cell(3).star_point
    uv, sv = fields_at(ls, u, s, pts)
    assert np.abs(uv - pts[:, 0]).max() < 1e-10
    assert np.abs(sv - [1.0, 0.0]).max() < 1e-10


def test_constant_trace_reproduced():
    m = pentagon()
    ls = assemble_local(m.cell(0), weighted, 1)
    lam = np.ones((1, ls.n_trace))
    u, s = solve_local_lambda(ls, lam)
    uv, sv = fields_at(ls, u, s, m.points)
    assert np.abs(uv - 1).max() < 1e-10 and np.abs(sv).max() < 1e-10


def test_local_lambda_against_dense_oracle():
    m = unit_square()
    g = lambda x, y: x**2  # noqa: E731
    k = 0
    u_or, s_or, trace, _ = monolithic_solve(m, k, "hdg", lambda x, y: 0 * x, g)
    ls = assemble_local(m.cell(0), identity, k)
    lam = trace_on_cells_from_nodal(m, trace)
    u, s = solve_local_lambda(ls, lam)
    pts = np.array([[0.1, 0.2], [0.7, 0.4], [0.5, 0.9]])
    uv, sv = fields_at(ls, u, s, pts)
    assert np.allclose(uv, u_or(0, pts[:, 0], pts[:, 1]), atol=1e-12)
    assert np.allclose(sv, s_or(0, pts[:, 0], pts[:, 1]), atol=1e-12)


def trace_on_cells_from_nodal(mesh, nodal):
    from edgsolve.projections import TraceField

    tf = TraceField(nodal.shape[1] - 2, nodal, np.ones(len(nodal), bool), False)
    return trace_on_cells(tf, mesh, [0])


def test_local_load_against_dense_oracle():
    m = unit_square()
    k = 0
    u_or, s_or, _, _ = monolithic_solve(m, k, "hdg", lambda x, y: 1 + 0 * x, lambda x, y: 0 * x)
    ls = assemble_local(m.cell(0), identity, k, f=lambda x, y: 1 + 0 * x)
    u, s = solve_local_f(ls, ls.F)
    pts = np.array([[0.1, 0.2], [0.7, 0.4], [0.5, 0.9]])
    uv, sv = fields_at(ls, u, s, pts)
    assert np.allclose(uv, u_or(0, pts[:, 0], pts[:, 1]), atol=1e-12)
    assert np.allclose(sv, s_or(0, pts[:, 0], pts[:, 1]), atol=1e-12)


def test_zero_load():
    ls = assemble_local(unit_square().cell(0), identity, 1, f=lambda x, y: 0 * x)
    u, s = solve_local_f(ls, ls.F)
    assert np.all(u == 0) and np.all(s == 0)


def test_load_linearity_and_scaling():
    c = pentagon().cell(0)
    f1 = lambda x, y: np.exp(x) * y  # noqa: E731
    f2 = lambda x, y: np.cos(3 * x * y)  # noqa: E731
    ls1 = assemble_local(c, weighted, 1, f=f1)
    ls2 = assemble_local(c, weighted, 1, f=f2)
    ls12 = assemble_local(c, weighted, 1, f=lambda x, y: f1(x, y) + f2(x, y))
    maps = factorize(ls1)
    u1, s1 = solve_local_f(ls1, ls1.F, maps)
    u2, s2 = solve_local_f(ls1, ls2.F, maps)
    u12, s12 = solve_local_f(ls1, ls12.F, maps)
    assert np.allclose(u12, u1 + u2, atol=1e-11) and np.allclose(s12, s1 + s2, atol=1e-11)
    u3, s3 = solve_local_f(ls1, 3.7 * ls1.F, maps)
    assert np.abs(u3 - 3.7 * u1).max() <= 1e-12 * np.abs(3.7 * u1).max()
    assert np.abs(s3 - 3.7 * s1).max() <= 1e-12 * np.abs(3.7 * s1).max()


def test_local_residual_retested():
    m = generate_uniform_triangular(2)
    ls = assemble_local(m.cell(1), identity, 2)
    fine = assemble_local(m.cell(1), identity, 2, cell_exactness=24, edge_npoints=12)
    lam = local_trace(m, lambda x, y: np.sin(3 * x) + y**4, 2, cell=1)
    u, s = solve_local_lambda(ls, lam)
    res = fine.saddle_matrix()[0] @ np.concatenate([s[0], u[0]])
    res -= np.concatenate([fine.C[0], fine.H[0]]) @ lam[0]
    assert np.abs(res).max() < 1e-10


def definition_route(ls, maps):
    sig, u = maps.sigma_trace, maps.u_trace
    Ut = np.swapaxes(u, -1, -2)
    return (np.swapaxes(sig, -1, -2) @ ls.A @ sig + Ut @ ls.E @ u - Ut @ ls.H
            - np.swapaxes(ls.H, -1, -2) @ u + ls.G)


@pytest.mark.parametrize("k", [0, 1, 2])
@pytest.mark.parametrize("mesh_fn", [generate_uniform_triangular, generate_uniform_quadrilateral])
def test_condense_routes_agree(k, mesh_fn):
    m = mesh_fn(2)
    for ids in m.cell_groups().values():
        ls = assemble_local_group(m, ids, weighted, k)
        blk = condense(ls)
        S_def = definition_route(ls, blk.maps)
        assert np.abs(blk.S - S_def).max() <= 1e-9 * np.abs(S_def).max()
        sym = np.abs(blk.S - np.swapaxes(blk.S, -1, -2)).max()
        assert sym <= 1e-10 * np.abs(blk.S).max()
        ev = np.linalg.eigvalsh(0.5 * (blk.S + np.swapaxes(blk.S, -1, -2)))
        assert ev.min() >= -1e-10 * np.abs(blk.S).max()
        # constants lie in the kernel
        assert np.abs(blk.S.sum(-1)).max() < 1e-10 * np.abs(blk.S).max()


def test_unit_square_single_zero_eigenvalue():
    ls = assemble_local(unit_square().cell(0), identity, 0)
    S = condense(ls).S[0]
    ev = np.linalg.eigvalsh(0.5 * (S + S.T))
    assert S.shape == (8, 8)
    assert abs(ev[0]) < 1e-12 and ev[1] > 1e-6


def test_condense_load_equals_lifting_moments():
    c = pentagon().cell(0)
    f = lambda x, y: np.cos(x) + y  # noqa: E731
    ls = assemble_local(c, weighted, 1, f=f)
    blk = condense(ls)
    # r_i = (f, u_{lambda_i})
    assert np.allclose(blk.r[0], blk.maps.u_trace[0].T @ ls.F[0], atol=1e-12)


def test_singular_local_matrix_detected():
    ls = assemble_local(unit_square().cell(0), identity, 0)
    bad = dataclasses.replace(ls, D=np.zeros_like(ls.D), E=np.zeros_like(ls.E))
    with pytest.raises(LocalSolveError, match="cell 0"):
        factorize(bad)


@given(st.floats(0.2, 5.0), st.floats(-0.9, 0.9), st.integers(0, 2))
def test_polynomial_recovery_constant_tensor(scale, off, k):
    from edgsolve.problems import polynomial_problem

    cmat = scale * np.array([[1.0, off], [off, 1.0]])
    coeffs = np.zeros((k + 2, k + 2))
    coeffs[1, 0] = 1.0
    coeffs[k + 1, 0] = coeffs[k + 1, 0] + 1.0
    coeffs[0, k + 1] = -0.7
    coeffs[1, k] = coeffs[1, k] + 0.4
    prob = polynomial_problem(coeffs, c=cmat)
    m = pentagon()
    ls = assemble_local(m.cell(0), prob.c, k, f=prob.f)
    lam = local_trace(m, prob.u, k)
    maps = factorize(ls)
    ul, sl = solve_local_lambda(ls, lam, maps)
    uf, sf = solve_local_f(ls, ls.F, maps)
    pts = 0.5 * m.points + 0.5 * m.star_points[0]
    uv, sv = fields_at(ls, ul + uf, sl + sf, pts)
    x, y = pts[:, 0], pts[:, 1]
    assert np.abs(uv - prob.u(x, y)).max() < 1e-10
    assert np.abs(sv - np.stack(prob.sigma(x, y), -1)).max() < 1e-10
