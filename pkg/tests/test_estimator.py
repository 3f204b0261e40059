import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from edgsolve.estimator import EDGSolver, locate_points
from edgsolve.mesh import generate_uniform_quadrilateral, generate_uniform_triangular
from edgsolve.problems import polynomial_problem, sine_product_problem
from test_mesh import pentagon_mesh


def test_params_and_clone():
    est = EDGSolver(method="hdg", k=2, penalty="diameter")
    assert est.get_params()["k"] == 2
    c = clone(est)
    assert c.get_params() == est.get_params() and c is not est


def test_locate_points():
    m = pentagon_mesh()
    pts = np.array([m.star_points[t] for t in range(m.n_cells)] + [[2.0, 2.0]])
    cells = locate_points(m, pts)
    assert cells.tolist() == list(range(m.n_cells)) + [-1]
    # a vertex shared by several cells goes to the lowest id
    assert locate_points(m, [[0.5, 0.5]])[0] == 0


def test_predict_reproduces_polynomial():
    prob = polynomial_problem([[1.0, 0.5, -1.0], [2.0, 0.3, 0.0], [0.7, 0.0, 0.0]])
    est = EDGSolver(k=1).fit(generate_uniform_triangular(3), prob)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, (40, 2))
    assert np.abs(est.predict(pts) - prob.u(pts[:, 0], pts[:, 1])).max() < 1e-10
    flux = est.predict_flux(pts)
    assert flux.shape == (40, 2)
    assert np.abs(flux - np.stack(prob.sigma(pts[:, 0], pts[:, 1]), -1)).max() < 1e-9


def test_predict_sine_product():
    prob = sine_product_problem()
    est = EDGSolver(method="edg", k=2).fit(generate_uniform_quadrilateral(8), prob)
    assert est.n_dofs_ == 273
    pts = np.array([[0.5, 0.5], [0.25, 0.8]])
    assert np.abs(est.predict(pts) - prob.u(pts[:, 0], pts[:, 1])).max() < 1e-3


def test_predict_errors():
    with pytest.raises(NotFittedError):
        EDGSolver().predict([[0.5, 0.5]])
    est = EDGSolver(k=0).fit(generate_uniform_triangular(2), sine_product_problem())
    with pytest.raises(ValueError, match="outside"):
        est.predict([[1.5, 0.5]])
