import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cdkrylov import ConjugateDirectionSolver
from cdkrylov.exceptions import DimensionError, SpecError
from cdkrylov.linalg import TestMatrixSpec, generate_test_matrix
from cdkrylov.solvers import Status


@pytest.fixture
def A():
    return generate_test_matrix(TestMatrixSpec("random-spd", 15, 100.0, 3))


def test_fit_with_rhs(A):
    b = np.ones(15)
    est = ConjugateDirectionSolver(gamma="const:1").fit(A, b)
    assert est.status_ is Status.CONVERGED and est.n_iter_ > 0
    assert np.linalg.norm(A.apply(est.solution_) - b) <= 1e-10 * np.linalg.norm(b) * (1 + 1e-3)


def test_predict_many(A):
    B = np.random.default_rng(0).standard_normal((3, 15))
    est = ConjugateDirectionSolver(method="cg").fit(A)
    Y = est.predict(B)
    assert Y.shape == (3, 15)
    np.testing.assert_allclose(Y, np.linalg.solve(A.to_dense(), B.T).T, rtol=1e-7, atol=1e-9)
    assert est.score(B) > -1e-9
    np.testing.assert_allclose(est.predict(B[0]), Y[0])


def test_preconditioner_string(A):
    est = ConjugateDirectionSolver(preconditioner="jacobi").fit(A, np.ones(15))
    assert est.preconditioner_ is not None and est.status_ is Status.CONVERGED
    with pytest.raises(SpecError):
        ConjugateDirectionSolver(preconditioner=3).fit(A)


def test_errors(A):
    with pytest.raises(NotFittedError):
        ConjugateDirectionSolver().predict(np.ones(15))
    with pytest.raises(DimensionError):
        ConjugateDirectionSolver().fit(A).predict(np.ones((2, 4)))


def test_clone_and_params():
    est = ConjugateDirectionSolver(method="hybrid", gamma="const:1", cg_steps=(2,))
    params = clone(est).get_params()
    assert params["method"] == "hybrid" and params["cg_steps"] == (2,)
