import numpy as np
import pytest

from cdkrylov.exceptions import DimensionError, SpecError
from cdkrylov.linalg import (
    SymmetricOperator,
    TestMatrixSpec,
    diagonal_operator,
    generate_test_matrix,
    scale_symmetric,
    write_matrix_market,
)
from cdkrylov.precond import (
    CustomOperator,
    Identity,
    Jacobi,
    Preconditioner,
    apply_preconditioner,
    cd_m_solve,
    jacobi_from_operator,
    parse_preconditioner,
    preconditioned_spectrum_bounds,
)
from cdkrylov.solvers import SolveConfig, cd_solve, solve


class CountingJacobi(Jacobi):
    def __init__(self, d):
        super().__init__(d)
        self.count = 0

    def apply(self, v):
        self.count += 1
        return super().apply(v)


def test_apply_examples():
    np.testing.assert_array_equal(apply_preconditioner(Identity(), [1.0, 2.0]), [1, 2])
    np.testing.assert_array_equal(apply_preconditioner(Jacobi([2.0, 4.0]), [2.0, 4.0]), [1, 1])


def test_custom_matches_jacobi():
    C = CustomOperator.from_matrix(np.linalg.inv(np.diag([1.0, 2.0])))
    v = np.random.default_rng(0).standard_normal(2)
    assert np.max(np.abs(C.apply(v) - Jacobi([1.0, 2.0]).apply(v))) <= 1e-15


def test_invalid_preconditioners():
    with pytest.raises(SpecError):
        Jacobi([1.0, 0.0])
    with pytest.raises(SpecError):
        CustomOperator(lambda v: -v, 3)
    with pytest.raises(DimensionError):
        Jacobi([1.0, 2.0]).apply(np.ones(3))


def test_jacobi_from_operator():
    J = jacobi_from_operator(diagonal_operator([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(J.d, [1, 2, 3])
    lo, hi = preconditioned_spectrum_bounds(diagonal_operator([1.0, 2.0, 3.0]), J)
    assert hi / lo == pytest.approx(1.0)
    L = generate_test_matrix(TestMatrixSpec("laplacian1d", 3))
    np.testing.assert_array_equal(jacobi_from_operator(L).d, [2, 2, 2])
    R = generate_test_matrix(TestMatrixSpec("random-spd", 10, 100.0, 2))
    np.testing.assert_array_equal(jacobi_from_operator(R).d, np.diag(R.to_dense()))


def test_jacobi_from_operator_rejects_bad_diagonal():
    with pytest.raises(SpecError, match="entry 1"):
        jacobi_from_operator(SymmetricOperator.from_dense(np.array([[1.0, 0.0], [0.0, -1.0]])))


def test_parse_preconditioner(tmp_path):
    A = diagonal_operator([1.0, 2.0])
    assert parse_preconditioner("none", A) is None
    assert isinstance(parse_preconditioner("jacobi", A), Jacobi)
    write_matrix_market(diagonal_operator([1.0, 0.5]), tmp_path / "m.mtx")
    P = parse_preconditioner(f"file:{tmp_path / 'm.mtx'}", A)
    np.testing.assert_array_equal(P.apply(np.array([2.0, 2.0])), [2, 1])
    with pytest.raises(SpecError):
        parse_preconditioner("ilu", A)


def test_identity_matches_cd():
    A = generate_test_matrix(TestMatrixSpec("random-spd", 25, 100.0, 1))
    for g in ("neg-a", "const:1", "abs-a"):
        c = cd_solve(A, np.ones(25), config=SolveConfig(gamma=g))
        m = cd_m_solve(A, np.ones(25), P=Identity(), config=SolveConfig(gamma=g))
        assert c.iters == m.iters
        for f in ("a", "gamma", "sigma", "omega"):
            x, y = c.trace.column(f), m.trace.column(f)
            mask = ~np.isnan(x)
            assert np.all(np.abs(x[mask] - y[mask]) <= 1e-14 * np.maximum(1.0, np.abs(x[mask])))


def test_jacobi_diag_one_iteration():
    A = diagonal_operator([1.0, 100.0])
    r = cd_m_solve(A, np.ones(2), P=jacobi_from_operator(A))
    assert r.converged and r.iters == 1


def test_jacobi_fewer_iterations_on_scaled_matrix():
    base = generate_test_matrix(TestMatrixSpec("random-spd", 40, 1e6, 3))
    A = scale_symmetric(base, 10.0 ** np.linspace(-3, 3, 40))
    b = np.ones(40)
    cfg = SolveConfig(tol_rel=1e-8, max_iters=20000)
    plain = cd_solve(A, b, config=cfg)
    jac = cd_m_solve(A, b, P=jacobi_from_operator(A), config=cfg)
    assert jac.iters < plain.iters


def test_application_count():
    A = generate_test_matrix(TestMatrixSpec("random-spd", 30, 100.0, 4))
    P = CountingJacobi(np.diag(A.to_dense()))
    r = cd_m_solve(A, np.ones(30), P=P)
    assert P.count == r.iters + 1


def test_conjugacy_in_a_inner_product():
    A = generate_test_matrix(TestMatrixSpec("random-spd", 8, 10.0, 5))
    r = cd_m_solve(A, np.ones(8), P=jacobi_from_operator(A), config=SolveConfig(store_basis=True))
    P = np.array(r.trace.basis_P[:r.iters]).T
    G = P.T @ A.to_dense() @ P
    d = np.sqrt(np.diag(G))
    N = G / np.outer(d, d)
    np.fill_diagonal(N, 0)
    assert np.max(np.abs(N)) <= 1e-8


def test_solve_dispatch_rejects_precond_for_cg():
    with pytest.raises(SpecError):
        solve(np.eye(2), np.ones(2), config=SolveConfig(method="cg"), preconditioner=Identity())


def test_base_class_is_abstract():
    with pytest.raises(NotImplementedError):
        Preconditioner().apply(np.ones(2))
