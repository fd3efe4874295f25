import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from cdkrylov.exceptions import DimensionError, EstimateError, ParseError, SpecError
from cdkrylov.linalg import (
    SymmetricOperator,
    TestMatrixSpec,
    apply_operator,
    condition_number,
    diagonal_operator,
    generate_test_matrix,
    read_matrix_market,
    scale_symmetric,
    spectrum_bounds,
    write_matrix_market,
)


def laplacian(n):
    return generate_test_matrix(TestMatrixSpec("laplacian1d", n))


def test_apply_identity_and_diagonal():
    np.testing.assert_array_equal(apply_operator(SymmetricOperator.from_dense(np.eye(3)), [1, 2, 3]), [1, 2, 3])
    np.testing.assert_array_equal(apply_operator(diagonal_operator([1, 2, 3]), np.ones(3)), [1, 2, 3])


def test_apply_laplacian():
    np.testing.assert_array_equal(apply_operator(laplacian(3), np.ones(3)), [1, 0, 1])


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_operator(laplacian(3), np.ones(4))


def test_from_dense_rejects_asymmetric():
    with pytest.raises(SpecError):
        SymmetricOperator.from_dense([[1.0, 2.0], [0.0, 1.0]])
    A = SymmetricOperator.from_dense([[1.0, 2.0], [0.0, 1.0]], symmetrize=True)
    np.testing.assert_array_equal(A.to_dense(), [[1, 1], [1, 1]])


def test_callback_operator():
    A = SymmetricOperator.from_callback(lambda v: 2.0 * v, 4)
    np.testing.assert_array_equal(A @ np.ones(4), 2 * np.ones(4))
    assert not A.is_explicit
    np.testing.assert_array_equal(A.to_dense(), 2 * np.eye(4))


def test_sparse_input_keeps_upper_triangle():
    M = sp.csr_matrix(np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 2.0], [0.0, 2.0, 5.0]]))
    A = SymmetricOperator.from_sparse(M)
    np.testing.assert_array_equal(A.to_dense(), M.toarray())
    rows, cols, vals = A.upper_entries()
    assert list(zip(rows.tolist(), cols.tolist(), vals.tolist())) == [
        (0, 0, 4.0), (0, 1, 1.0), (1, 1, 3.0), (1, 2, 2.0), (2, 2, 5.0)]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**16))
def test_application_is_symmetric(n, seed):
    A = generate_test_matrix(TestMatrixSpec("random-spd", n, 50.0, seed))
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal(n), rng.standard_normal(n)
    fro = np.linalg.norm(A.to_dense())
    assert abs(u @ A.apply(v) - v @ A.apply(u)) <= 1e-14 * np.linalg.norm(u) * np.linalg.norm(v) * fro


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12))
def test_sparse_application_symmetric(n):
    A = laplacian(n)
    rng = np.random.default_rng(n)
    u, v = rng.standard_normal(n), rng.standard_normal(n)
    assert abs(u @ A.apply(v) - v @ A.apply(u)) <= 1e-14 * np.linalg.norm(u) * np.linalg.norm(v) * 3 * n


def write(tmp_path, text, name="m.mtx"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_read_lower_triangle(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 2\n")
    np.testing.assert_array_equal(read_matrix_market(path).to_dense(), [[2, 1], [1, 2]])


def test_read_array_format(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix array real symmetric\n2 2\n2\n1\n3\n")
    np.testing.assert_array_equal(read_matrix_market(path).to_dense(), [[2, 1], [1, 3]])


def test_read_general_rejected(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n")
    with pytest.raises(ParseError, match="line 1"):
        read_matrix_market(path)


@pytest.mark.parametrize("body,line", [
    ("2 2 1\n3 1 1\n", 3),
    ("2 2 2\n1 1 1\n1 1 2\n", 4),
    ("2 2 1\n1 x 1\n", 3),
    ("2 2 2\n1 1 1\n", None),
])
def test_read_errors_carry_line(tmp_path, body, line):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n" + body)
    with pytest.raises(ParseError) as info:
        read_matrix_market(path)
    if line is not None:
        assert info.value.line == line


def test_round_trip_random_spd(tmp_path):
    A = generate_test_matrix(TestMatrixSpec("random-spd", 10, 100.0, 3))
    write_matrix_market(A, tmp_path / "a.mtx")
    B = read_matrix_market(tmp_path / "a.mtx")
    assert np.max(np.abs(A.to_dense() - B.to_dense())) <= 1e-15


def test_generators():
    np.testing.assert_array_equal(generate_test_matrix(TestMatrixSpec("diag-geom", 2, 4.0)).to_dense(), np.diag([1, 4]))
    np.testing.assert_array_equal(laplacian(3).to_dense(), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
    lin = generate_test_matrix(TestMatrixSpec("diag-linear", 4, 7.0)).diagonal()
    np.testing.assert_allclose(lin, [1, 3, 5, 7])


def test_random_spd_condition():
    w = np.linalg.eigvalsh(generate_test_matrix(TestMatrixSpec("random-spd", 20, 1e3, 7)).to_dense())
    assert abs(w[0] / w[-1] - 1e-3) <= 1e-9


def test_generator_deterministic():
    spec = TestMatrixSpec("random-spd", 15, 10.0, 11)
    np.testing.assert_array_equal(generate_test_matrix(spec).to_dense(), generate_test_matrix(spec).to_dense())


def test_cond_below_one_rejected():
    with pytest.raises(SpecError):
        TestMatrixSpec("diag-geom", 3, 0.5)


def test_spectrum_bounds_examples():
    assert spectrum_bounds(diagonal_operator([1, 4])) == pytest.approx((1, 4))
    assert spectrum_bounds(SymmetricOperator.from_dense(np.eye(5))) == pytest.approx((1, 1))
    lo, hi = spectrum_bounds(laplacian(3))
    assert lo == pytest.approx(2 - np.sqrt(2), rel=1e-12)
    assert hi == pytest.approx(2 + np.sqrt(2), rel=1e-12)
    assert condition_number(diagonal_operator([2, 8])) == pytest.approx(4)


def test_spectrum_bounds_iterative():
    A = laplacian(60)
    lo, hi = spectrum_bounds(A, dense_limit=10, tol=1e-10, max_iter=20000)
    w = np.linalg.eigvalsh(A.to_dense())
    assert hi == pytest.approx(w[-1], rel=1e-6)
    assert lo == pytest.approx(w[0], rel=1e-3)


def test_spectrum_bounds_estimate_error_has_partial():
    with pytest.raises(EstimateError) as info:
        spectrum_bounds(laplacian(200), dense_limit=10, tol=1e-14, max_iter=3)
    assert info.value.partial is not None


def test_scale_symmetric():
    A = laplacian(3)
    s = np.array([1.0, 10.0, 100.0])
    np.testing.assert_allclose(scale_symmetric(A, s).to_dense(), np.diag(s) @ A.to_dense() @ np.diag(s))
