import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cdkrylov.cli import (
    EXIT_BREAKDOWN,
    EXIT_CHECK_FAILED,
    EXIT_IO,
    EXIT_MAX_ITERS,
    EXIT_NOT_FULL_RANK,
    EXIT_OK,
    EXIT_USAGE,
    UsageError,
    load_rhs,
    main,
    parse_method_spec,
)
from cdkrylov.linalg import SymmetricOperator, diagonal_operator, read_matrix_market, write_matrix_market


@pytest.fixture
def mtx(tmp_path):
    def make(A, name="a.mtx"):
        path = tmp_path / name
        if not isinstance(A, SymmetricOperator):
            A = SymmetricOperator.from_dense(np.asarray(A, dtype=float))
        write_matrix_market(A, path)
        return str(path)
    return make


def read_vector(path):
    return np.array([float(line) for line in open(path)])


def test_generate_laplacian(tmp_path):
    out = tmp_path / "lap.mtx"
    assert main(["generate", "--kind", "laplacian1d", "--n", "3", "--out", str(out)]) == EXIT_OK
    body = [ln for ln in out.read_text().splitlines() if not ln.startswith("%")]
    assert body[0].split() == ["3", "3", "5"]


def test_generate_diag_geom(tmp_path):
    out = tmp_path / "d.mtx"
    main(["generate", "--kind", "diag-geom", "--n", "2", "--cond", "4", "--out", str(out)])
    np.testing.assert_array_equal(read_matrix_market(out).to_dense(), np.diag([1, 4]))


def test_generate_deterministic(tmp_path):
    args = ["generate", "--kind", "random-spd", "--n", "20", "--cond", "1e3", "--seed", "7", "--out"]
    main(args + [str(tmp_path / "x.mtx")])
    main(args + [str(tmp_path / "y.mtx")])
    assert (tmp_path / "x.mtx").read_bytes() == (tmp_path / "y.mtx").read_bytes()


def test_generate_io_error(tmp_path):
    assert main(["generate", "--kind", "laplacian1d", "--n", "3", "--out", str(tmp_path / "no" / "x.mtx")]) == EXIT_IO


def test_solve_identity_cg(mtx, tmp_path):
    out = tmp_path / "y.txt"
    code = main(["solve", "--matrix", mtx(np.eye(3)), "--rhs", "ones", "--method", "cg", "--out", str(out)])
    assert code == EXIT_OK
    np.testing.assert_array_equal(read_vector(out), [1, 1, 1])


def test_solve_bad_gamma(mtx, capsys):
    assert main(["solve", "--matrix", mtx(np.eye(3)), "--method", "cd", "--gamma", "const:0"]) == EXIT_USAGE
    assert "gamma" in capsys.readouterr().err


def test_solve_unknown_flag(mtx):
    assert main(["solve", "--matrix", mtx(np.eye(3)), "--bogus"]) == EXIT_USAGE


def test_solve_missing_file(tmp_path, capsys):
    assert main(["solve", "--matrix", str(tmp_path / "missing.mtx")]) == EXIT_IO
    assert capsys.readouterr().err


def test_solve_laplacian_residual(tmp_path):
    lap = tmp_path / "lap100.mtx"
    main(["generate", "--kind", "laplacian1d", "--n", "100", "--out", str(lap)])
    out = tmp_path / "y.txt"
    trace = tmp_path / "t.json"
    code = main(["solve", "--matrix", str(lap), "--rhs", "ones", "--method", "cd", "--gamma", "neg-a",
                 "--tol", "1e-10", "--out", str(out), "--trace-out", str(trace)])
    assert code == EXIT_OK
    A = read_matrix_market(lap)
    b = np.ones(100)
    assert np.linalg.norm(b - A.apply(read_vector(out))) <= 1e-10 * np.linalg.norm(b)
    records = json.loads(trace.read_text())
    assert records[0]["k"] == 0 and "gamma" in records[0]


def test_solve_trace_csv_and_exit_codes(mtx, tmp_path):
    path = mtx(np.diag([1.0, 2.0, 3.0, 4.0]))
    trace = tmp_path / "t.csv"
    assert main(["solve", "--matrix", path, "--max-iters", "1", "--out", str(tmp_path / "y"),
                 "--trace-out", str(trace)]) == EXIT_MAX_ITERS
    assert next(csv.reader(open(trace)))[0] == "k"
    indef = mtx(np.diag([1.0, -1.0]), "indef.mtx")
    assert main(["solve", "--matrix", indef, "--rhs", str(_vec(tmp_path, [1.0, 2.0])),
                 "--out", str(tmp_path / "y")]) == EXIT_BREAKDOWN


def _vec(tmp_path, values):
    path = tmp_path / "b.txt"
    path.write_text("\n".join(map(repr, values)) + "\n")
    return path


def test_solve_hybrid_scaled_precond(mtx, tmp_path):
    path = mtx(np.diag([1.0, 2.0, 3.0, 4.0]))
    rho = tmp_path / "rho.txt"
    rho.write_text("2 1 0.5\n")
    for extra in (["--method", "hybrid", "--gamma", "const:1", "--cg-steps", "2"],
                  ["--method", "scaled-cg", "--rho", str(rho)],
                  ["--method", "cd", "--precond", "jacobi"]):
        out = tmp_path / "y.txt"
        assert main(["solve", "--matrix", path, "--out", str(out)] + extra) == EXIT_OK
        np.testing.assert_allclose(read_vector(out), [1, 1 / 2, 1 / 3, 1 / 4], rtol=1e-9)


def test_parse_method_spec():
    assert parse_method_spec("cg").method == "cg"
    spec = parse_method_spec("cd:const:1")
    assert spec.method == "cd" and spec.gamma.name == "const:1.0"
    assert parse_method_spec("cd-red").method == "cd-red"
    spec = parse_method_spec("hybrid:2,3:a")
    assert spec.cg_steps == {2, 3} and spec.gamma.name == "a"
    with pytest.raises(UsageError):
        parse_method_spec("qr")


def test_load_rhs(tmp_path):
    np.testing.assert_array_equal(load_rhs("ones", 3), np.ones(3))
    np.testing.assert_array_equal(load_rhs("random:4", 5), load_rhs("random:4", 5))
    np.testing.assert_array_equal(load_rhs(str(_vec(tmp_path, [1.0, 2.0])), 2), [1, 2])


def test_compare_cg_vs_minus_a(tmp_path):
    lap = tmp_path / "lap.mtx"
    main(["generate", "--kind", "laplacian1d", "--n", "10", "--out", str(lap)])
    out = tmp_path / "m.csv"
    assert main(["compare", "--matrix", str(lap), "--methods", "cg", "cd:neg-a", "--metrics-out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(open(out)))
    assert list(rows[0]) == ["method", "k", "rnorm", "f_energy", "max_conj_loss_row"]
    cg = [float(r["rnorm"]) for r in rows if r["method"] == "cg"]
    cd = [float(r["rnorm"]) for r in rows if r["method"] == "cd:neg-a"]
    assert len(cg) == len(cd)
    assert max(abs(x - y) for x, y in zip(cg, cd)) <= 1e-10 * np.sqrt(10)


def test_compare_needs_two_methods(mtx):
    assert main(["compare", "--matrix", mtx(np.eye(2)), "--methods", "cg"]) == EXIT_USAGE


def test_diagnose_conjugacy(mtx, tmp_path):
    out = tmp_path / "r.json"
    code = main(["diagnose", "--matrix", mtx(np.diag([1.0, 2.0, 5.0])), "--checks", "conjugacy",
                 "--report-out", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["checks"]["conjugacy"]["pass"] is True
    assert "tn_directions" in report


def test_diagnose_all_checks(mtx, tmp_path):
    out = tmp_path / "r.json"
    code = main(["diagnose", "--matrix", mtx(np.diag([1.0, 2.0, 5.0])), "--gamma", "neg-a", "--report-out", str(out)])
    report = json.loads(out.read_text())
    assert len(report["checks"]) == 10
    passed = all(c["pass"] for c in report["checks"].values() if c.get("asserted", True))
    assert code == (EXIT_OK if passed else EXIT_CHECK_FAILED)
    assert code == EXIT_OK


def test_diagnose_determinant_not_full_rank(mtx, tmp_path):
    code = main(["diagnose", "--matrix", mtx(np.diag([1.0, 1.0, 2.0])), "--checks", "determinant",
                 "--report-out", str(tmp_path / "r.json")])
    assert code == EXIT_NOT_FULL_RANK
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["checks"]["determinant"]["error"] == "NotFullRankTrajectory"


def test_diagnose_failed_check_exit(mtx, tmp_path):
    A = diagonal_operator(np.geomspace(1.0, 1e6, 40))
    code = main(["diagnose", "--matrix", mtx(A), "--gamma", "const:1", "--checks", "conjugacy",
                 "--report-out", str(tmp_path / "r.json")])
    assert code == EXIT_CHECK_FAILED


def test_diagnose_unknown_check(mtx):
    assert main(["diagnose", "--matrix", mtx(np.eye(2)), "--checks", "nonsense"]) == EXIT_USAGE


def test_module_entry_point(tmp_path):
    out = tmp_path / "l.mtx"
    proc = subprocess.run([sys.executable, "-m", "cdkrylov", "generate", "--kind", "laplacian1d", "--n", "4",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
