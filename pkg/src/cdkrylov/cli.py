"""Command-line interface: ``generate``, ``solve``, ``compare`` and ``diagnose``.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 iteration limit
reached, 4 breakdown, 5 trajectory too short for the determinant or
inverse check, 6 an asserted diagnostic failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diagnostics as dg
from .exceptions import (
    DimensionError, IncompleteBasisError, KrylovError, NotFullRankTrajectory, ParseError, SpecError,
)
from .gamma import parse_gamma
from .linalg import (
    TestMatrixSpec, generate_test_matrix, read_matrix_market, spectrum_bounds, write_matrix_market,
)
from .precond import parse_preconditioner
from .solvers import METHODS, SolveConfig, Status, solve
from .tn_directions import assemble_directions, model_values, tn_report, truncation_test

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_MAX_ITERS, EXIT_BREAKDOWN, EXIT_NOT_FULL_RANK, EXIT_CHECK_FAILED = range(7)
STATUS_EXIT = {Status.CONVERGED: EXIT_OK, Status.MAX_ITERS: EXIT_MAX_ITERS, Status.BREAKDOWN: EXIT_BREAKDOWN}
CHECKS = ("conjugacy", "orthogonality", "error-decrease", "manifold", "determinant", "inverse",
          "factorization", "epsilon-propagation", "bounds", "chebyshev")
KINDS = ("laplacian1d", "diag-geom", "diag-linear", "random-spd")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class MethodSpec:
    """A parsed ``--methods`` entry: solver method, gamma strategy, label."""

    label: str
    method: str
    gamma: object = "neg-a"
    cg_steps: frozenset = frozenset()
    rho: Optional[tuple] = None


def parse_method_spec(text: str) -> MethodSpec:
    """``cg | cd-red | cd:<gamma> | cd-step0b:<gamma> | hybrid:<i,j,..>:<gamma> | scaled-cg:<rho-file>``."""
    head, _, rest = text.partition(":")
    try:
        if head in ("cg", "cd-red") and not rest:
            return MethodSpec(text, head)
        if head in ("cd", "cd-step0b") and rest:
            return MethodSpec(text, head, parse_gamma(rest))
        if head == "hybrid" and rest:
            steps, _, g = rest.partition(":")
            idx = frozenset(int(s) for s in steps.split(",") if s)
            return MethodSpec(text, head, parse_gamma(g or "neg-a"), idx)
        if head == "scaled-cg" and rest:
            rho = parse_gamma("scaled:" + rest).rho
            return MethodSpec(text, head, rho=rho)
    except ValueError as exc:
        raise UsageError(f"bad method spec {text!r}: {exc}") from None
    raise UsageError(f"bad method spec {text!r}")


def load_rhs(spec: str, n: int) -> np.ndarray:
    if spec == "ones":
        return np.ones(n)
    if spec.startswith("random:"):
        try:
            seed = int(spec[7:])
        except ValueError:
            raise UsageError(f"bad rhs seed in {spec!r}") from None
        return np.random.default_rng(seed).standard_normal(n)
    b = np.loadtxt(spec, dtype=np.float64, ndmin=1)
    if b.shape != (n,):
        raise DimensionError(f"rhs file has {b.size} entries, matrix dimension is {n}")
    return b


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else repr(float(x))


def _config_from_args(args, spec: Optional[MethodSpec] = None, **extra) -> SolveConfig:
    spec = spec or MethodSpec(args.method, args.method, args.gamma, frozenset(getattr(args, "cg_steps", ()) or ()))
    return SolveConfig(method=spec.method, gamma=spec.gamma, tol_rel=args.tol, max_iters=args.max_iters,
                       cg_steps=spec.cg_steps, **extra)


def _rho_from_args(args, spec=None):
    if spec is not None and spec.rho is not None:
        return spec.rho
    if getattr(args, "rho", None):
        return parse_gamma("scaled:" + args.rho).rho
    return None


# ---------------------------------------------------------------------------
# Commands


def cmd_generate(args) -> int:
    spec = TestMatrixSpec(args.kind, args.n, args.cond, args.seed)
    A = generate_test_matrix(spec)
    write_matrix_market(A, args.out, comment=f"kind={args.kind} n={args.n} cond={args.cond!r} seed={args.seed}")
    return EXIT_OK


def cmd_solve(args) -> int:
    A = read_matrix_market(args.matrix)
    b = load_rhs(args.rhs, A.n)
    config = _config_from_args(args)
    P = parse_preconditioner(args.precond, A)
    result = solve(A, b, config=config, preconditioner=P, rho=_rho_from_args(args))
    _write_text(args.out, "".join(repr(float(v)) + "\n" for v in result.y))
    if args.trace_out:
        text = result.trace.to_csv() if args.trace_out.endswith(".csv") else result.trace.to_json(indent=1) + "\n"
        _write_text(args.trace_out, text)
    print(f"{result.method}: {result.status.value} after {result.iters} iterations, "
          f"||r|| = {result.rnorm:.3e}", file=sys.stderr)
    return STATUS_EXIT[result.status]


def conj_loss_column(A, bundle: dg.BasisBundle, row=1, start=3) -> list:
    """Running max over ``start <= j <= k`` of ``|p_row^T A p_j|`` in correlation form."""
    if bundle.h <= row:
        return [None] * bundle.R.shape[1]
    N = dg.conjugacy_matrix(A, bundle).normalized
    out, best = [], None
    for k in range(bundle.R.shape[1]):
        if start <= k < bundle.h:
            v = abs(N[row, k])
            best = v if best is None else max(best, v)
        out.append(best if k >= start else None)
    return out


def cmd_compare(args) -> int:
    if len(args.methods) < 2:
        raise UsageError("compare needs at least two method specs")
    specs = [parse_method_spec(m) for m in args.methods]
    A = read_matrix_market(args.matrix)
    b = load_rhs(args.rhs, A.n)
    y_star = dg.exact_solution(A, b) if A.n <= dg.DENSE_LIMIT else None
    rows = []
    worst = EXIT_OK
    for spec in specs:
        res = solve(A, b, config=_config_from_args(args, spec, store_basis=True), rho=_rho_from_args(args, spec))
        bundle = dg.BasisBundle.from_result(res)
        f = dg.error_functions(A, y_star)[0] if y_star is not None else None
        try:
            loss = conj_loss_column(A, bundle)
        except KrylovError:
            loss = [None] * bundle.R.shape[1]
        for k, rec in enumerate(res.trace.records):
            energy = f(bundle.Y[:, k]) if f is not None else None
            rows.append([spec.label, k, _fmt(rec.rnorm), _fmt(energy), _fmt(loss[k])])
        worst = max(worst, STATUS_EXIT[res.status])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "k", "rnorm", "f_energy", "max_conj_loss_row"])
    w.writerows(rows)
    _write_text(args.metrics_out, buf.getvalue())
    return worst


def _chebyshev_asserted(config: SolveConfig) -> bool:
    return config.method == "cg" or (config.method == "cd" and config.gamma.name == "neg-a")


def run_diagnostics(A, b, config: SolveConfig, checks, preconditioner=None, rho=None):
    """Run the selected checks; returns ``(report_dict, exit_code)``."""
    result = solve(A, b, config=config.replace(store_basis=True), preconditioner=preconditioner, rho=rho)
    bundle = dg.BasisBundle.from_result(result)
    reports = {}
    failed = short = False
    y_star = dg.exact_solution(A, b)
    full = None

    def full_bundle():
        nonlocal full
        if full is None:
            cfg = config.replace(store_basis=True, tol_rel=1e-14, max_iters=max(A.n, config.max_iters or 0))
            full = dg.BasisBundle.from_result(solve(A, b, config=cfg, preconditioner=preconditioner, rho=rho))
        return full

    for name in checks:
        try:
            if name == "conjugacy":
                c = dg.conjugacy_matrix(A, bundle)
                rep = dg._report("conjugacy", [c.max_offdiag], 1e-8, [{"band_max": c.band_max()}])
            elif name == "orthogonality":
                o = dg.orthogonality_matrix(bundle)
                rep = dg._report("orthogonality", [o.max_offdiag, o.max_rp], 1e-8,
                                 [{"max_offdiag": o.max_offdiag, "max_rp": o.max_rp, "skipped": list(o.skipped)}])
            elif name == "error-decrease":
                rep = dg.error_decrease_check(bundle, A, y_star)
            elif name == "manifold":
                parts = [dg.manifold_optimality_check(A, bundle, i, samples=20, seed=i) for i in range(1, bundle.h)]
                rep = dg._report("manifold_optimality", [p.max_violation for p in parts], 1e-12,
                                 [{"i": i + 1, "max_violation": p.max_violation} for i, p in enumerate(parts)])
            elif name == "determinant":
                d = dg.determinant_via_cd(full_bundle())
                exact = float(np.linalg.det(A.to_dense()))
                rel = abs(d.det - exact) / abs(exact)
                rep = dg._report("determinant", [rel], 1e-6,
                                 [{"det": d.det, "dense": exact, "cross_check_rel": d.cross_check_rel}])
            elif name == "inverse":
                inv = dg.inverse_approximation(A, full_bundle())
                rep = dg._report("inverse", [inv.rel_fro_error], 1e-8, [{"r0_error": inv.r0_error}])
            elif name == "factorization":
                rep = dg.factorization_check(bundle)
            elif name == "epsilon-propagation":
                rep = dg.conjugacy_propagation_check(A, bundle)
            elif name == "bounds":
                lo, hi = spectrum_bounds(A)
                rep = dg.coefficient_bounds(bundle, lo, hi)
            elif name == "chebyshev":
                lo, hi = spectrum_bounds(A)
                e = dg.energy_errors(A, bundle.Y, y_star)
                rep = dg.chebyshev_bound_check(e, hi / lo, asserted=_chebyshev_asserted(config))
            else:
                raise UsageError(f"unknown check {name!r}")
            reports[name] = rep.to_dict()
            failed |= rep.asserted and not rep.passed
        except (NotFullRankTrajectory, IncompleteBasisError) as exc:
            reports[name] = {"check_name": name, "error": type(exc).__name__, "message": str(exc), "pass": False}
            short = True
    code = EXIT_NOT_FULL_RANK if short else EXIT_CHECK_FAILED if failed else EXIT_OK
    summary = {"method": result.method, "status": result.status.value, "iters": result.iters, "checks": reports}
    if result.method in ("cd", "cg", "hybrid", "cd-step0b") and bundle.h >= 1:
        dirs = assemble_directions(bundle)
        q = model_values(A, -b, 0.0, bundle)
        summary["tn_directions"] = tn_report(dirs, truncation_test(q, 0.5))
    return summary, code


def cmd_diagnose(args) -> int:
    checks = [c for part in (args.checks or []) for c in part.split(",") if c] or list(CHECKS)
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    A = read_matrix_market(args.matrix)
    b = load_rhs(args.rhs, A.n)
    if A.n > dg.DENSE_LIMIT:
        raise UsageError(f"diagnose needs n <= {dg.DENSE_LIMIT}")
    P = parse_preconditioner(args.precond, A)
    summary, code = run_diagnostics(A, b, _config_from_args(args), checks, P, _rho_from_args(args))
    _write_text(args.report_out, json.dumps(summary, indent=1) + "\n")
    return code


# ---------------------------------------------------------------------------
# Parser


def _add_solver_flags(p, with_method=True):
    p.add_argument("--matrix", required=True, help="Matrix Market file (symmetric)")
    p.add_argument("--rhs", default="ones", help="ones | random:<seed> | path to a vector file")
    if with_method:
        p.add_argument("--method", default="cd", choices=METHODS)
        p.add_argument("--gamma", default="neg-a", help="gamma strategy, e.g. const:1, a, neg-a, red")
        p.add_argument("--rho", help="file of scaling factors for --method scaled-cg")
        p.add_argument("--cg-steps", type=_int_list, default=(), help="comma-separated CG steps for --method hybrid")
        p.add_argument("--precond", default="none", help="none | jacobi | file:<path>")
    p.add_argument("--tol", type=float, default=1e-10, help="relative residual tolerance")
    p.add_argument("--max-iters", type=int, default=None)


def _int_list(text):
    try:
        return tuple(int(s) for s in text.split(",") if s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdkrylov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a test matrix in Matrix Market format")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cond", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve A y = b")
    _add_solver_flags(p)
    p.add_argument("--out", help="solution file, one value per line (default: stdout)")
    p.add_argument("--trace-out", help="trace file; .csv for CSV, JSON otherwise")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="per-iteration metrics for several methods")
    _add_solver_flags(p, with_method=False)
    p.add_argument("--methods", nargs="+", required=True, help="e.g. cg cd:const:1 cd:a cd:neg-a")
    p.add_argument("--metrics-out", help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("diagnose", help="run diagnostic certifications on one solve")
    _add_solver_flags(p)
    p.add_argument("--checks", nargs="*", help=f"subset of: {', '.join(CHECKS)} (default: all)")
    p.add_argument("--report-out", help="JSON report file (default: stdout)")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SpecError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotFullRankTrajectory, IncompleteBasisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FULL_RANK


if __name__ == "__main__":
    sys.exit(main())
