"""Certification of the identities, bounds and error laws of the CD class.

Everything here works on a :class:`BasisBundle`, the stored directions,
residuals and iterates of a run made with ``store_basis=True``. Checks
return a :class:`CheckReport` that serializes to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from ._validation import check_operator, check_vector
from .exceptions import (
    CurvatureError,
    DimensionError,
    HistoryError,
    IncompleteBasisError,
    NotFullRankTrajectory,
    SpecError,
)
from .linalg import SymmetricOperator

DENSE_LIMIT = 2000
# Relative slack for the inequality checks; they compare rounded scalars.
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class BasisBundle:
    """Columns ``P = [p_0 .. p_{h-1}]``, ``R = [r_0 .. r_h]``, ``Y = [y_0 .. y_h]``.

    Per-step scalars are indexed like the directions and hold ``nan`` where
    the run never formed them (for instance ``gamma`` of the last direction).
    """

    P: np.ndarray
    R: np.ndarray
    Y: Optional[np.ndarray]
    a: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    pAp: np.ndarray
    rnorm: np.ndarray
    beta: np.ndarray
    method: str = "cd"

    @classmethod
    def from_result(cls, result) -> "BasisBundle":
        return cls.from_trace(result.trace, result.method)

    @classmethod
    def from_trace(cls, trace, method="cd") -> "BasisBundle":
        if trace.basis_P is None or trace.basis_R is None:
            raise SpecError("trace has no stored basis; solve with store_basis=True")
        R = np.column_stack(trace.basis_R)
        n = R.shape[0]
        P = np.column_stack(trace.basis_P) if trace.basis_P else np.zeros((n, 0))
        Y = np.column_stack(trace.iterates) if trace.iterates else None
        cols = {name: trace.column(name) for name in ("a", "gamma", "sigma", "omega", "pAp", "rnorm", "beta")}
        return cls(P=P, R=R, Y=Y, method=method, **cols)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @property
    def h(self) -> int:
        """Number of stored directions."""
        return self.P.shape[1]


@dataclass
class CheckReport:
    check_name: str
    max_violation: float
    threshold: float
    passed: bool
    per_step: list = field(default_factory=list)
    asserted: bool = True

    def to_dict(self):
        return {
            "check_name": self.check_name,
            "max_violation": _json_float(self.max_violation),
            "threshold": self.threshold,
            "pass": bool(self.passed),
            "asserted": self.asserted,
            "per_step": self.per_step,
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _json_float(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _report(name, violations, threshold, per_step, asserted=True):
    worst = max(violations, default=0.0)
    return CheckReport(name, float(worst), threshold, bool(worst <= threshold), per_step, asserted)


def _dense(A) -> np.ndarray:
    A = check_operator(A)
    if A.n > DENSE_LIMIT:
        raise SpecError(f"dense diagnostics are limited to n <= {DENSE_LIMIT}")
    return A.to_dense()


# ---------------------------------------------------------------------------
# Gram matrices


@dataclass(frozen=True)
class ConjugacyReport:
    epsilon: np.ndarray
    normalized: np.ndarray
    max_offdiag: float

    def band_max(self, offsets=(1, 2)) -> float:
        """Largest ``|eps_hat_{h,l}|`` with ``|h - l|`` in ``offsets``."""
        m = self.normalized.shape[0]
        vals = [abs(self.normalized[i, i + d]) for d in offsets for i in range(m - d)]
        return max(vals, default=0.0)


def conjugacy_matrix(A, bundle: BasisBundle) -> ConjugacyReport:
    """A-inner-product Gram matrix ``eps_{i,j} = p_i^T A p_j`` and its correlation form."""
    A = check_operator(A)
    P = bundle.P
    AP = np.column_stack([A.apply(P[:, j]) for j in range(P.shape[1])]) if P.shape[1] else P
    E = P.T @ AP
    E = (E + E.T) / 2.0
    d = np.diag(E).copy()
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise CurvatureError(f"p_{bad[0]}^T A p_{bad[0]} = {d[bad[0]]!r} is not positive")
    s = np.sqrt(d)
    N = E / np.outer(s, s)
    np.fill_diagonal(N, 1.0)
    off = np.abs(N - np.eye(len(d)))
    return ConjugacyReport(E, N, float(off.max(initial=0.0)))


@dataclass(frozen=True)
class OrthogonalityReport:
    """Normalized residual Gram matrix plus the ``r_{k+1}^T p_j`` checks.

    Rows and columns of residuals that are zero up to rounding
    (``||r_i|| <= zero_tol ||r_0||``) are ``nan`` and listed in ``skipped``. ``rp[k, j]`` is ``r_{k+1}^T p_j / (||r_{k+1}|| ||p_j||)`` for
    ``j <= k`` and ``nan`` elsewhere.
    """

    matrix: np.ndarray
    rp: np.ndarray
    skipped: tuple
    max_offdiag: float
    max_rp: float


def orthogonality_matrix(bundle: BasisBundle, zero_tol=1e-14) -> OrthogonalityReport:
    R = bundle.R
    norms = np.linalg.norm(R, axis=0)
    live = norms > zero_tol * norms[0]
    G = np.full((R.shape[1], R.shape[1]), np.nan)
    Rl = R[:, live] / norms[live]
    G[np.ix_(live, live)] = Rl.T @ Rl
    off = np.abs(G - np.eye(len(norms)))
    max_off = float(np.nanmax(off)) if live.sum() > 1 else 0.0

    h = bundle.h
    pn = np.linalg.norm(bundle.P, axis=0)
    rp = np.full((h, h), np.nan)
    for k in range(h):
        if k + 1 >= R.shape[1] or not live[k + 1]:
            continue
        for j in range(k + 1):
            rp[k, j] = R[:, k + 1] @ bundle.P[:, j] / (norms[k + 1] * pn[j])
    max_rp = float(np.nanmax(np.abs(rp))) if np.any(np.isfinite(rp)) else 0.0
    skipped = tuple(int(i) for i in np.flatnonzero(~live))
    return OrthogonalityReport(G, rp, skipped, max_off, max_rp)


# ---------------------------------------------------------------------------
# Error functions and minimization properties


def exact_solution(A, b) -> np.ndarray:
    """Dense Cholesky solve; the oracle ``y*`` for error functions."""
    M = _dense(A)
    b = check_vector(b, M.shape[0], "b")
    return scipy.linalg.solve(M, b, assume_a="pos")


def error_functions(A, target, is_rhs=False):
    """Return ``(f, g_at)`` with ``f(y) = 1/2 (y - y*)^T A (y - y*)``.

    ``g_at(y_i)`` returns ``g(y) = 1/2 (y - y_i)^T A (y - y_i)``. ``target`` is
    ``y*``, or the right-hand side when ``is_rhs`` is set.
    """
    A = check_operator(A)
    y_star = exact_solution(A, target) if is_rhs else check_vector(target, A.n, "y*")

    def quad(e):
        return 0.5 * float(e @ A.apply(e))

    def f(y):
        return quad(check_vector(y, A.n, "y") - y_star)

    def g_at(anchor):
        anchor = check_vector(anchor, A.n, "anchor")
        return lambda y: quad(check_vector(y, A.n, "y") - anchor)

    return f, g_at


def error_decrease_check(bundle: BasisBundle, A, y_star, threshold=1e-8) -> CheckReport:
    """Per-step decrease of ``f`` against ``(gamma_{i-1}/a_{i-1})^2 ||r_i||^4 / p_i^T A p_i``.

    The exact one-step decrease is half of that term (it equals
    ``(r_i^T p_i)^2 / (2 p_i^T A p_i)``), so the check compares the measured
    decrease with ``term / 2``. Violations are relative to ``f(y_0)``.
    """
    if bundle.Y is None:
        raise SpecError("bundle has no iterates")
    f, _ = error_functions(A, y_star)
    fvals = [f(bundle.Y[:, i]) for i in range(bundle.Y.shape[1])]
    scale = fvals[0] if fvals[0] > 0 else 1.0
    per_step, viol = [], []
    for i in range(1, min(bundle.h, len(fvals) - 1)):
        a_prev, g_prev = bundle.a[i - 1], bundle.gamma[i - 1]
        if a_prev == 0 or not np.isfinite(g_prev):
            per_step.append({"i": i, "skipped": "a_{i-1} = 0 or gamma_{i-1} missing"})
            continue
        term = (g_prev / a_prev) ** 2 * bundle.rnorm[i] ** 4 / bundle.pAp[i]
        decrease = fvals[i] - fvals[i + 1]
        v = abs(decrease - 0.5 * term) / scale
        viol.append(v)
        per_step.append({"i": i, "f_before": fvals[i], "f_after": fvals[i + 1], "decrease": decrease,
                         "term": term, "violation": v})
    return _report("error_decrease", viol, threshold, per_step)


def manifold_optimality_check(A, bundle: BasisBundle, i: int, samples=100, seed=0, scale=1.0,
                              threshold=1e-12) -> CheckReport:
    """Sampled check that ``(-sigma_{i-1}, -omega_{i-1})`` minimizes ``g`` on the manifold.

    With ``v(b, c) = gamma_{i-1} A p_{i-1} + b p_{i-1} + c p_{i-2}``,
    ``g(y_i + a_i v) = a_i^2 / 2 v^T A v``. For ``i = 1`` only ``b`` varies.
    A violation is a sample whose value beats the optimum.
    """
    A = check_operator(A)
    if i < 1 or i >= bundle.h:
        raise SpecError(f"manifold index {i} outside 1..{bundle.h - 1}")
    g = bundle.gamma[i - 1]
    p1 = bundle.P[:, i - 1]
    p2 = bundle.P[:, i - 2] if i >= 2 else np.zeros(A.n)
    Ap1 = A.apply(p1)
    ai = bundle.a[i]
    b_opt = -bundle.sigma[i - 1]
    c_opt = -bundle.omega[i - 1] if i >= 2 else 0.0

    def value(b, c):
        v = g * Ap1 + b * p1 + c * p2
        return 0.5 * ai * ai * float(v @ A.apply(v))

    best = value(b_opt, c_opt)
    rng = np.random.default_rng(seed)
    per_step, viol = [], []
    for s in range(samples):
        db, dc = (0.0, 0.0) if s == 0 else scale * rng.standard_normal(2) * max(1.0, abs(b_opt), abs(c_opt))
        if i == 1:
            dc = 0.0
        val = value(b_opt + db, c_opt + dc)
        viol.append(max(0.0, best - val))
        per_step.append({"db": float(db), "dc": float(dc), "value": val})
    report = _report("manifold_optimality", viol, threshold, per_step)
    report.per_step.insert(0, {"optimum": best, "b": b_opt, "c": c_opt})
    return report


# ---------------------------------------------------------------------------
# Inverse, determinant, factorization


@dataclass(frozen=True)
class InverseApproximation:
    S: np.ndarray
    rel_fro_error: float
    r0_error: float


def inverse_approximation(A, bundle: BasisBundle) -> InverseApproximation:
    """``S = sum_i p_i p_i^T / p_i^T A p_i`` over the first ``n`` directions."""
    M = _dense(A)
    n = M.shape[0]
    if bundle.h < n:
        raise IncompleteBasisError(f"{bundle.h} directions collected, {n} needed")
    P = bundle.P[:, :n]
    curv = np.einsum("ij,ij->j", P, M @ P)
    S = (P / curv) @ P.T
    inv = scipy.linalg.inv(M)
    err = float(np.linalg.norm(S - inv) / np.linalg.norm(inv))
    r0 = bundle.R[:, 0]
    return InverseApproximation(S, err, float(np.linalg.norm((S - inv) @ r0)))


@dataclass(frozen=True)
class DeterminantResult:
    det: float
    cross_check: Optional[float] = None

    @property
    def cross_check_rel(self) -> Optional[float]:
        if self.cross_check is None:
            return None
        return abs(self.det - self.cross_check) / abs(self.cross_check)


def determinant_via_cd(bundle: BasisBundle, gamma_rtol=1e-12) -> DeterminantResult:
    """``det A`` from ``n`` steps of a CD run.

    ``det A = prod_{i<n} (p_i^T A p_i / ||r_i||^2) * prod_{i<n-1} a_i^2 / prod_{i<n-1} gamma_i^2``.
    When every ``|gamma_i| = |a_i|`` the product ``prod 1/|a_i|`` is returned
    as a cross-check.
    """
    n = bundle.n
    if bundle.h < n:
        raise NotFullRankTrajectory(f"run stopped after {bundle.h} steps; the formula needs {n}")
    rn, pAp, a, g = bundle.rnorm[:n], bundle.pAp[:n], bundle.a[:n], bundle.gamma[: n - 1]
    if np.any(rn <= 0):
        raise NotFullRankTrajectory("a residual vanished before step n")
    if np.any(~np.isfinite(g)):
        raise NotFullRankTrajectory("gamma missing inside the first n - 1 steps")
    logdet = (np.sum(np.log(pAp) - 2 * np.log(rn)) + 2 * np.sum(np.log(np.abs(a[: n - 1])))
              - 2 * np.sum(np.log(np.abs(g))))
    cross = None
    if np.allclose(np.abs(g), np.abs(a[: n - 1]), rtol=gamma_rtol, atol=0):
        cross = float(np.exp(-np.sum(np.log(np.abs(a)))))
    return DeterminantResult(float(np.exp(logdet)), cross)


def factorization_matrices(bundle: BasisBundle, h: Optional[int] = None):
    """``(P_h, Rbar_h, U_h1, U_h2, D_h)`` for directions ``p_0 .. p_h``."""
    h = bundle.h - 1 if h is None else h
    if h < 0 or h >= bundle.h:
        raise SpecError(f"window {h} outside the stored basis")
    rn = np.linalg.norm(bundle.R[:, : h + 1], axis=0)
    nz = np.flatnonzero(rn == 0)
    if nz.size:
        h = int(nz[0]) - 1
        if h < 0:
            raise SpecError("r_0 = 0; nothing to factor")
        rn = rn[: h + 1]
    m = h + 1
    U1 = np.eye(m)
    U2 = np.zeros((m, m))
    D = np.ones(m)
    U2[0, 0] = rn[0]
    for j in range(1, m):
        U1[j - 1, j] = bundle.sigma[j - 1]
        if j >= 2:
            U1[j - 2, j] = bundle.omega[j - 1]
        U2[j - 1, j] = rn[j - 1]
        U2[j, j] = -rn[j]
        D[j] = bundle.gamma[j - 1] / bundle.a[j - 1]
    return bundle.P[:, :m], bundle.R[:, :m] / rn, U1, U2, np.diag(D)


def factorization_check(bundle: BasisBundle, threshold=1e-10) -> CheckReport:
    """Relative defect ``||P U1 - Rbar U2 D||_F / ||P||_F``."""
    P, Rb, U1, U2, D = factorization_matrices(bundle)
    defect = P @ U1 - Rb @ U2 @ D
    cols = np.linalg.norm(defect, axis=0) / np.linalg.norm(P)
    rel = float(np.linalg.norm(defect) / np.linalg.norm(P))
    per_step = [{"column": j, "defect": float(c)} for j, c in enumerate(cols)]
    return _report("factorization", [rel], threshold, per_step)


# ---------------------------------------------------------------------------
# Conjugacy-loss propagation


def predict_conjugacy_error(bundle: BasisBundle, epsilon: np.ndarray, k: int, method="cd",
                            ap_gram: Optional[np.ndarray] = None) -> np.ndarray:
    """Predicted row ``eps_{k+1, j}``, ``j = 0..k``, from measured rows ``k`` and ``k-1``.

    ``method="cd"`` uses the five-case CD recursion and ``method="cg"`` the
    four-case CG recursion, whose extra term ``alpha_k (A p_k)^T A p_j`` is
    read from ``ap_gram`` (the Gram matrix of the ``A p_j``).
    """
    eps = np.asarray(epsilon, dtype=np.float64)
    if k < 1 or eps.shape[0] <= k or eps.shape[1] <= k:
        raise HistoryError(f"epsilon history lacks rows {k - 1} and {k}")

    def E(i, j):
        return eps[i, j] if j >= 0 else 0.0

    out = np.zeros(k + 1)
    if method == "cd":
        g, s, w = bundle.gamma, bundle.sigma, bundle.omega
        if not np.isfinite(g[: k + 1]).all():
            raise HistoryError(f"gamma_0..gamma_{k} not all recorded")
        for j in range(k - 1):
            r = g[k] / g[j]
            wj = w[j] if j >= 1 else 0.0
            if j == k - 2:
                out[j] = r * wj * E(k, k - 3)
            elif j == k - 3:
                out[j] = (r * s[j] - s[k]) * E(k, j) + r * wj * E(k, j - 1)
            else:
                out[j] = r * E(k, j + 1) + (r * s[j] - s[k]) * E(k, j) + r * wj * E(k, j - 1) - w[k] * E(k - 1, j)
        return out
    if method == "cg":
        if ap_gram is None:
            raise HistoryError("the CG recursion needs the (A p)^T A p Gram matrix")
        alpha, beta = bundle.a, bundle.beta
        if not (np.isfinite(beta[k]) and np.isfinite(beta[k - 1])):
            raise HistoryError(f"beta_{k - 1} and beta_{k} are needed")
        for j in range(k - 1):
            if j == k - 2:
                out[j] = (1 + beta[k]) * E(k, k - 2)
            else:
                out[j] = (1 + beta[k]) * E(k, j) - beta[k - 1] * E(k - 1, j) - alpha[k] * ap_gram[k, j]
        return out
    raise SpecError(f"unknown propagation method {method!r}")


def conjugacy_propagation_check(A, bundle: BasisBundle, method=None, threshold=1e-9) -> CheckReport:
    """Compare predicted and measured ``eps_{k+1, .}`` rows for every available ``k``."""
    A = check_operator(A)
    method = method or ("cg" if bundle.method == "cg" else "cd")
    P = bundle.P
    AP = np.column_stack([A.apply(P[:, j]) for j in range(bundle.h)])
    eps = P.T @ AP
    gram = AP.T @ AP if method == "cg" else None
    per_step, viol = [], []
    for k in range(1, bundle.h - 1):
        pred = predict_conjugacy_error(bundle, eps, k, method, gram)
        meas = eps[k + 1, : k + 1]
        v = float(np.max(np.abs(pred - meas)))
        viol.append(v)
        per_step.append({"k": k, "max_abs_diff": v, "max_abs_measured": float(np.max(np.abs(meas[: max(k - 1, 1)])))})
    return _report(f"conjugacy_propagation_{method}", viol, threshold, per_step)


# ---------------------------------------------------------------------------
# Trace identities


def residual_identity_check(bundle: BasisBundle, threshold=1e-8, rtol_skip=0.0) -> CheckReport:
    """``|r_k^T p_k + (gamma_{k-1}/a_{k-1}) ||r_k||^2| <= threshold ||r_k|| ||p_k||``."""
    per_step, viol = [], []
    for k in range(1, bundle.h):
        r, p = bundle.R[:, k], bundle.P[:, k]
        rn = np.linalg.norm(r)
        if rn <= rtol_skip * bundle.rnorm[0] or rn == 0:
            continue
        lhs = r @ p + bundle.gamma[k - 1] / bundle.a[k - 1] * rn * rn
        v = abs(lhs) / (rn * np.linalg.norm(p))
        viol.append(v)
        per_step.append({"k": k, "violation": float(v)})
    return _report("residual_identity", viol, threshold, per_step)


def sign_property_check(bundle: BasisBundle, tol_rel=0.0) -> CheckReport:
    """``gamma_{k-1} (r_k^T p_k)(r_{k-1}^T p_{k-1}) < 0`` whenever ``||r_k|| > tol_rel ||r_0||``."""
    per_step, viol = [], []
    for k in range(1, bundle.h):
        if not bundle.rnorm[k] > tol_rel * bundle.rnorm[0]:
            continue
        prod = bundle.gamma[k - 1] * (bundle.R[:, k] @ bundle.P[:, k]) * (bundle.R[:, k - 1] @ bundle.P[:, k - 1])
        viol.append(1.0 if not prod < 0 else 0.0)
        per_step.append({"k": k, "product": float(prod)})
    return _report("sign_property", viol, 0.0, per_step)


def omega_cross_check(A, bundle: BasisBundle, threshold=1e-8) -> CheckReport:
    """Recorded ``omega_{k-1}`` against ``gamma_{k-1} (A p_{k-1})^T A p_{k-2} / p_{k-2}^T A p_{k-2}``."""
    A = check_operator(A)
    per_step, viol = [], []
    for k in range(2, bundle.h):
        w = bundle.omega[k - 1]
        direct = bundle.gamma[k - 1] * (A.apply(bundle.P[:, k - 1]) @ A.apply(bundle.P[:, k - 2])) / bundle.pAp[k - 2]
        v = abs(w - direct) / max(abs(w), abs(direct), np.finfo(float).tiny)
        viol.append(v)
        per_step.append({"k": k, "recorded": float(w), "direct": float(direct), "violation": float(v)})
    return _report("omega_cross_check", viol, threshold, per_step)


def ap_gram_check(A, bundle: BasisBundle, threshold=1e-8) -> CheckReport:
    """``(A p_k)^T A p_i`` vanishes for ``i <= k-2`` and equals ``p_k^T A p_k / gamma_{k-1}`` for ``i = k-1``."""
    A = check_operator(A)
    AP = np.column_stack([A.apply(bundle.P[:, j]) for j in range(bundle.h)])
    G = AP.T @ AP
    nrm = np.sqrt(np.diag(G))
    per_step, viol = [], []
    for k in range(1, bundle.h):
        far = [abs(G[k, i]) / (nrm[k] * nrm[i]) for i in range(k - 1)]
        expect = bundle.pAp[k] / bundle.gamma[k - 1]
        near = abs(G[k, k - 1] - expect) / abs(expect)
        v = max(far + [near])
        viol.append(v)
        per_step.append({"k": k, "far": float(max(far, default=0.0)), "near": float(near)})
    return _report("ap_gram", viol, threshold, per_step)


# ---------------------------------------------------------------------------
# Bounds


def coefficient_bounds(bundle: BasisBundle, lam_min: float, lam_max: float, slack=BOUND_SLACK) -> CheckReport:
    """Per-step checks of the ``|omega_k|``, ``|sigma_k|`` and (for CG) ``beta_k`` bounds.

    ``|gamma_k/gamma_{k-1}| ||p_k||^2 / (kappa ||p_{k-1}||^2) <= |omega_k| <= |gamma_k/gamma_{k-1}| kappa ||p_k||^2 / ||p_{k-1}||^2``,
    ``|gamma_k| lam_min / kappa <= |sigma_k| <= |gamma_k| lam_max kappa`` and
    ``0 <= beta_k <= kappa^2 - 1``. A violation is the relative excess over
    the bound; ``slack`` absorbs rounding.
    """
    if not (0 < lam_min <= lam_max):
        raise SpecError("need 0 < lam_min <= lam_max")
    kappa = lam_max / lam_min
    pn2 = np.einsum("ij,ij->j", bundle.P, bundle.P)
    per_step, viol = [], []

    def excess(lo, x, hi):
        e = 0.0
        if x < lo:
            e = (lo - x) / max(abs(lo), np.finfo(float).tiny)
        if x > hi:
            e = (x - hi) / max(abs(hi), np.finfo(float).tiny)
        return e

    for k in range(bundle.h):
        g, s, w = bundle.gamma[k], bundle.sigma[k], bundle.omega[k]
        entry = {"k": k}
        if np.isfinite(s) and np.isfinite(g):
            entry["sigma"] = excess(abs(g) * lam_min / kappa, abs(s), abs(g) * lam_max * kappa)
        if k >= 1 and np.isfinite(w) and np.isfinite(g) and np.isfinite(bundle.gamma[k - 1]) and w != 0:
            base = abs(g / bundle.gamma[k - 1]) * pn2[k] / pn2[k - 1]
            entry["omega"] = excess(base / kappa, abs(w), base * kappa)
        if bundle.method == "cg" and np.isfinite(bundle.beta[k]):
            entry["beta"] = excess(0.0, bundle.beta[k], kappa * kappa - 1.0)
        vals = [v for key, v in entry.items() if key != "k"]
        if vals:
            viol.append(max(vals))
            per_step.append(entry)
    return _report("coefficient_bounds", viol, slack, per_step)


def energy_errors(A, iterates, y_star) -> np.ndarray:
    """``||y_k - y*||_A`` for each column (or row sequence) of iterates."""
    A = check_operator(A)
    Y = np.asarray(iterates, dtype=np.float64)
    if Y.ndim == 2 and Y.shape[0] == A.n:
        Y = Y.T
    out = []
    for y in Y:
        e = y - y_star
        out.append(math.sqrt(max(float(e @ A.apply(e)), 0.0)))
    return np.array(out)


def chebyshev_bound(kappa: float, k) -> np.ndarray:
    q = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)
    return 2.0 * q ** np.asarray(k, dtype=np.float64)


def chebyshev_bound_check(errors: Sequence[float], kappa: float, asserted=True, slack=BOUND_SLACK) -> CheckReport:
    """Energy-error ratios against ``2 ((sqrt(kappa) - 1)/(sqrt(kappa) + 1))^k``.

    ``asserted=False`` marks strategies for which the bound is reported only.
    """
    e = np.asarray(errors, dtype=np.float64)
    if e.size == 0 or e[0] == 0:
        return CheckReport("chebyshev", 0.0, slack, True, [{"skipped": "y_0 = y*"}], asserted)
    ratio = e / e[0]
    bound = chebyshev_bound(kappa, np.arange(e.size))
    viol = np.maximum(ratio - bound, 0.0) / np.maximum(bound, np.finfo(float).tiny)
    per_step = [{"k": int(k), "ratio": float(r), "bound": float(b)} for k, (r, b) in enumerate(zip(ratio, bound))]
    rep = _report("chebyshev", viol.tolist(), slack, per_step, asserted)
    if not asserted:
        rep.passed = True
    return rep


__all__ = [
    "BasisBundle", "CheckReport", "ConjugacyReport", "OrthogonalityReport", "InverseApproximation",
    "DeterminantResult", "conjugacy_matrix", "orthogonality_matrix", "exact_solution", "error_functions",
    "error_decrease_check", "manifold_optimality_check", "inverse_approximation", "determinant_via_cd",
    "factorization_matrices", "factorization_check", "predict_conjugacy_error",
    "conjugacy_propagation_check", "residual_identity_check", "sign_property_check", "omega_cross_check",
    "ap_gram_check", "coefficient_bounds", "energy_errors", "chebyshev_bound", "chebyshev_bound_check",
]
