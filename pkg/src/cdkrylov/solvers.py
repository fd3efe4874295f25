"""CG, the parameter-dependent CD class and its relatives.

Every solver returns a :class:`SolveResult` whose trace stores, for each
direction ``p_k``, the step length ``a_k`` and the coefficients
``(gamma_k, sigma_k, omega_k)`` that build ``p_{k+1}`` as

    p_{k+1} = gamma_k A p_k - sigma_k p_k - omega_k p_{k-1}.

Solvers with a different native recurrence (CG, CD-red, scaled CG) record
the equivalent three-term coefficients, so diagnostics work on any trace.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ._validation import check_system
from .exceptions import SpecError
from .gamma import GammaContext, GammaStrategy, MinusA, ScaledCgMap, parse_gamma
from .linalg import SymmetricOperator, apply_operator

METHODS = ("cg", "cd", "cd-step0b", "cd-red", "scaled-cg", "hybrid")
TRACE_FIELDS = ("k", "rnorm", "a", "gamma", "sigma", "omega", "pAp")


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max-iters"
    BREAKDOWN = "breakdown"


class Breakdown(str, Enum):
    NON_POSITIVE_CURVATURE = "non-positive-curvature"
    ZERO_CURVATURE = "zero-curvature"
    NUMERICAL_FAILURE = "numerical-failure"
    GAMMA_UNDERFLOW = "gamma-underflow"


@dataclass(frozen=True)
class SolveConfig:
    """Method selection, stopping rule and breakdown guard.

    ``on_breakdown="continue"`` lets negative curvature through (only a
    near-zero ``p^T A p`` stops the run); it exists for indefinite
    truncated-Newton experiments.
    """

    method: str = "cd"
    gamma: GammaStrategy = field(default_factory=MinusA)
    tol_rel: float = 1e-10
    max_iters: Optional[int] = None
    breakdown_eps: float = 1e-14
    store_basis: bool = False
    recompute_residual_every: int = 0
    cg_steps: frozenset = frozenset()
    on_breakdown: str = "abort"
    gamma_min: float = 1e-300
    cg_recurrence: str = "two-term"

    def __post_init__(self):
        if self.method not in METHODS:
            raise SpecError(f"unknown method {self.method!r}; expected one of {METHODS}")
        object.__setattr__(self, "gamma", parse_gamma(self.gamma))
        object.__setattr__(self, "cg_steps", frozenset(int(k) for k in self.cg_steps))
        if not (self.tol_rel > 0):
            raise SpecError("tol_rel must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise SpecError("max_iters must be >= 1")
        if self.breakdown_eps < 0:
            raise SpecError("breakdown_eps must be non-negative")
        if self.recompute_residual_every < 0:
            raise SpecError("recompute_residual_every must be >= 0")
        if self.on_breakdown not in ("abort", "continue"):
            raise SpecError("on_breakdown must be 'abort' or 'continue'")
        if self.cg_recurrence not in ("two-term", "three-term"):
            raise SpecError("cg_recurrence must be 'two-term' or 'three-term'")
        if any(k < 1 for k in self.cg_steps):
            raise SpecError("cg_steps indices start at 1")

    def replace(self, **changes) -> "SolveConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class StepRecord:
    """Scalars of iteration ``k``; ``None`` where the quantity was never formed."""

    k: int
    rnorm: float
    a: Optional[float] = None
    gamma: Optional[float] = None
    sigma: Optional[float] = None
    omega: Optional[float] = None
    pAp: Optional[float] = None
    beta: Optional[float] = None

    def to_dict(self):
        return {name: getattr(self, name) for name in TRACE_FIELDS}


@dataclass(frozen=True)
class SolveTrace:
    records: tuple
    basis_P: Optional[tuple] = None
    basis_R: Optional[tuple] = None
    iterates: Optional[tuple] = None
    events: tuple = ()

    def column(self, name) -> np.ndarray:
        """One record field as a float array, ``nan`` where absent."""
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records])

    def to_json(self, indent=None) -> str:
        return json.dumps([r.to_dict() for r in self.records], indent=indent)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for r in self.records:
            w.writerow(["" if v is None else repr(v) for v in r.to_dict().values()])
        return buf.getvalue()


@dataclass(frozen=True)
class SolveResult:
    y: np.ndarray
    status: Status
    iters: int
    trace: SolveTrace
    method: str
    breakdown: Optional[Breakdown] = None

    @property
    def converged(self):
        return self.status is Status.CONVERGED

    @property
    def rnorm(self):
        return self.trace.records[-1].rnorm


class _TraceBuilder:
    def __init__(self, store_basis):
        self.store = store_basis
        self.records = []
        self.P, self.R, self.Y = [], [], []
        self.events = []

    def residual(self, k, rnorm, r, y):
        self.records.append(dict(k=k, rnorm=float(rnorm)))
        if self.store:
            self.R.append(r.copy())
            self.Y.append(y.copy())

    def step(self, k, a, pAp, p):
        self.records[k].update(a=float(a), pAp=float(pAp))
        if self.store:
            self.P.append(p.copy())

    def coeffs(self, k, gamma, sigma, omega, beta=None):
        self.records[k].update(gamma=float(gamma), sigma=float(sigma), omega=float(omega))
        if beta is not None:
            self.records[k]["beta"] = float(beta)

    def freeze(self):
        recs = tuple(StepRecord(**r) for r in self.records)
        if not self.store:
            return SolveTrace(recs, events=tuple(self.events))
        return SolveTrace(recs, tuple(self.P), tuple(self.R), tuple(self.Y), tuple(self.events))


@dataclass
class IterationState:
    """Rolling state before direction ``p_k`` is built.

    ``p`` is ``p_{k-1}``, ``p_prev`` is ``p_{k-2}`` (``None`` at k = 1);
    ``gamma_prev`` is ``gamma_{k-2}``, the coefficient that built ``p_{k-1}``.
    """

    k: int
    y: np.ndarray
    r: np.ndarray
    p: np.ndarray
    p_prev: Optional[np.ndarray]
    a: float
    pAp: float
    pAp_prev: Optional[float] = None
    gamma_prev: Optional[float] = None
    Ap_sq_prev: Optional[float] = None


def compute_step_coefficients(state: IterationState, gamma: float, Ap, Ap_sq=None):
    """Return ``(sigma_{k-1}, omega_{k-1})`` for direction ``p_k``.

    ``sigma = gamma ||A p_{k-1}||^2 / p_{k-1}^T A p_{k-1}`` and
    ``omega = (gamma / gamma_{k-2}) p_{k-1}^T A p_{k-1} / p_{k-2}^T A p_{k-2}``,
    the scalar form that avoids keeping ``A p_{k-2}``. ``omega`` is 0 at k = 1.
    ``Ap_sq`` overrides ``||A p||^2`` (the preconditioned variant passes
    ``(Ap)^T M (Ap)``).
    """
    if Ap_sq is None:
        Ap_sq = float(Ap @ Ap)
    sigma = gamma * Ap_sq / state.pAp
    if state.p_prev is None or gamma == 0:
        return sigma, 0.0
    omega = (gamma / state.gamma_prev) * (state.pAp / state.pAp_prev)
    return sigma, omega


def _max_iters(config, n):
    return config.max_iters if config.max_iters is not None else 10 * n


def _curvature_breakdown(pAp, pp, config):
    """Classify ``p^T A p``; ``None`` means the step may proceed."""
    if not (math.isfinite(pAp) and math.isfinite(pp)):
        return Breakdown.NUMERICAL_FAILURE
    guard = config.breakdown_eps * pp
    if config.on_breakdown == "continue":
        return Breakdown.ZERO_CURVATURE if abs(pAp) <= guard else None
    return Breakdown.NON_POSITIVE_CURVATURE if pAp <= guard else None


def _quiet(fn):
    """Silence overflow warnings; non-finite values end the run as a breakdown."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore"):
            return fn(*args, **kwargs)

    return wrapper


def _zero_rhs(A, b, y0, tb, method):
    y = np.zeros(A.n)
    tb.residual(0, 0.0, np.zeros(A.n), y)
    return SolveResult(y, Status.CONVERGED, 0, tb.freeze(), method)


@_quiet
def _run_cd(A, b, y0, config, precond=None, variant="cd"):
    """Shared CD loop (plain, Step 0_b, hybrid, preconditioned).

    One A-application per iteration (plus one for ``r_0``). With a
    preconditioner, ``M (A p)`` is formed together with ``A p`` so each
    iteration costs one M-application, plus one for ``M r_0``.
    """
    method = {"cd": "cd", "step0b": "cd-step0b", "hybrid": "hybrid"}[variant]
    if precond is not None:
        method = "cd-m"
    tb = _TraceBuilder(config.store_basis)
    if not np.any(b):
        return _zero_rhs(A, b, y0, tb, method)
    strategy = config.gamma
    mvec = (lambda v: precond.apply(v)) if precond is not None else None
    max_iters = _max_iters(config, A.n)
    stop = config.tol_rel * float(np.linalg.norm(b))

    y = y0.copy()
    r = b - apply_operator(A, y)
    rnorm = float(np.linalg.norm(r))
    rnorm0 = rnorm
    tb.residual(0, rnorm, r, y)
    if rnorm <= stop:
        return SolveResult(y, Status.CONVERGED, 0, tb.freeze(), method)

    p = mvec(r) if mvec else r.copy()
    Ap = apply_operator(A, p)
    MAp = mvec(Ap) if mvec else Ap
    p_prev = None
    pAp_prev = gamma_prev = Ap_sq_prev = None
    k = 0
    status, breakdown = None, None
    while True:
        pAp = float(p @ Ap)
        breakdown = _curvature_breakdown(pAp, float(p @ p), config)
        if breakdown is not None:
            status = Status.BREAKDOWN
            break
        a = float(r @ p) / pAp
        y += a * p
        r -= a * Ap
        tb.step(k, a, pAp, p)
        k += 1
        if config.recompute_residual_every and k % config.recompute_residual_every == 0:
            r = b - apply_operator(A, y)
            tb.events.append((k, "residual-recomputed"))
        rnorm = float(np.linalg.norm(r))
        tb.residual(k, rnorm, r, y)
        if not math.isfinite(rnorm):
            status, breakdown = Status.BREAKDOWN, Breakdown.NUMERICAL_FAILURE
            break
        if rnorm <= stop:
            status = Status.CONVERGED
            break
        if k >= max_iters:
            status = Status.MAX_ITERS
            break

        j = k - 1
        Ap_sq = float(Ap @ MAp)
        if variant == "step0b" and j == 0:
            # CG-like first step; recorded with its three-term equivalents
            beta0 = rnorm * rnorm / (rnorm0 * rnorm0)
            gamma, sigma, omega = -a, -(1.0 + beta0), 0.0
            p_new = r + beta0 * p
        else:
            if variant == "hybrid" and k in config.cg_steps:
                gamma = -a
            else:
                gamma = strategy(GammaContext(j, a, pAp, Ap_sq, gamma_prev, pAp_prev, Ap_sq_prev))
            if not math.isfinite(gamma):
                status, breakdown = Status.BREAKDOWN, Breakdown.NUMERICAL_FAILURE
                break
            if abs(gamma) < config.gamma_min:
                status, breakdown = Status.BREAKDOWN, Breakdown.GAMMA_UNDERFLOW
                break
            state = IterationState(k, y, r, p, p_prev, a, pAp, pAp_prev, gamma_prev, Ap_sq_prev)
            sigma, omega = compute_step_coefficients(state, gamma, Ap, Ap_sq)
            p_new = gamma * MAp - sigma * p
            if p_prev is not None:
                p_new -= omega * p_prev
        tb.coeffs(j, gamma, sigma, omega)
        p_prev, p = p, p_new
        pAp_prev, gamma_prev, Ap_sq_prev = pAp, gamma, Ap_sq
        Ap = apply_operator(A, p)
        MAp = mvec(Ap) if mvec else Ap

    return SolveResult(y, status, k, tb.freeze(), method, breakdown)


@_quiet
def cg_solve(A, b, y0=None, config: Optional[SolveConfig] = None) -> SolveResult:
    """Conjugate gradient.

    ``alpha = r^T p / p^T A p``, ``beta = ||r_k||^2 / ||r_{k-1}||^2``. With
    ``config.cg_recurrence="three-term"`` the direction is formed as
    ``-alpha_{k-1} A p_{k-1} + (1 + beta_{k-1}) p_{k-1} - beta_{k-2} p_{k-2}``.
    The trace holds ``a = alpha`` and the CD equivalents
    ``gamma = -alpha``, ``sigma = -(1 + beta)``, ``omega = beta_{k-1}``; the
    ``beta`` field keeps beta itself.
    """
    config = config or SolveConfig(method="cg")
    A, b, y0 = check_system(A, b, y0)
    tb = _TraceBuilder(config.store_basis)
    if not np.any(b):
        return _zero_rhs(A, b, y0, tb, "cg")
    max_iters = _max_iters(config, A.n)
    stop = config.tol_rel * float(np.linalg.norm(b))
    three_term = config.cg_recurrence == "three-term"

    y = y0.copy()
    r = b - apply_operator(A, y)
    rr = float(r @ r)
    tb.residual(0, math.sqrt(rr), r, y)
    if math.sqrt(rr) <= stop:
        return SolveResult(y, Status.CONVERGED, 0, tb.freeze(), "cg")
    p = r.copy()
    p_prev = None
    beta_prev = 0.0
    k = 0
    status, breakdown = None, None
    while True:
        Ap = apply_operator(A, p)
        pAp = float(p @ Ap)
        breakdown = _curvature_breakdown(pAp, float(p @ p), config)
        if breakdown is not None:
            status = Status.BREAKDOWN
            break
        alpha = float(r @ p) / pAp
        y += alpha * p
        r -= alpha * Ap
        tb.step(k, alpha, pAp, p)
        k += 1
        if config.recompute_residual_every and k % config.recompute_residual_every == 0:
            r = b - apply_operator(A, y)
            tb.events.append((k, "residual-recomputed"))
        rr_new = float(r @ r)
        rnorm = math.sqrt(rr_new)
        tb.residual(k, rnorm, r, y)
        if not math.isfinite(rnorm):
            status, breakdown = Status.BREAKDOWN, Breakdown.NUMERICAL_FAILURE
            break
        if rnorm <= stop:
            status = Status.CONVERGED
            break
        if k >= max_iters:
            status = Status.MAX_ITERS
            break
        beta = rr_new / rr
        if three_term:
            p_new = -alpha * Ap + (1.0 + beta) * p
            if p_prev is not None:
                p_new -= beta_prev * p_prev
        else:
            p_new = r + beta * p
        tb.coeffs(k - 1, -alpha, -(1.0 + beta), beta_prev if k > 1 else 0.0, beta=beta)
        p_prev, p = p, p_new
        beta_prev, rr = beta, rr_new

    return SolveResult(y, status, k, tb.freeze(), "cg", breakdown)


def cd_solve(A, b, y0=None, config: Optional[SolveConfig] = None) -> SolveResult:
    """The CD class: directions explicitly conjugate to the two previous ones.

    ``method="cd-step0b"`` replaces the first direction update with the CG
    step ``p_1 = r_1 + (||r_1||^2/||r_0||^2) p_0``.
    """
    config = config or SolveConfig(method="cd")
    A, b, y0 = check_system(A, b, y0)
    variant = "step0b" if config.method == "cd-step0b" else "cd"
    return _run_cd(A, b, y0, config, variant=variant)


def hybrid_solve(A, b, y0=None, config: Optional[SolveConfig] = None) -> SolveResult:
    """CD where the steps listed in ``config.cg_steps`` use ``gamma_{k-1} = -a_{k-1}``.

    Step ``k`` is the update that builds ``p_k``; indices start at 1.
    """
    config = config or SolveConfig(method="hybrid")
    A, b, y0 = check_system(A, b, y0)
    return _run_cd(A, b, y0, config, variant="hybrid")


@_quiet
def cd_red_solve(A, b, y0=None, config: Optional[SolveConfig] = None) -> SolveResult:
    """CD reduced to the two-term form ``p_k = r_k + beta_{k-1} p_{k-1}``.

    ``gamma_0 = -a_0`` and ``gamma_k`` follows the reduction recursion;
    ``beta_{k-1} = -(1 + sigma_{k-1})``. The trace records ``gamma``,
    ``sigma``, ``beta`` and the three-term ``omega``.
    """
    config = config or SolveConfig(method="cd-red")
    A, b, y0 = check_system(A, b, y0)
    tb = _TraceBuilder(config.store_basis)
    if not np.any(b):
        return _zero_rhs(A, b, y0, tb, "cd-red")
    max_iters = _max_iters(config, A.n)
    stop = config.tol_rel * float(np.linalg.norm(b))

    y = y0.copy()
    r = b - apply_operator(A, y)
    rnorm = float(np.linalg.norm(r))
    tb.residual(0, rnorm, r, y)
    if rnorm <= stop:
        return SolveResult(y, Status.CONVERGED, 0, tb.freeze(), "cd-red")
    p = r.copy()
    gamma_prev = pAp_prev = Ap_sq_prev = None
    k = 0
    status, breakdown = None, None
    while True:
        Ap = apply_operator(A, p)
        pAp = float(p @ Ap)
        breakdown = _curvature_breakdown(pAp, float(p @ p), config)
        if breakdown is not None:
            status = Status.BREAKDOWN
            break
        a = float(r @ p) / pAp
        y += a * p
        r -= a * Ap
        tb.step(k, a, pAp, p)
        k += 1
        if config.recompute_residual_every and k % config.recompute_residual_every == 0:
            r = b - apply_operator(A, y)
            tb.events.append((k, "residual-recomputed"))
        rnorm = float(np.linalg.norm(r))
        tb.residual(k, rnorm, r, y)
        if not math.isfinite(rnorm):
            status, breakdown = Status.BREAKDOWN, Breakdown.NUMERICAL_FAILURE
            break
        if rnorm <= stop:
            status = Status.CONVERGED
            break
        if k >= max_iters:
            status = Status.MAX_ITERS
            break
        Ap_sq = float(Ap @ Ap)
        if gamma_prev is None:
            gamma = -a
        else:
            gamma = -(gamma_prev * gamma_prev * Ap_sq_prev + gamma_prev * pAp_prev) / pAp
        if not math.isfinite(gamma):
            status, breakdown = Status.BREAKDOWN, Breakdown.NUMERICAL_FAILURE
            break
        if abs(gamma) < config.gamma_min:
            status, breakdown = Status.BREAKDOWN, Breakdown.GAMMA_UNDERFLOW
            break
        sigma = gamma * Ap_sq / pAp
        omega = 0.0 if gamma_prev is None else (gamma / gamma_prev) * (pAp / pAp_prev)
        beta = -(1.0 + sigma)
        tb.coeffs(k - 1, gamma, sigma, omega, beta=beta)
        p = r + beta * p
        gamma_prev, pAp_prev, Ap_sq_prev = gamma, pAp, Ap_sq

    return SolveResult(y, status, k, tb.freeze(), "cd-red", breakdown)


@_quiet
def scaled_cg_solve(A, b, y0=None, rho: Sequence[float] = (1.0,), config: Optional[SolveConfig] = None) -> SolveResult:
    """Scaled CG: ``p_0 = rho_0 r_0`` and ``p_k = rho_k (r_k + beta_{k-1} p_{k-1})``.

    ``rho`` is extended with its last value when the run outlasts it. The
    trace records ``a = alpha`` and the CD equivalents
    ``gamma_{k-1} = -rho_k alpha_{k-1}``,
    ``sigma_{k-1} = -rho_k (beta_{k-1} + 1/rho_{k-1})``,
    ``omega_{k-1} = rho_k beta_{k-2}``.
    """
    config = config or SolveConfig(method="scaled-cg")
    A, b, y0 = check_system(A, b, y0)
    rho_of = ScaledCgMap(rho).at
    tb = _TraceBuilder(config.store_basis)
    if not np.any(b):
        return _zero_rhs(A, b, y0, tb, "scaled-cg")
    max_iters = _max_iters(config, A.n)
    stop = config.tol_rel * float(np.linalg.norm(b))

    y = y0.copy()
    r = b - apply_operator(A, y)
    rr = float(r @ r)
    tb.residual(0, math.sqrt(rr), r, y)
    if math.sqrt(rr) <= stop:
        return SolveResult(y, Status.CONVERGED, 0, tb.freeze(), "scaled-cg")
    p = rho_of(0) * r
    beta_prev = 0.0
    k = 0
    status, breakdown = None, None
    while True:
        Ap = apply_operator(A, p)
        pAp = float(p @ Ap)
        breakdown = _curvature_breakdown(pAp, float(p @ p), config)
        if breakdown is not None:
            status = Status.BREAKDOWN
            break
        rho_k = rho_of(k)
        alpha = rho_k * rr / pAp
        y += alpha * p
        r -= alpha * Ap
        tb.step(k, alpha, pAp, p)
        k += 1
        if config.recompute_residual_every and k % config.recompute_residual_every == 0:
            r = b - apply_operator(A, y)
            tb.events.append((k, "residual-recomputed"))
        rr_new = float(r @ r)
        rnorm = math.sqrt(rr_new)
        tb.residual(k, rnorm, r, y)
        if not math.isfinite(rnorm):
            status, breakdown = Status.BREAKDOWN, Breakdown.NUMERICAL_FAILURE
            break
        if rnorm <= stop:
            status = Status.CONVERGED
            break
        if k >= max_iters:
            status = Status.MAX_ITERS
            break
        beta = rr_new / (rho_k * rr)
        rho_next = rho_of(k)
        tb.coeffs(k - 1, -rho_next * alpha, -rho_next * (beta + 1.0 / rho_k),
                  rho_next * beta_prev if k > 1 else 0.0, beta=beta)
        p = rho_next * (r + beta * p)
        beta_prev, rr = beta, rr_new

    return SolveResult(y, status, k, tb.freeze(), "scaled-cg", breakdown)


def solve(A, b, y0=None, config: Optional[SolveConfig] = None, preconditioner=None, rho=None) -> SolveResult:
    """Dispatch on ``config.method``; a preconditioner routes CD to CD_M."""
    config = config or SolveConfig()
    if preconditioner is not None:
        if config.method != "cd":
            raise SpecError("preconditioning is available for method 'cd' only")
        from .precond import cd_m_solve

        return cd_m_solve(A, b, y0, preconditioner, config)
    if config.method == "cg":
        return cg_solve(A, b, y0, config)
    if config.method in ("cd", "cd-step0b"):
        return cd_solve(A, b, y0, config)
    if config.method == "cd-red":
        return cd_red_solve(A, b, y0, config)
    if config.method == "hybrid":
        return hybrid_solve(A, b, y0, config)
    if rho is None:
        strategy = config.gamma
        if not isinstance(strategy, ScaledCgMap):
            raise SpecError("scaled-cg needs rho (or a ScaledCgMap gamma strategy)")
        rho = strategy.rho
    return scaled_cg_solve(A, b, y0, rho, config)
