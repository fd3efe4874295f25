"""Truncated-Newton directions assembled from a CD run on Newton's equation.

With ``A`` the Hessian and ``b = -grad``, step ``i`` of the run (numbered
from 1, so step ``i`` uses direction ``p_{i-1}`` of the trace) contributes
``a_i p_i`` to the search direction. Steps with positive curvature form
``d_P``, steps with negative curvature ``d_N``, and the most negative
normalized curvature supplies the direction ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._validation import check_operator, check_vector
from .diagnostics import BasisBundle
from .exceptions import SpecError


@dataclass(frozen=True)
class NewtonDirections:
    d_m: np.ndarray
    d_P: np.ndarray
    d_N: np.ndarray
    s: Optional[np.ndarray]
    I_P: tuple
    I_N: tuple
    zero_curvature: tuple = ()
    ell: Optional[int] = None

    @property
    def m(self) -> int:
        return len(self.I_P) + len(self.I_N) + len(self.zero_curvature)


@dataclass(frozen=True)
class QuadraticModelEval:
    """``q_values[m-1] = Q(d^m)``; ``ratios[m-1]`` is the truncation ratio at ``m`` (``nan`` where undefined)."""

    q_values: tuple
    ratios: tuple
    passes: tuple
    first_m: Optional[int]


def assemble_directions(bundle: BasisBundle, m: Optional[int] = None, breakdown_eps=1e-14) -> NewtonDirections:
    """Split the first ``m`` steps by the sign of ``p_i^T A p_i``.

    Curvatures with ``|p^T A p| <= breakdown_eps ||p||^2`` are flagged and
    left out of both index sets. ``s = p_ell / ||r_ell||`` where ``ell``
    minimizes ``p_i^T A p_i / ||r_i||^2`` over the negative set (smallest
    index on ties).
    """
    h = bundle.h
    m = h if m is None else int(m)
    if m < 1 or m > h:
        raise SpecError(f"need 1 <= m <= {h} stored steps, got {m}")
    n = bundle.n
    d_P, d_N, d_m = np.zeros(n), np.zeros(n), np.zeros(n)
    I_P, I_N, zero = [], [], []
    best, ell = np.inf, None
    for i in range(1, m + 1):
        k = i - 1
        p, curv, a = bundle.P[:, k], bundle.pAp[k], bundle.a[k]
        step = a * p
        d_m += step
        if abs(curv) <= breakdown_eps * float(p @ p):
            zero.append(i)
        elif curv > 0:
            I_P.append(i)
            d_P += step
        else:
            I_N.append(i)
            d_N += step
            q = curv / bundle.rnorm[k] ** 2
            if q < best:
                best, ell = q, i
    s = None if ell is None else bundle.P[:, ell - 1] / bundle.rnorm[ell - 1]
    return NewtonDirections(d_m, d_P, d_N, s, tuple(I_P), tuple(I_N), tuple(zero), ell)


def quadratic_model(A, grad, f0: float, d) -> float:
    """``Q(d) = f0 + grad^T d + 1/2 d^T A d``."""
    A = check_operator(A)
    grad = check_vector(grad, A.n, "grad")
    d = check_vector(d, A.n, "d")
    return float(f0 + grad @ d + 0.5 * (d @ A.apply(d)))


def model_values(A, grad, f0: float, bundle: BasisBundle, m: Optional[int] = None) -> list:
    """``Q(d^1), ..., Q(d^m)`` along the partial sums ``d^j = sum_{i<=j} a_i p_i``."""
    m = bundle.h if m is None else m
    d = np.zeros(bundle.n)
    out = []
    for k in range(m):
        d = d + bundle.a[k] * bundle.P[:, k]
        out.append(quadratic_model(A, grad, f0, d))
    return out


def truncation_test(q_values: Sequence[float], alpha: float) -> QuadraticModelEval:
    """Ratio test ``(Q(d^m) - Q(d^{m-1})) / (Q(d^m) / m) <= alpha`` for ``m >= 2``.

    The ratio is ``nan`` (and the test fails) where ``Q(d^m) = 0`` and at ``m = 1``.
    """
    if not (0 < alpha):
        raise SpecError("alpha must be positive")
    q = [float(x) for x in q_values]
    ratios, passes = [np.nan], [False]
    for m in range(2, len(q) + 1):
        qm = q[m - 1]
        if qm == 0:
            ratios.append(np.nan)
            passes.append(False)
            continue
        ratio = (qm - q[m - 2]) / (qm / m)
        ratios.append(ratio)
        passes.append(bool(ratio <= alpha))
    first = next((m for m, ok in enumerate(passes, start=1) if ok), None)
    return QuadraticModelEval(tuple(q), tuple(ratios), tuple(passes), first)


def tn_report(directions: NewtonDirections, evaluation: Optional[QuadraticModelEval] = None) -> dict:
    """JSON-ready summary ``{d_m_norm, |I_P|, |I_N|, ell, ratios}``."""
    ratios = [] if evaluation is None else [None if np.isnan(r) else r for r in evaluation.ratios]
    return {
        "d_m_norm": float(np.linalg.norm(directions.d_m)),
        "|I_P|": len(directions.I_P),
        "|I_N|": len(directions.I_N),
        "ell": directions.ell,
        "ratios": ratios,
    }


__all__ = [
    "NewtonDirections", "QuadraticModelEval", "assemble_directions", "quadratic_model", "model_values",
    "truncation_test", "tn_report",
]
