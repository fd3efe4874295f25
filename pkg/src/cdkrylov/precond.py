"""Preconditioners ``M v`` and the preconditioned CD iteration CD_M.

Only products ``M v`` are needed; no factor of ``M`` is ever formed.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ._validation import check_operator, check_system
from .exceptions import DimensionError, SpecError
from .linalg import SymmetricOperator, read_matrix_market
from .solvers import SolveConfig, SolveResult, _run_cd

SPD_PROBES = 16


class Preconditioner:
    """A symmetric positive definite map ``v -> M v``."""

    kind = "abstract"
    n: Optional[int] = None

    def apply(self, v) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, v):
        return self.apply(v)

    def to_dense(self, n=None):
        n = self.n if n is None else n
        return np.column_stack([self.apply(e) for e in np.eye(n)])


class Identity(Preconditioner):
    kind = "identity"

    def __init__(self, n=None):
        self.n = n

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if self.n is not None and v.shape != (self.n,):
            raise DimensionError(f"vector of shape {v.shape} does not match dimension {self.n}")
        return v.copy()


class Jacobi(Preconditioner):
    """``v_i -> v_i / d_i`` with every ``d_i > 0``."""

    kind = "jacobi"

    def __init__(self, d):
        d = np.array(d, dtype=np.float64, copy=True).ravel()
        bad = np.flatnonzero(~(d > 0) | ~np.isfinite(d))
        if bad.size:
            raise SpecError(f"Jacobi diagonal must be positive; entry {bad[0]} is {d[bad[0]]!r}")
        d.setflags(write=False)
        self.d = d
        self.n = d.size

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise DimensionError(f"vector of shape {v.shape} does not match dimension {self.n}")
        return v / self.d


class CustomOperator(Preconditioner):
    """Caller-supplied SPD routine, spot-checked on seeded random vectors."""

    kind = "custom"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], n: int, check=True, seed=0):
        self.fn = fn
        self.n = int(n)
        if check:
            rng = np.random.default_rng(seed)
            for _ in range(SPD_PROBES):
                v = rng.standard_normal(self.n)
                if not (float(v @ self.apply(v)) > 0):
                    raise SpecError("preconditioner is not positive definite (v^T M v <= 0 on a probe)")

    @classmethod
    def from_matrix(cls, matrix, check=True):
        op = check_operator(matrix)
        return cls(op.apply, op.n, check=check)

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise DimensionError(f"vector of shape {v.shape} does not match dimension {self.n}")
        out = np.asarray(self.fn(v), dtype=np.float64)
        if out.shape != (self.n,):
            raise DimensionError("preconditioner returned a vector of the wrong length")
        return out


def apply_preconditioner(P: Preconditioner, v) -> np.ndarray:
    return P.apply(v)


def jacobi_from_operator(A) -> Jacobi:
    """Jacobi preconditioner from the diagonal of ``A``."""
    A = check_operator(A)
    d = A.diagonal()
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise SpecError(f"diagonal entry {bad[0]} of A is {d[bad[0]]!r}; Jacobi needs positive diagonal")
    return Jacobi(d)


def parse_preconditioner(spec: str, A: SymmetricOperator) -> Optional[Preconditioner]:
    """``none`` | ``jacobi`` | ``file:<path>`` (Matrix Market SPD matrix used as M)."""
    if spec in (None, "none"):
        return None
    if spec == "jacobi":
        return jacobi_from_operator(A)
    if spec.startswith("file:") and len(spec) > 5:
        m = read_matrix_market(spec[5:])
        if m.n != A.n:
            raise DimensionError(f"preconditioner dimension {m.n} != operator dimension {A.n}")
        return CustomOperator(m.apply, m.n)
    raise SpecError(f"unknown preconditioner spec {spec!r}")


def cd_m_solve(A, b, y0=None, P: Optional[Preconditioner] = None, config: Optional[SolveConfig] = None) -> SolveResult:
    """Preconditioned CD.

    ``p_0 = M r_0``; ``sigma_{k-1} = gamma_{k-1} (Ap)^T M (Ap) / p^T A p``;
    ``a`` and ``omega`` keep their unpreconditioned form;
    ``p_k = gamma_{k-1} M(A p_{k-1}) - sigma_{k-1} p_{k-1} - omega_{k-1} p_{k-2}``.
    Each iteration applies M once, plus once for ``M r_0``.
    """
    config = config or SolveConfig(method="cd")
    A, b, y0 = check_system(A, b, y0)
    P = Identity(A.n) if P is None else P
    if P.n is not None and P.n != A.n:
        raise DimensionError(f"preconditioner dimension {P.n} != operator dimension {A.n}")
    return _run_cd(A, b, y0, config, precond=P)


def preconditioned_spectrum_bounds(A, P: Preconditioner):
    """Extreme eigenvalues of ``M A`` (via the similar matrix ``L^T A L``, ``M = L L^T``)."""
    A = check_operator(A)
    m = P.to_dense(A.n)
    m = (m + m.T) / 2.0
    L = np.linalg.cholesky(m)
    w = np.linalg.eigvalsh(L.T @ A.to_dense() @ L)
    return float(w[0]), float(w[-1])


__all__ = [
    "Preconditioner", "Identity", "Jacobi", "CustomOperator", "apply_preconditioner",
    "jacobi_from_operator", "parse_preconditioner", "cd_m_solve", "preconditioned_spectrum_bounds",
]
