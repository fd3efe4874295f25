"""Input coercion shared by the solvers, diagnostics and estimators."""

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionError, SpecError
from .linalg import SymmetricOperator


def check_operator(A, symmetrize=False) -> SymmetricOperator:
    """Coerce ``A`` to a :class:`SymmetricOperator`.

    Accepts an operator, a dense array-like, a scipy sparse matrix, or a
    ``(callable, n)`` pair.
    """
    if isinstance(A, SymmetricOperator):
        return A
    if sp.issparse(A):
        return SymmetricOperator.from_sparse(A)
    if isinstance(A, tuple) and len(A) == 2 and callable(A[0]):
        return SymmetricOperator.from_callback(A[0], int(A[1]))
    if callable(A):
        raise SpecError("a bare callable needs its dimension: pass (fn, n)")
    return SymmetricOperator.from_dense(A, symmetrize=symmetrize)


def check_vector(v, n, name="vector") -> np.ndarray:
    """Return ``v`` as a fresh finite float64 array of length ``n``."""
    out = np.array(v, dtype=np.float64, copy=True)
    if out.ndim != 1 or out.shape[0] != n:
        raise DimensionError(f"{name} has shape {out.shape}, expected ({n},)")
    if not np.all(np.isfinite(out)):
        raise SpecError(f"{name} has non-finite entries")
    return out


def check_system(A, b, y0=None):
    """Validate a linear system; a missing ``y0`` becomes the zero vector."""
    A = check_operator(A)
    b = check_vector(b, A.n, "b")
    y0 = np.zeros(A.n) if y0 is None else check_vector(y0, A.n, "y0")
    return A, b, y0
