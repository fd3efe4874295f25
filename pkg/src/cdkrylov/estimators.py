"""scikit-learn style wrapper: ``fit`` binds the operator, ``predict`` solves."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_operator
from .exceptions import DimensionError, SpecError
from .precond import Preconditioner, parse_preconditioner
from .solvers import SolveConfig, solve


class ConjugateDirectionSolver(BaseEstimator):
    """Solve ``A y = b`` with any method of the package.

    ``fit(A)`` validates and stores the operator; ``fit(A, b)`` also solves
    once and keeps the result. ``predict(B)`` solves for one right-hand side
    (1-D) or for each row of a 2-D array.

    Parameters mirror :class:`SolveConfig`; ``preconditioner`` is ``None``,
    ``"jacobi"``, ``"file:<path>"`` or a :class:`Preconditioner`.
    """

    def __init__(self, method="cd", gamma="neg-a", preconditioner=None, tol=1e-10, max_iter=None,
                 rho=None, cg_steps=(), store_basis=False):
        self.method = method
        self.gamma = gamma
        self.preconditioner = preconditioner
        self.tol = tol
        self.max_iter = max_iter
        self.rho = rho
        self.cg_steps = cg_steps
        self.store_basis = store_basis

    def _config(self):
        return SolveConfig(method=self.method, gamma=self.gamma, tol_rel=self.tol, max_iters=self.max_iter,
                           cg_steps=frozenset(self.cg_steps), store_basis=self.store_basis)

    def fit(self, A, b=None):
        self.config_ = self._config()
        self.operator_ = check_operator(A)
        self.n_features_in_ = self.operator_.n
        if isinstance(self.preconditioner, Preconditioner) or self.preconditioner is None:
            self.preconditioner_ = self.preconditioner
        elif isinstance(self.preconditioner, str):
            self.preconditioner_ = parse_preconditioner(self.preconditioner, self.operator_)
        else:
            raise SpecError(f"cannot interpret preconditioner {self.preconditioner!r}")
        if b is not None:
            self.result_ = self._solve(b)
            self.solution_ = self.result_.y
            self.n_iter_ = self.result_.iters
            self.status_ = self.result_.status
        return self

    def _solve(self, b):
        return solve(self.operator_, b, config=self.config_, preconditioner=self.preconditioner_, rho=self.rho)

    def predict(self, B):
        check_is_fitted(self, "operator_")
        B = np.asarray(B, dtype=np.float64)
        if B.ndim == 1:
            return self._solve(B).y
        if B.ndim != 2 or B.shape[1] != self.n_features_in_:
            raise DimensionError(f"expected shape (n_rhs, {self.n_features_in_}), got {B.shape}")
        return np.vstack([self._solve(row).y for row in B])

    def score(self, B, Y=None):
        """Negative mean relative residual ``||b - A y|| / ||b||`` over the rows of ``B``."""
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        Y = np.atleast_2d(self.predict(B) if Y is None else np.asarray(Y, dtype=np.float64))
        res = [np.linalg.norm(b - self.operator_.apply(y)) / max(np.linalg.norm(b), np.finfo(float).tiny)
               for b, y in zip(B, Y)]
        return -float(np.mean(res))


__all__ = ["ConjugateDirectionSolver"]
