"""Conjugate-direction Krylov solvers for symmetric positive definite systems."""

from .exceptions import (
    CurvatureError, DimensionError, EstimateError, HistoryError, IncompleteBasisError,
    KrylovError, NotFullRankTrajectory, ParseError, SpecError,
)
from .gamma import (
    AbsA, CdRedRecursion, Constant, Custom, GammaContext, GammaStrategy, GeometricDecay,
    MinusA, NegAbsA, PlusA, ScaledCgMap, parse_gamma,
)
from .linalg import (
    SymmetricOperator, TestMatrixSpec, apply_operator, generate_test_matrix,
    read_matrix_market, spectrum_bounds, write_matrix_market,
)
from .precond import CustomOperator, Identity, Jacobi, cd_m_solve, jacobi_from_operator
from .solvers import (
    SolveConfig, SolveResult, SolveTrace, Status, cd_red_solve, cd_solve, cg_solve,
    hybrid_solve, scaled_cg_solve, solve,
)

from .diagnostics import BasisBundle, CheckReport, conjugacy_matrix, orthogonality_matrix
from .estimators import ConjugateDirectionSolver
from .tn_directions import NewtonDirections, assemble_directions, quadratic_model, truncation_test

__version__ = "0.1.0"
