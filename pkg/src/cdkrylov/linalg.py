"""Symmetric operators, Matrix Market I/O and reproducible SPD test matrices.

Three storage kinds share one interface:

* ``dense``    -- a full ``n x n`` array, exactly symmetric;
* ``sparse``   -- diagonal plus strict upper triangle in CSR, mirrored on apply;
* ``callback`` -- any routine ``v -> A v`` with a declared dimension.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionError, EstimateError, ParseError, SpecError

DENSE_EIG_LIMIT = 2000


class SymmetricOperator:
    """A symmetric linear map ``v -> A v`` of dimension ``n``.

    Build instances with :meth:`from_dense`, :meth:`from_upper`,
    :meth:`from_sparse` or :meth:`from_callback`; the constructor itself is
    private. Instances are immutable.
    """

    __slots__ = ("kind", "n", "_dense", "_diag", "_upper", "_fn")

    def __init__(self, kind, n, dense=None, diag=None, upper=None, fn=None):
        if n < 1:
            raise SpecError("operator dimension must be >= 1")
        self.kind = kind
        self.n = int(n)
        self._dense = dense
        self._diag = diag
        self._upper = upper
        self._fn = fn

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dense(cls, matrix, symmetrize=False):
        """Wrap a dense symmetric array.

        Asymmetric input raises :class:`SpecError` unless ``symmetrize`` is
        set, in which case ``(M + M^T) / 2`` is stored (exactly symmetric).
        """
        m = np.array(matrix, dtype=np.float64, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise SpecError("matrix has non-finite entries")
        if symmetrize:
            m = (m + m.T) / 2.0
        elif not np.array_equal(m, m.T):
            raise SpecError("matrix is not exactly symmetric")
        m.setflags(write=False)
        return cls("dense", m.shape[0], dense=m)

    @classmethod
    def from_upper(cls, n, rows, cols, values):
        """Sparse operator from triplets on or above the diagonal (0-based).

        Triplets below the diagonal are mirrored to the upper triangle;
        repeated positions are summed.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise DimensionError("rows, cols and values must have equal length")
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise DimensionError("triplet index out of range")
        if not np.all(np.isfinite(values)):
            raise SpecError("matrix has non-finite entries")
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        on_diag = lo == hi
        diag = np.zeros(n)
        np.add.at(diag, lo[on_diag], values[on_diag])
        off = ~on_diag
        upper = sp.csr_matrix((values[off], (lo[off], hi[off])), shape=(n, n))
        upper.sum_duplicates()
        upper.eliminate_zeros()
        diag.setflags(write=False)
        return cls("sparse", n, diag=diag, upper=upper)

    @classmethod
    def from_sparse(cls, matrix):
        """Sparse operator from a full scipy sparse matrix (must be symmetric)."""
        m = sp.csr_matrix(matrix, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if (m - m.T).count_nonzero():
            raise SpecError("matrix is not exactly symmetric")
        coo = sp.triu(m).tocoo()
        return cls.from_upper(m.shape[0], coo.row, coo.col, coo.data)

    @classmethod
    def from_callback(cls, fn: Callable[[np.ndarray], np.ndarray], n: int):
        """Matrix-free operator; symmetry of ``fn`` is the caller's promise."""
        return cls("callback", n, fn=fn)

    # -- application --------------------------------------------------------

    def apply(self, v):
        return apply_operator(self, v)

    def __matmul__(self, v):
        return apply_operator(self, v)

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def is_explicit(self):
        return self.kind != "callback"

    def diagonal(self):
        if self.kind == "dense":
            return np.diag(self._dense).copy()
        if self.kind == "sparse":
            return self._diag.copy()
        e = np.zeros(self.n)
        out = np.empty(self.n)
        for i in range(self.n):
            e[i] = 1.0
            out[i] = apply_operator(self, e)[i]
            e[i] = 0.0
        return out

    def to_dense(self):
        """Materialize the full matrix (callbacks: one application per column)."""
        if self.kind == "dense":
            return np.array(self._dense)
        if self.kind == "sparse":
            u = self._upper.toarray()
            return u + u.T + np.diag(self._diag)
        cols = [apply_operator(self, e) for e in np.eye(self.n)]
        return np.column_stack(cols)

    def upper_entries(self):
        """Sorted ``(row, col, value)`` triplets with ``row <= col`` (0-based)."""
        if self.kind == "sparse":
            coo = self._upper.tocoo()
            d_idx = np.flatnonzero(self._diag)
            rows = np.concatenate([d_idx, coo.row])
            cols = np.concatenate([d_idx, coo.col])
            vals = np.concatenate([self._diag[d_idx], coo.data])
        else:
            m = self.to_dense()
            rows, cols = np.triu_indices(self.n)
            vals = m[rows, cols]
            keep = vals != 0.0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        order = np.lexsort((cols, rows))
        return rows[order], cols[order], vals[order]

    def as_linear_operator(self):
        """A :class:`scipy.sparse.linalg.LinearOperator` view."""
        from scipy.sparse.linalg import LinearOperator

        return LinearOperator(self.shape, matvec=self.apply, rmatvec=self.apply, dtype=np.float64)

    def __repr__(self):
        return f"SymmetricOperator(kind={self.kind!r}, n={self.n})"


def apply_operator(A: SymmetricOperator, v) -> np.ndarray:
    """Return ``A v``. Sparse storage applies the upper triangle twice."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.n,):
        raise DimensionError(f"vector of shape {v.shape} does not match operator dimension {A.n}")
    if A.kind == "dense":
        return A._dense @ v
    if A.kind == "sparse":
        u = A._upper
        return A._diag * v + u @ v + u.T @ v
    out = np.asarray(A._fn(v), dtype=np.float64)
    if out.shape != (A.n,):
        raise DimensionError(f"callback returned shape {out.shape}, expected ({A.n},)")
    return out


def scale_symmetric(A: SymmetricOperator, s) -> SymmetricOperator:
    """Return ``S A S`` with ``S = diag(s)``; keeps the storage kind."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (A.n,):
        raise DimensionError("scaling vector has the wrong length")
    if A.kind == "sparse":
        coo = A._upper.tocoo()
        rows = np.concatenate([np.arange(A.n), coo.row])
        cols = np.concatenate([np.arange(A.n), coo.col])
        vals = np.concatenate([A._diag * s * s, coo.data * s[coo.row] * s[coo.col]])
        return SymmetricOperator.from_upper(A.n, rows, cols, vals)
    m = A.to_dense()
    return SymmetricOperator.from_dense(s[:, None] * m * s[None, :], symmetrize=True)


# -- Matrix Market ------------------------------------------------------------

_BANNER = "%%matrixmarket"


def read_matrix_market(path) -> SymmetricOperator:
    """Read a ``real symmetric`` Matrix Market file.

    Coordinate files give a sparse operator, array files a dense one. Either
    triangle is accepted for coordinate entries.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != _BANNER:
        raise ParseError("missing %%MatrixMarket banner", line=1)
    obj, fmt, field, symm = (t.lower() for t in head[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", line=1)
    if fmt not in ("coordinate", "array"):
        raise ParseError(f"unsupported format {fmt!r}", line=1)
    if field not in ("real", "double", "integer"):
        raise ParseError(f"unsupported field {field!r}", line=1)
    if symm != "symmetric":
        raise ParseError(f"declared structure {symm!r} is not symmetric", line=1)

    body = [(i + 1, ln) for i, ln in enumerate(lines[1:], start=1) if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise ParseError("missing size line", line=len(lines))
    size_no, size_line = body[0]
    try:
        dims = [int(t) for t in size_line.split()]
    except ValueError:
        raise ParseError("size line is not integral", line=size_no) from None
    if fmt == "coordinate":
        if len(dims) != 3:
            raise ParseError("coordinate size line needs 'rows cols entries'", line=size_no)
        nrows, ncols, nnz = dims
    else:
        if len(dims) != 2:
            raise ParseError("array size line needs 'rows cols'", line=size_no)
        nrows, ncols = dims
        nnz = nrows * (nrows + 1) // 2
    if nrows != ncols or nrows < 1:
        raise ParseError(f"symmetric matrix must be square, got {nrows}x{ncols}", line=size_no)
    n = nrows
    entries = body[1:]
    if len(entries) != nnz:
        last = entries[-1][0] if entries else size_no
        raise ParseError(f"expected {nnz} entries, found {len(entries)}", line=last)

    if fmt == "array":
        m = np.zeros((n, n))
        pos = [(i, j) for j in range(n) for i in range(j, n)]
        for (line_no, text), (i, j) in zip(entries, pos):
            toks = text.split()
            if len(toks) != 1:
                raise ParseError("array entry must hold one value", line=line_no)
            m[i, j] = m[j, i] = _parse_float(toks[0], line_no)
        return SymmetricOperator.from_dense(m)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    seen = set()
    for k, (line_no, text) in enumerate(entries):
        toks = text.split()
        if len(toks) != 3:
            raise ParseError("coordinate entry must be 'row col value'", line=line_no)
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise ParseError("entry indices are not integral", line=line_no) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"index ({i}, {j}) out of range for n={n}", line=line_no)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(f"duplicate entry at ({i}, {j})", line=line_no)
        seen.add(key)
        rows[k], cols[k], vals[k] = i - 1, j - 1, _parse_float(toks[2], line_no)
    return SymmetricOperator.from_upper(n, rows, cols, vals)


def _parse_float(tok, line_no):
    try:
        x = float(tok)
    except ValueError:
        raise ParseError(f"bad numeric value {tok!r}", line=line_no) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite value {tok!r}", line=line_no)
    return x


def write_matrix_market(A: SymmetricOperator, path, comment: Optional[str] = None) -> None:
    """Write the upper triangle in coordinate format with round-trip floats."""
    rows, cols, vals = A.upper_entries()
    out = ["%%MatrixMarket matrix coordinate real symmetric"]
    if comment:
        out.extend("% " + ln for ln in comment.splitlines())
    out.append(f"{A.n} {A.n} {len(vals)}")
    out.extend(f"{i + 1} {j + 1} {float(v)!r}" for i, j, v in zip(rows, cols, vals))
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write("\n".join(out) + "\n")
    os.replace(tmp, path)


# -- generators ---------------------------------------------------------------

MATRIX_KINDS = ("laplacian1d", "diag-geom", "diag-linear", "random-spd")


@dataclass(frozen=True)
class TestMatrixSpec:
    """Recipe for a reproducible SPD matrix.

    ``cond`` is ignored by ``laplacian1d``; ``seed`` only matters for
    ``random-spd``.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    kind: str
    n: int
    cond: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MATRIX_KINDS:
            raise SpecError(f"unknown matrix kind {self.kind!r}; expected one of {MATRIX_KINDS}")
        if self.n < 1:
            raise SpecError("n must be >= 1")
        if not (self.cond >= 1.0) or not math.isfinite(self.cond):
            raise SpecError(f"cond must be a finite value >= 1, got {self.cond}")


def geometric_spectrum(n, cond):
    """``cond**(i/(n-1))`` for ``i = 0..n-1``; smallest value exactly 1."""
    if n == 1:
        return np.ones(1)
    return float(cond) ** (np.arange(n) / (n - 1))


def linear_spectrum(n, cond):
    if n == 1:
        return np.ones(1)
    return 1.0 + (float(cond) - 1.0) * np.arange(n) / (n - 1)


def generate_test_matrix(spec: TestMatrixSpec) -> SymmetricOperator:
    n = spec.n
    if spec.kind == "laplacian1d":
        idx = np.arange(n)
        rows = np.concatenate([idx, idx[:-1]])
        cols = np.concatenate([idx, idx[1:]])
        vals = np.concatenate([np.full(n, 2.0), np.full(n - 1, -1.0)])
        return SymmetricOperator.from_upper(n, rows, cols, vals)
    if spec.kind in ("diag-geom", "diag-linear"):
        lam = geometric_spectrum(n, spec.cond) if spec.kind == "diag-geom" else linear_spectrum(n, spec.cond)
        idx = np.arange(n)
        return SymmetricOperator.from_upper(n, idx, idx, lam)
    # random-spd: Q^T D Q with Haar-distributed Q
    rng = np.random.default_rng(spec.seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    lam = geometric_spectrum(n, spec.cond)
    m = q.T @ (lam[:, None] * q)
    return SymmetricOperator.from_dense(m, symmetrize=True)


def diagonal_operator(values) -> SymmetricOperator:
    values = np.asarray(values, dtype=np.float64)
    idx = np.arange(values.size)
    return SymmetricOperator.from_upper(values.size, idx, idx, values)


# -- spectrum -----------------------------------------------------------------


def spectrum_bounds(A: SymmetricOperator, dense_limit=DENSE_EIG_LIMIT, tol=1e-8, max_iter=None):
    """Return ``(lambda_min, lambda_max)``.

    Up to ``dense_limit`` the operator is densified and handed to a symmetric
    eigensolver. Above it, power iteration estimates ``lambda_max`` and a
    shifted power iteration on ``lambda_max I - A`` estimates ``lambda_min``;
    both stop when the Rayleigh quotient changes by less than ``tol``
    relative, after at most ``max_iter`` (default ``10 n``) steps.
    """
    if A.n <= dense_limit:
        w = np.linalg.eigvalsh(A.to_dense())
        return float(w[0]), float(w[-1])

    max_iter = 10 * A.n if max_iter is None else max_iter
    rng = np.random.default_rng(0)
    lam_max, ok_max = _power(lambda v: apply_operator(A, v), A.n, tol, max_iter, rng)
    shift = lam_max
    mu, ok_min = _power(lambda v: shift * v - apply_operator(A, v), A.n, tol, max_iter, rng)
    lam_min = shift - mu
    if not (ok_max and ok_min):
        raise EstimateError("power iteration did not converge", partial=(lam_min, lam_max))
    return lam_min, lam_max


def _power(matvec, n, tol, max_iter, rng):
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, True
        v = w / nw
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return new, True
        lam = new
    return lam, False


def condition_number(A: SymmetricOperator, **kwargs) -> float:
    lo, hi = spectrum_bounds(A, **kwargs)
    return hi / lo
