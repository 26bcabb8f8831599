"""Dense/sparse linear-algebra kernels with explicit numerical contracts.

Everything downstream (model assembly, forcing compression, Krylov
enrichment, transient marching, control) builds on the handful of
operations in this module.  All dense data is 64-bit float, column-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import NotPositiveDefinite, ShapeError

__all__ = [
    "as_dense",
    "require_symmetric",
    "sparse_from_triplets",
    "CholeskyFactor",
    "cholesky_factor",
    "EigDecomposition",
    "sym_generalized_eig",
    "truncated_svd",
    "least_squares_minnorm",
    "block_orthonormalize",
    "write_morb",
    "read_morb",
]

#: Relative singular-value cutoff used for all pseudo-inverse rank decisions.
PINV_CUTOFF = 1e-12

#: Relative asymmetry tolerated before symmetrization is refused.
SYMMETRY_TOL = 1e-12

MORB_MAGIC = b"MORB"


def as_dense(a, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite, column-major float64 2-D array."""
    arr = np.asfortranarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1, order="F")
    if arr.ndim != 2:
        raise ShapeError(f"{name}: expected a 2-D array, got ndim={arr.ndim}")
    if arr.size and not np.isfinite(arr).all():
        raise ShapeError(f"{name}: non-finite entries")
    return arr


def require_symmetric(a, tol: float = SYMMETRY_TOL, *, name: str = "matrix") -> np.ndarray:
    """Return the symmetrized (A + A^T)/2 copy of a nearly-symmetric matrix.

    Asymmetry above ``tol`` relative to the matrix norm is an error rather
    than something to silently average away: it signals accumulation drift
    in a projected operator, not round-off.
    """
    arr = as_dense(a, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"{name}: not square, shape {arr.shape}")
    scale = np.linalg.norm(arr)
    skew = np.linalg.norm(arr - arr.T)
    if scale > 0 and skew > tol * scale:
        raise ShapeError(f"{name}: asymmetry {skew / scale:.3e} exceeds {tol:.1e}")
    return np.asfortranarray((arr + arr.T) / 2.0)


def sparse_from_triplets(rows, cols, values, shape) -> scipy.sparse.csr_matrix:
    """Build a CSR matrix from (row, col, value) triplets, summing duplicates."""
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    values = np.asarray(values, dtype=np.float64)
    if values.size and not np.isfinite(values).all():
        raise ShapeError("sparse triplets: non-finite values")
    if rows.size and (rows.min() < 0 or rows.max() >= shape[0]):
        raise ShapeError("sparse triplets: row index out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= shape[1]):
        raise ShapeError("sparse triplets: col index out of range")
    coo = scipy.sparse.coo_matrix((values, (rows, cols)), shape=shape)
    return coo.tocsr()  # duplicate triplets are summed here


class CholeskyFactor:
    """Reusable Cholesky factorization of an SPD matrix.

    Factor once, then call :meth:`solve` for as many right-hand sides as
    needed.  Sparse input is densified first; at desk scale the cubic
    factorization cost is negligible and a single code path keeps the
    error contract uniform.
    """

    def __init__(self, a):
        if scipy.sparse.issparse(a):
            a = a.toarray()
        a = require_symmetric(a, name="cholesky operand")
        try:
            self._c, self._lower = scipy.linalg.cho_factor(a, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc
        self.shape = a.shape

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        vector = b.ndim == 1
        if b.shape[0] != self.shape[0]:
            raise ShapeError(
                f"solve: rhs has {b.shape[0]} rows, factor is {self.shape[0]}x{self.shape[1]}"
            )
        x = scipy.linalg.cho_solve((self._c, self._lower), b)
        return x if vector else np.asfortranarray(x)


def cholesky_factor(a) -> CholeskyFactor:
    """Factor an SPD matrix once; raises NotPositiveDefinite on failure."""
    return CholeskyFactor(a)


@dataclass(frozen=True)
class EigDecomposition:
    """Generalized symmetric eigendecomposition L phi = lambda R phi.

    ``eigenvectors`` is R-orthonormal: Phi^T R Phi = I, Phi^T L Phi = diag(eigenvalues).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_generalized_eig(lm, rm) -> EigDecomposition:
    """Solve the SPD generalized eigenproblem ``lm @ phi = lam * rm @ phi``."""
    lm = require_symmetric(lm, name="L operand")
    rm = require_symmetric(rm, name="R operand")
    if lm.shape != rm.shape:
        raise ShapeError(f"eig: shapes differ, {lm.shape} vs {rm.shape}")
    try:
        w, v = scipy.linalg.eigh(lm, rm)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    if w.size and w.min() <= 0.0:
        raise NotPositiveDefinite(f"eig: non-positive eigenvalue {w.min():.3e}")
    return EigDecomposition(eigenvalues=w, eigenvectors=np.asfortranarray(v))


def truncated_svd(b, tol: float):
    """Energy-truncated SVD of a dense matrix.

    Returns ``(u, s, w)`` with ``b ~ u @ diag(s) @ w.T``.  The retained
    rank r is the smallest value whose discarded tail satisfies
    ``sum(s[r:]**2) <= tol**2 * sum(s**2)``.  An empty input yields a
    rank-0 result rather than an error.
    """
    if not 0.0 <= tol <= 1.0:
        raise ShapeError(f"truncated_svd: tol {tol} outside [0, 1]")
    b = as_dense(b, name="svd operand")
    m, n = b.shape
    if m == 0 or n == 0:
        return (
            np.zeros((m, 0), order="F"),
            np.zeros(0),
            np.zeros((n, 0), order="F"),
        )
    u, s, vt = scipy.linalg.svd(b, full_matrices=False)
    energy = s**2
    total = energy.sum()
    if total == 0.0:
        rank = 0
    else:
        # tail[r] = energy discarded when keeping the first r values
        tail = total - np.cumsum(energy)
        rank = len(s)
        for r in range(len(s) + 1):
            discarded = total if r == 0 else tail[r - 1]
            if discarded <= tol**2 * total:
                rank = r
                break
    return (
        np.asfortranarray(u[:, :rank]),
        s[:rank].copy(),
        np.asfortranarray(vt[:rank].T),
    )


def least_squares_minnorm(d, b) -> np.ndarray:
    """Minimum-norm least-squares solution ``x = pinv(d) @ b``.

    Works for any shape including rank-deficient and all-zero matrices;
    singular values at or below ``PINV_CUTOFF * sigma_max`` are treated
    as zero.
    """
    d = as_dense(d, name="lstsq operand")
    b = np.asarray(b, dtype=np.float64)
    vector = b.ndim == 1
    if b.shape[0] != d.shape[0]:
        raise ShapeError(f"lstsq: rhs has {b.shape[0]} rows, matrix has {d.shape[0]}")
    x, *_ = np.linalg.lstsq(d, b, rcond=PINV_CUTOFF)
    return x if vector else np.asfortranarray(x)


def block_orthonormalize(w, v=None, droptol: float = 1e-10) -> np.ndarray:
    """Orthonormalize the columns of ``w`` against ``v`` and each other.

    Classical Gram-Schmidt applied twice per column (twice is enough to
    restore orthogonality lost to cancellation), then normalization.
    Columns whose post-projection norm falls below ``droptol`` times
    their pre-projection norm are dropped; the result may be empty.
    ``v`` must already have orthonormal columns (or be None/empty).
    """
    w = as_dense(w, name="block operand")
    n = w.shape[0]
    if v is None:
        v = np.zeros((n, 0), order="F")
    else:
        v = as_dense(v, name="basis operand")
        if v.shape[0] != n:
            raise ShapeError(f"orthonormalize: {w.shape[0]} rows vs basis {v.shape[0]}")
    accepted: list[np.ndarray] = []
    for j in range(w.shape[1]):
        col = w[:, j].copy()
        pre = np.linalg.norm(col)
        if pre == 0.0:
            continue
        for _ in range(2):
            if v.shape[1]:
                col -= v @ (v.T @ col)
            for q in accepted:
                col -= q * (q @ col)
        post = np.linalg.norm(col)
        if post < droptol * pre:
            continue
        accepted.append(col / post)
    if not accepted:
        return np.zeros((n, 0), order="F")
    return np.asfortranarray(np.column_stack(accepted))


# ---------------------------------------------------------------------------
# MORB binary matrix file: magic "MORB", u64-le rows, u64-le cols, then
# rows*cols float64-le entries in column-major order.
# ---------------------------------------------------------------------------


def write_morb(path, a) -> None:
    """Persist a dense matrix in the MORB binary format."""
    a = as_dense(a, name="morb payload")
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(MORB_MAGIC)
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(a.tobytes(order="F"))


def read_morb(path) -> np.ndarray:
    """Load a dense matrix written by :func:`write_morb`."""
    raw = Path(path).read_bytes()
    if raw[:4] != MORB_MAGIC:
        raise ShapeError(f"{path}: not a MORB file")
    rows, cols = struct.unpack("<QQ", raw[4:20])
    expected = 20 + rows * cols * 8
    if len(raw) != expected:
        raise ShapeError(f"{path}: payload size {len(raw)} != expected {expected}")
    flat = np.frombuffer(raw, dtype="<f8", offset=20)
    return np.asfortranarray(flat.reshape((rows, cols), order="F"))
