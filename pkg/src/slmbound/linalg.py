"""Minimal dense linear algebra used by every other module.

Gram matrices, SPD solves, left pseudo-inverses, orthogonal projectors and
a column-subset rank test.  All functions are pure, operate on small dense
float64 arrays, and signal numerical rank problems with
:class:`~slmbound.errors.SingularMatrixError`.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularMatrixError

__all__ = [
    "as_matrix",
    "as_vector",
    "gram",
    "spd_factor",
    "spd_solve",
    "sym_solve",
    "pseudo_inverse",
    "projector",
    "spark_exceeds",
]

Float = NDArray[np.float64]

# Cholesky pivots below RELATIVE_PIVOT_TOL * trace(G) / S count as zero.
RELATIVE_PIVOT_TOL = 1e-12

# Column-subset rank decisions use RANK_PIVOT_TOL * max column norm.
RANK_PIVOT_TOL = 1e-10


def as_matrix(a: ArrayLike, *, name: str = "matrix") -> Float:
    """Validate and return ``a`` as a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name} must contain only finite entries")
    return m


def as_vector(v: ArrayLike, *, name: str = "vector") -> Float:
    """Validate and return ``v`` as a finite 1-D float64 array."""
    w = np.asarray(v, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {w.shape}")
    if w.size and not np.all(np.isfinite(w)):
        raise ValueError(f"{name} must contain only finite entries")
    return w


def gram(a: ArrayLike) -> Float:
    """Return ``A^T A`` for an M x S matrix with M >= S >= 1.

    The product is symmetrized on output so downstream factorizations see
    an exactly symmetric matrix.
    """
    a = as_matrix(a, name="A")
    m, s = a.shape
    if not m >= s >= 1:
        raise ValueError(f"gram needs M >= S >= 1, got shape {m} x {s}")
    g = a.T @ a
    return 0.5 * (g + g.T)


def spd_factor(g: ArrayLike, *, name: str = "G"):
    """Cholesky-factor an SPD matrix, enforcing the library pivot tolerance.

    Returns an opaque factorization for :func:`spd_solve`.  Raises
    :class:`SingularMatrixError` when the factorization fails or any pivot
    falls below ``RELATIVE_PIVOT_TOL * trace(G) / S``.
    """
    g = as_matrix(g, name=name)
    s = g.shape[0]
    if g.shape[0] != g.shape[1]:
        raise ValueError(f"{name} must be square, got shape {g.shape}")
    tol = RELATIVE_PIVOT_TOL * np.trace(g) / s
    try:
        factor = cho_factor(g, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"{name} is not positive definite") from exc
    pivots = np.diag(factor[0]) ** 2
    if np.min(pivots) < tol:
        raise SingularMatrixError(
            f"{name} is numerically singular: pivot {np.min(pivots):.3e} "
            f"below tolerance {tol:.3e}"
        )
    return factor


def spd_solve(factor, b: ArrayLike) -> Float:
    """Solve with a factorization from :func:`spd_factor`."""
    return cho_solve(factor, np.asarray(b, dtype=np.float64))


def sym_solve(g: ArrayLike, b: ArrayLike) -> Float:
    """Solve ``G u = b`` for symmetric positive definite ``G``.

    One step of iterative refinement keeps the residual within
    ``1e-9 * (1 + max|b|)`` in the infinity norm.
    """
    g = as_matrix(g, name="G")
    b = as_vector(b, name="b")
    if g.shape[0] != b.shape[0]:
        raise ValueError(f"G is {g.shape} but b has length {b.shape[0]}")
    factor = spd_factor(g)
    u = spd_solve(factor, b)
    residual = b - g @ u
    if np.max(np.abs(residual), initial=0.0) > 0.5e-9 * (1.0 + np.max(np.abs(b), initial=0.0)):
        u = u + spd_solve(factor, residual)
    return u


def pseudo_inverse(a: ArrayLike) -> Float:
    """Left pseudo-inverse ``(A^T A)^{-1} A^T`` of a full-column-rank matrix."""
    a = as_matrix(a, name="A")
    factor = spd_factor(gram(a), name="A^T A")
    return spd_solve(factor, a.T)


def projector(a: ArrayLike) -> Float:
    """Orthogonal projector onto the column span of ``a``.

    Symmetric and idempotent to within 1e-9 per entry for well-conditioned
    input; symmetrized on output.
    """
    a = as_matrix(a, name="A")
    p = a @ pseudo_inverse(a)
    return 0.5 * (p + p.T)


def spark_exceeds(h: ArrayLike, s: int) -> bool:
    """True iff every subset of ``s`` columns of ``h`` is linearly independent.

    Rank is decided by Gaussian elimination with partial pivoting; a pivot
    at or below ``RANK_PIVOT_TOL * max column norm`` ends the elimination.
    Identity matrices short-circuit to True, and the subset enumeration is
    exhaustive otherwise, so keep N modest (tests use N <= 10).
    """
    h = as_matrix(h, name="H")
    m, n = h.shape
    if not isinstance(s, (int, np.integer)):
        raise ValueError("S must be an integer")
    if not 1 <= s < n:
        raise ValueError(f"need 1 <= S < N, got S={s}, N={n}")
    if s > m:
        return False  # s vectors in R^m with s > m are always dependent
    if m == n and np.array_equal(h, np.eye(m)):
        return True
    threshold = RANK_PIVOT_TOL * float(np.max(np.linalg.norm(h, axis=0)))
    for cols in combinations(range(n), s):
        if _column_rank(h[:, cols], threshold) < s:
            return False
    return True


def _column_rank(a: Float, pivot_tol: float) -> int:
    """Rank of a tall-thin matrix by elimination with partial pivoting."""
    work = a.copy()
    m, s = work.shape
    rank = 0
    for col in range(s):
        pivot_row = rank + int(np.argmax(np.abs(work[rank:, col])))
        pivot = abs(work[pivot_row, col])
        if pivot <= pivot_tol:
            return rank
        if pivot_row != rank:
            work[[rank, pivot_row]] = work[[pivot_row, rank]]
        below = work[rank + 1 :, col] / work[rank, col]
        work[rank + 1 :, col:] -= np.outer(below, work[rank, col:])
        rank += 1
        if rank == m:
            break
    return rank
