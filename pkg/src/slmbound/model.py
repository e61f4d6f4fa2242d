"""Sparse linear model instances and the index-set machinery around them.

Defines the observation models (general linear Gaussian, and the sparse
model with a spark-validated sensing matrix), ordered support sets, the
embedding of low-dimensional coordinates onto a support, the
largest-entry statistics ``xi`` and ``j``, the isometry quantities
``(s0, beta)`` attached to a support, the two exponential kernels, and
noise whitening.

Index convention: supports, component indices and ``j`` are 1-based in
every public interface; arrays are stored 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import cholesky, solve_triangular

from . import rng
from .errors import SingularMatrixError
from .linalg import as_matrix, as_vector, pseudo_inverse, spark_exceeds

__all__ = [
    "LinearGaussianModel",
    "SparseLinearModel",
    "ssnm",
    "Support",
    "support_of",
    "require_sparsity",
    "xi_and_j",
    "submatrix",
    "embed",
    "restrict",
    "IsometryData",
    "isometry_data",
    "kernel_slm",
    "kernel_lgm",
    "whiten",
    "gaussian_matrix",
]


@dataclass(frozen=True, eq=False)
class LinearGaussianModel:
    """Observation ``z = A s + n`` with ``n ~ N(0, sigma2 I)``, no sparsity."""

    h: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "h", as_matrix(self.h, name="H"))
        sigma2 = float(self.sigma2)
        if not sigma2 > 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def m(self) -> int:
        return self.h.shape[0]

    @property
    def n(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True, eq=False)
class SparseLinearModel(LinearGaussianModel):
    """``y = H x + n`` with ``x`` at most ``sparsity``-sparse.

    Construction checks the spark condition: every set of ``sparsity``
    columns of ``H`` must be linearly independent.
    """

    sparsity: int

    def __post_init__(self):
        super().__post_init__()
        s = self.sparsity
        if not isinstance(s, (int, np.integer)) or not 1 <= s < self.n:
            raise ValueError(f"sparsity must satisfy 1 <= S < N, got {s}")
        object.__setattr__(self, "sparsity", int(s))
        if not spark_exceeds(self.h, self.sparsity):
            raise ValueError("H violates the spark condition: some "
                             f"{self.sparsity}-column subset is dependent")

    @property
    def is_ssnm(self) -> bool:
        """True when H is the identity (direct noisy observation)."""
        return self.m == self.n and np.array_equal(self.h, np.eye(self.m))


def ssnm(n: int, sigma2: float, sparsity: int) -> SparseLinearModel:
    """The sparse-signal-in-noise special case, ``H = I``."""
    return SparseLinearModel(np.eye(n), sigma2, sparsity)


@dataclass(frozen=True)
class Support:
    """Ordered set of distinct 1-based column indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise ValueError("a support must contain at least one index")
        if any(i < 1 for i in idx):
            raise ValueError(f"support indices are 1-based, got {idx}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"support indices must be strictly increasing, got {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Support":
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @property
    def size(self) -> int:
        return len(self.indices)

    def zero_based(self) -> tuple[int, ...]:
        return tuple(i - 1 for i in self.indices)

    def check_within(self, n: int) -> None:
        if self.indices[-1] > n:
            raise ValueError(f"support {self.indices} exceeds dimension {n}")

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


def support_of(x: ArrayLike) -> tuple[int, ...]:
    """1-based indices of the nonzero entries of ``x``."""
    x = as_vector(x, name="x")
    return tuple(int(i) + 1 for i in np.flatnonzero(x))


def require_sparsity(x: ArrayLike, sparsity: int, *, name: str = "x") -> np.ndarray:
    """Validate that ``x`` has at most ``sparsity`` nonzeros."""
    x = as_vector(x, name=name)
    nnz = int(np.count_nonzero(x))
    if nnz > sparsity:
        raise ValueError(f"{name} has {nnz} nonzeros, more than S = {sparsity}")
    return x


def xi_and_j(x0: ArrayLike, sparsity: int) -> tuple[float, int]:
    """Value and 1-based index of the S-largest-magnitude entry of ``x0``.

    When ``x0`` has fewer than S nonzeros the value is 0 and the index is
    the smallest index outside the support (determinism placeholder).
    Magnitude ties go to the smaller index.
    """
    x0 = require_sparsity(x0, sparsity, name="x0")
    n = x0.shape[0]
    if sparsity < 1:
        raise ValueError("sparsity must be at least 1")
    nonzeros = np.flatnonzero(x0)
    if nonzeros.shape[0] < sparsity:
        zero_positions = np.flatnonzero(x0 == 0.0)
        return 0.0, int(zero_positions[0]) + 1
    # stable sort on descending magnitude keeps smaller indices first on ties
    order = np.argsort(-np.abs(x0), kind="stable")
    j = int(order[sparsity - 1])
    return float(x0[j]), j + 1


def submatrix(h: ArrayLike, k_set: Support) -> np.ndarray:
    """Columns of ``h`` selected by the support, in support order."""
    h = as_matrix(h, name="H")
    k_set.check_within(h.shape[1])
    return h[:, k_set.zero_based()]


def embed(s: ArrayLike, k_set: Support, n: int) -> np.ndarray:
    """Vector with the entries of ``s`` at positions ``k_set``, zeros elsewhere."""
    s = as_vector(s, name="s")
    if s.shape[0] != k_set.size:
        raise ValueError(f"s has length {s.shape[0]} but the support has size {k_set.size}")
    k_set.check_within(n)
    x = np.zeros(n)
    x[list(k_set.zero_based())] = s
    return x


def restrict(x: ArrayLike, k_set: Support) -> np.ndarray:
    """Entries of ``x`` at the support positions; exact inverse of embed."""
    x = as_vector(x, name="x")
    k_set.check_within(x.shape[0])
    return x[list(k_set.zero_based())]


@dataclass(frozen=True, eq=False)
class IsometryData:
    """Support-relative coordinates of a parameter point.

    ``s0`` solves the normal equations for ``H_K s = H x0``;
    ``residual_energy`` is the squared distance from ``H x0`` to the range
    of ``H_K``; ``beta = exp(-residual_energy / (2 sigma2))`` lies in (0, 1].
    """

    s0: np.ndarray
    beta: float
    residual_energy: float


def isometry_data(model: SparseLinearModel, k_set: Support, x0: ArrayLike) -> IsometryData:
    """Compute ``s0``, the projection residual energy, and ``beta``."""
    if k_set.size != model.sparsity:
        raise ValueError(f"support size {k_set.size} != model sparsity {model.sparsity}")
    k_set.check_within(model.n)
    x0 = require_sparsity(x0, model.sparsity, name="x0")
    if x0.shape[0] != model.n:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {model.n}")
    h_k = submatrix(model.h, k_set)
    hx0 = model.h @ x0
    s0 = pseudo_inverse(h_k) @ hx0  # spark condition keeps the Gram SPD
    residual = hx0 - h_k @ s0
    energy = float(residual @ residual)
    beta = float(np.exp(-energy / (2.0 * model.sigma2)))
    return IsometryData(s0=s0, beta=beta, residual_energy=energy)


def kernel_slm(x: ArrayLike, x2: ArrayLike, x0: ArrayLike, model: LinearGaussianModel) -> float:
    """``exp((x - x0)^T H^T H (x2 - x0) / sigma2)``; 1 whenever an argument is x0."""
    x = as_vector(x, name="x")
    x2 = as_vector(x2, name="x2")
    x0 = as_vector(x0, name="x0")
    if not x.shape == x2.shape == x0.shape == (model.n,):
        raise ValueError("kernel arguments must all have length N")
    u = model.h @ (x - x0)
    v = model.h @ (x2 - x0)
    return float(np.exp((u @ v) / model.sigma2))


def kernel_lgm(s: ArrayLike, s2: ArrayLike, s0: ArrayLike, a: ArrayLike, sigma2: float) -> float:
    """The same exponential kernel in the coordinates of a linear Gaussian model."""
    s = as_vector(s, name="s")
    s2 = as_vector(s2, name="s2")
    s0 = as_vector(s0, name="s0")
    a = as_matrix(a, name="A")
    if not s.shape == s2.shape == s0.shape == (a.shape[1],):
        raise ValueError("kernel arguments must match the column count of A")
    if not float(sigma2) > 0.0:
        raise ValueError("sigma2 must be positive")
    u = a @ (s - s0)
    v = a @ (s2 - s0)
    return float(np.exp((u @ v) / float(sigma2)))


def whiten(y: ArrayLike, h: ArrayLike, sigma: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Transform ``(y, H)`` so the noise covariance becomes the identity.

    ``W`` is the inverse of the lower Cholesky factor of ``sigma``;
    the identity covariance returns the inputs unchanged.
    """
    y = as_vector(y, name="y")
    h = as_matrix(h, name="H")
    sigma = as_matrix(sigma, name="Sigma")
    m = y.shape[0]
    if h.shape[0] != m or sigma.shape != (m, m):
        raise ValueError("y, H and Sigma must share the observation dimension")
    if np.array_equal(sigma, np.eye(m)):
        return y, h
    try:
        lower = cholesky(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("noise covariance must be symmetric positive definite") from exc
    return (
        solve_triangular(lower, y, lower=True),
        solve_triangular(lower, h, lower=True),
    )


def gaussian_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """Seeded i.i.d. standard Gaussian M x N matrix (test/config utility)."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    return rng.normals(seed, 0, m * n).reshape(m, n)
