"""Reference estimators the bounds are benchmarked against.

All estimators are immutable values with a pure, thread-safe
``apply_batch``: rows in, rows out.  ``apply`` is the single-vector
convenience.  ``label`` is a short stable identifier used in CSV output.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from numpy.typing import ArrayLike

from .errors import BudgetExceededError, UnsupportedConfigurationError
from .linalg import as_matrix, as_vector, pseudo_inverse
from .model import SparseLinearModel, Support, embed, submatrix, xi_and_j

__all__ = [
    "Estimator",
    "MlSsnm",
    "MlSlm",
    "HardThreshold",
    "LmvuS1",
    "LeastSquares",
    "Identity",
    "ml_ssnm",
    "ml_slm",
    "ht",
    "lmvu_s1",
    "ls_lgm",
]


class Estimator:
    """Deterministic map from observations to parameter estimates."""

    label: str = "estimator"

    def apply_batch(self, ys: ArrayLike) -> np.ndarray:
        raise NotImplementedError

    def apply(self, y: ArrayLike) -> np.ndarray:
        return self.apply_batch(as_vector(y, name="y")[None, :])[0]

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label}>"


def _keep_largest(ys: np.ndarray, s: int) -> np.ndarray:
    # stable sort on -|y|: magnitude ties keep the smaller index
    order = np.argsort(-np.abs(ys), axis=1, kind="stable")[:, :s]
    out = np.zeros_like(ys)
    np.put_along_axis(out, order, np.take_along_axis(ys, order, axis=1), axis=1)
    return out


class MlSsnm(Estimator):
    """Best-S selection: keeps the S largest-magnitude entries of y."""

    def __init__(self, sparsity: int):
        if not isinstance(sparsity, int) or sparsity < 1:
            raise ValueError("sparsity must be a positive integer")
        self.sparsity = sparsity
        self.label = f"ml_ssnm_S{sparsity}"

    def apply_batch(self, ys: ArrayLike) -> np.ndarray:
        ys = as_matrix(ys, name="ys")
        if self.sparsity >= ys.shape[1]:
            raise ValueError(f"need S < N, got S={self.sparsity}, N={ys.shape[1]}")
        return _keep_largest(ys, self.sparsity)


class MlSlm(Estimator):
    """Exhaustive-support maximum likelihood for the general model.

    Solves least squares on every size-S support and keeps the smallest
    residual (lexicographically first support on ties).  The per-support
    pseudo-inverses are precomputed, so construction pays the C(N, S)
    cost once and batches stay cheap.
    """

    def __init__(self, model: SparseLinearModel, budget: int = 10**6):
        total = math.comb(model.n, model.sparsity)
        if total > budget:
            raise BudgetExceededError(
                f"{total} supports exceed the budget of {budget}")
        self.model = model
        self.label = f"ml_slm_S{model.sparsity}"
        self._supports = []
        for combo in combinations(range(1, model.n + 1), model.sparsity):
            k_set = Support(combo)
            h_k = submatrix(model.h, k_set)
            self._supports.append((k_set, h_k, pseudo_inverse(h_k)))

    def apply_batch(self, ys: ArrayLike) -> np.ndarray:
        ys = as_matrix(ys, name="ys")
        if ys.shape[1] != self.model.m:
            raise ValueError(f"observations have {ys.shape[1]} entries, expected {self.model.m}")
        t = ys.shape[0]
        best_score = np.full(t, np.inf)
        best_est = np.zeros((t, self.model.n))
        for k_set, h_k, pinv in self._supports:
            coeffs = ys @ pinv.T
            resid = ys - coeffs @ h_k.T
            score = np.einsum("ij,ij->i", resid, resid)
            better = score < best_score  # strict: lexicographic ties keep the earlier K
            if np.any(better):
                best_score[better] = score[better]
                best_est[better] = 0.0
                best_est[np.ix_(better, k_set.zero_based())] = coeffs[better]
        return best_est


class HardThreshold(Estimator):
    """Keeps entries with |y_k| >= T (boundary included), zeros the rest."""

    def __init__(self, t: float):
        t = float(t)
        if not t >= 0.0:
            raise ValueError("threshold must be >= 0")
        self.t = t
        self.label = f"ht_T{t:g}"

    def apply_batch(self, ys: ArrayLike) -> np.ndarray:
        ys = as_matrix(ys, name="ys")
        return np.where(np.abs(ys) >= self.t, ys, 0.0)


class LmvuS1(Estimator):
    """Minimum-variance unbiased construction at a fixed x0 with one nonzero.

    Component j(x0) passes through as y_j; every other component is y_k
    scaled by alpha(y) = exp(-(2 y_j xi + xi^2) / (2 sigma^2)).  Dense
    output by design; depends on x0 only through xi(x0) and j(x0).
    """

    def __init__(self, x0: ArrayLike, sigma2: float):
        x0 = as_vector(x0, name="x0")
        if int(np.count_nonzero(x0)) != 1:
            raise UnsupportedConfigurationError("x0 must have exactly one nonzero entry")
        if not float(sigma2) > 0.0:
            raise ValueError("sigma2 must be positive")
        self.n = x0.shape[0]
        self.sigma2 = float(sigma2)
        self.xi, self.j = xi_and_j(x0, 1)
        self.label = "lmvu_s1"

    def apply_batch(self, ys: ArrayLike) -> np.ndarray:
        ys = as_matrix(ys, name="ys")
        if ys.shape[1] != self.n:
            raise ValueError(f"observations have {ys.shape[1]} entries, expected {self.n}")
        yj = ys[:, self.j - 1]
        alpha = np.exp(-(2.0 * yj * self.xi + self.xi * self.xi) / (2.0 * self.sigma2))
        out = alpha[:, None] * ys
        out[:, self.j - 1] = yj
        return out


class LeastSquares(Estimator):
    """Pseudo-inverse estimator A^+ z for a full-column-rank A."""

    def __init__(self, a: ArrayLike):
        self.a = as_matrix(a, name="a")
        self.pinv = pseudo_inverse(self.a)
        self.label = "ls_lgm"

    def apply_batch(self, ys: ArrayLike) -> np.ndarray:
        ys = as_matrix(ys, name="ys")
        if ys.shape[1] != self.a.shape[0]:
            raise ValueError(f"observations have {ys.shape[1]} entries, expected {self.a.shape[0]}")
        return ys @ self.pinv.T


class Identity(Estimator):
    """x-hat = y; the sanity reference with known Gaussian moments."""

    label = "identity"

    def apply_batch(self, ys: ArrayLike) -> np.ndarray:
        return as_matrix(ys, name="ys").copy()


def ml_ssnm(y: ArrayLike, sparsity: int) -> np.ndarray:
    """Best-S selection applied to a single observation vector."""
    return MlSsnm(sparsity).apply(y)


def ml_slm(y: ArrayLike, model: SparseLinearModel, budget: int = 10**6) -> np.ndarray:
    """Exhaustive-support maximum likelihood for one observation."""
    return MlSlm(model, budget=budget).apply(y)


def ht(y: ArrayLike, t: float) -> np.ndarray:
    """Hard thresholding at level T."""
    return HardThreshold(t).apply(y)


def lmvu_s1(y: ArrayLike, x0: ArrayLike, sigma2: float) -> np.ndarray:
    """The S = 1 locally minimum variance unbiased estimate at x0."""
    return LmvuS1(x0, sigma2).apply(y)


def ls_lgm(z: ArrayLike, a: ArrayLike) -> np.ndarray:
    """Least squares A^+ z."""
    return LeastSquares(a).apply(z)
