"""Finite-test-point variance oracle built on the model kernel.

For test points x_1 .. x_P (x_1 = x0) the squared norm of the projection
of a mean function onto span{R(., x_i)} is g^T R^{-1} g with
g_i = gamma(x_i), so

    g^T R^{-1} g - gamma(x0)^2

is a lower bound on the minimum variance at x0 over all estimators with
mean gamma, and hence on every Monte Carlo variance with matching mean.
It is independent of the support-relaxation bound machinery, which is
the point: the two approach the truth from different sides of the
algebra and are compared in tests.

The raw Gram matrix is hopeless in float64 (entries are exponentials of
inner products and overflow the dynamic range on wide grids), so the
solve is done on the equilibrated matrix

    G-hat_ij = exp(-||u_i - u_j||^2 / (2 sigma^2)),   u_i = H (x_i - x0)

with g-hat_i = gamma(x_i) exp(-||u_i||^2 / (2 sigma^2)), which leaves the
quadratic form unchanged, has unit diagonal, and keeps the relative
jitter meaningful.  The solve itself is an eigendecomposition that drops
the numerically null tail; dropping directions and adding jitter both
only shrink the projection, so the returned value never loses validity
as a lower bound, it only loses tightness.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from numpy.typing import ArrayLike

from .errors import IllConditionedGramError, SingularMatrixError
from .linalg import as_vector, gram
from .means import MeanFunction
from .model import (
    SparseLinearModel,
    Support,
    isometry_data,
    require_sparsity,
    submatrix,
)

__all__ = [
    "TestPointSet",
    "OracleDiagnostics",
    "grid_points",
    "finite_point_bound",
    "oracle_diagnostics",
    "CONDITION_LIMIT",
]

# condition number of the equilibrated, jittered Gram above which the
# strict mode refuses to report a value
CONDITION_LIMIT = 1e12

# relative eigenvalue cutoff for the numerically usable subspace
_EIGENCUT_REL = 1e-13

_DEFAULT_JITTER = 1e-12


@dataclass(frozen=True, eq=False)
class TestPointSet:
    """Distinct test points, row per point; points[0] plays the x0 role.

    ``jitter`` is the relative ridge coefficient: the solve adds
    jitter * trace(G-hat)/P to the equilibrated Gram diagonal.
    """

    __test__ = False  # name starts with Test; keep pytest from collecting it

    points: np.ndarray
    jitter: float = _DEFAULT_JITTER

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a nonempty 2-D array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("test points must be distinct")
        if not float(self.jitter) >= 0.0:
            raise ValueError("jitter must be >= 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "jitter", float(self.jitter))

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True, eq=False)
class OracleDiagnostics:
    """Oracle value plus the conditioning facts the CLI reports."""

    value: float
    n_points: int
    usable_size: int
    condition: float

    @property
    def well_conditioned(self) -> bool:
        return self.condition <= CONDITION_LIMIT


def grid_points(k_set: Support, x0: ArrayLike, half_width: float, per_axis: int,
                model: SparseLinearModel | None = None,
                jitter: float = _DEFAULT_JITTER) -> TestPointSet:
    """Cartesian grid on the vectors supported inside K, plus x0.

    Without a model the grid is axis-aligned in the support coordinates,
    centered at x0's restriction.  With a model it is centered at x0's
    least-squares coefficients on K and whitened by the inverse square
    root of the support Gram, so the spacing is uniform in the kernel
    metric ||H(x - x')||.  The two layouts coincide for H = I; for
    general H the raw layout wastes its points along the stretched
    directions and the oracle stalls well short of the support bound.
    x0 itself is always the first point; exact duplicates are dropped.
    """
    x0 = as_vector(x0, name="x0")
    if not float(half_width) >= 0.0:
        raise ValueError("half_width must be >= 0")
    if not isinstance(per_axis, int) or per_axis < 1:
        raise ValueError("per_axis must be a positive integer")
    n = x0.shape[0]
    k_set.check_within(n)

    cols = list(k_set.zero_based())
    s = k_set.size
    if model is not None:
        if model.n != n:
            raise ValueError(f"x0 has length {n}, expected {model.n}")
        center = isometry_data(model, k_set, x0).s0
        evals, evecs = np.linalg.eigh(gram(submatrix(model.h, k_set)))
        if not evals[0] > 0.0:
            raise SingularMatrixError("support Gram matrix is not positive definite")
        whiten_map = (evecs / np.sqrt(evals)) @ evecs.T
    else:
        center = x0[cols]
        whiten_map = np.eye(s)

    if per_axis == 1:
        axes = [np.zeros(1)] * s
    else:
        axes = [np.linspace(-half_width, half_width, per_axis)] * s

    rows = [x0]
    for combo in product(*axes):
        row = np.zeros(n)
        row[cols] = center + whiten_map @ np.asarray(combo)
        rows.append(row)
    pts = np.asarray(rows)

    # exact duplicates (x0 on the grid, or a zero-width grid) keep the
    # first occurrence; order stays x0-first then lexicographic
    _, first = np.unique(pts, axis=0, return_index=True)
    keep = np.sort(first)
    return TestPointSet(points=pts[keep], jitter=jitter)


def oracle_diagnostics(model: SparseLinearModel, gamma: MeanFunction,
                       x0: ArrayLike, pts: TestPointSet, *,
                       strict: bool = False) -> OracleDiagnostics:
    """The finite-point bound with its conditioning diagnostics.

    strict=True raises IllConditionedGramError instead of returning a
    value when the jittered Gram condition exceeds CONDITION_LIMIT; the
    default reports the (still valid, possibly loose) truncated value.
    """
    if not isinstance(model, SparseLinearModel):
        raise ValueError("a sparse model (with a sparsity degree) is required here")
    x0 = require_sparsity(x0, model.sparsity, name="x0")
    if x0.shape[0] != model.n:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {model.n}")
    points = pts.points
    if points.shape[1] != model.n:
        raise ValueError(f"points have {points.shape[1]} entries, expected {model.n}")
    if not np.array_equal(points[0], x0):
        raise ValueError("points[0] must equal x0")
    for row in points:
        require_sparsity(row, model.sparsity, name="test point")

    u = (points - x0[None, :]) @ model.h.T
    d = np.einsum("ij,ij->i", u, u) / model.sigma2
    log_gram = (u @ u.T) / model.sigma2 - 0.5 * d[:, None] - 0.5 * d[None, :]
    gram = np.exp(log_gram)
    gram = 0.5 * (gram + gram.T)

    g_vals = np.array([float(gamma.evaluate(row)) for row in points])
    g_hat = g_vals * np.exp(-0.5 * d)

    p = points.shape[0]
    lam = pts.jitter * float(np.trace(gram)) / p
    evals, evecs = np.linalg.eigh(gram)
    lam_max = float(evals[-1])
    lam_min = max(0.0, float(evals[0]))
    condition = (lam_max + lam) / (lam_min + lam) if lam_min + lam > 0.0 else np.inf

    keep = evals > _EIGENCUT_REL * lam_max
    usable = int(np.count_nonzero(keep))
    if strict and condition > CONDITION_LIMIT:
        raise IllConditionedGramError(
            f"Gram condition {condition:.3e} exceeds {CONDITION_LIMIT:.0e} "
            f"after jitter {lam:.3e}; {usable} of {p} directions usable",
            usable_size=usable, condition=condition)

    w = evecs[:, keep].T @ g_hat
    norm2 = float(np.sum(w * w / (evals[keep] + lam)))
    value = norm2 - float(g_vals[0]) ** 2
    return OracleDiagnostics(value=value, n_points=p, usable_size=usable,
                             condition=float(condition))


def finite_point_bound(model: SparseLinearModel, gamma: MeanFunction,
                       x0: ArrayLike, pts: TestPointSet, *,
                       strict: bool = False) -> float:
    """Lower bound on the variance at x0 of any estimator with mean gamma."""
    return oracle_diagnostics(model, gamma, x0, pts, strict=strict).value
