"""Variance lower bounds for the sparse linear model.

The chain implemented here, for a mean function gamma and a parameter x0:

* ``crb_lgm``             -- sigma^2 r^T (A^T A)^{-1} r, the linear
                             Gaussian model bound for a gradient r.
* ``bound_L_K``           -- the support-relaxed bound
                             beta^2 [C + gamma(x(s0))^2] - gamma(x0)^2
                             with C the restricted CRB on support K.
* ``bound_L_star``        -- the maximum of bound_L_K over all size-S
                             supports (exhaustive, lexicographic ties).
* ``theorem_bound``       -- the sum of per-component maxima: a lower
                             bound on the total variance of any estimator
                             whose component means are the given gammas.
* ``ssnm_unbiased_bound`` -- the closed form
                             [S + (N - S) e^{-xi^2/sigma^2}] sigma^2
                             for unbiased estimation with H = I.
* ``ssnm_s1_estimator_bound`` -- the two-term S = 1 bound built from
                             estimator-induced means.

Every ``bound_L_K`` evaluation re-assembles itself through the isometric
image of gamma (gradient scaled by beta before the quadratic form); the
two routes must agree to 1e-10 relative, which guards the algebra without
collapsing them into one computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import BudgetExceededError, UnsupportedConfigurationError
from .linalg import gram, spd_factor, spd_solve, sym_solve
from .means import DEFAULT_QUADRATURE, MeanFunction, QuadratureConfig, gradient_r
from .model import (
    IsometryData,
    SparseLinearModel,
    Support,
    embed,
    require_sparsity,
    submatrix,
    xi_and_j,
)

__all__ = [
    "BoundResult",
    "crb_lgm",
    "crb_restricted",
    "bound_L_K",
    "bound_L_star",
    "theorem_bound",
    "ssnm_unbiased_bound",
    "ssnm_s1_estimator_bound",
    "DEFAULT_BUDGET",
]

# Exhaustive support enumerations refuse to start above this many subsets.
DEFAULT_BUDGET = 10**6

# Agreement required between the two algebraic forms of bound_L_K.
_TWO_FORM_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class BoundResult:
    """A bound value along with the ingredients that produced it."""

    value: float
    k_set: Support
    s0: np.ndarray
    beta2: float
    crb_term: float
    gamma_at_xs0: float
    gamma_at_x0: float
    tilde_form_value: float


def crb_lgm(a: ArrayLike, r: ArrayLike, sigma2: float) -> float:
    """``sigma2 * r^T (A^T A)^{-1} r`` for a full-column-rank ``a``."""
    if not float(sigma2) > 0.0:
        raise ValueError("sigma2 must be positive")
    g = gram(a)
    u = sym_solve(g, r)
    # the quadratic form is nonnegative by construction; clip rounding dust
    return max(0.0, float(sigma2) * float(np.asarray(r, dtype=float) @ u))


def crb_restricted(model: SparseLinearModel, k_set: Support, gamma: MeanFunction,
                   s0: ArrayLike, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """The CRB on support K: gradient of gamma(x(s)) fed to crb_lgm with H_K."""
    _check_sparse_model(model)
    if k_set.size != model.sparsity:
        raise ValueError(f"support size {k_set.size} != model sparsity {model.sparsity}")
    r = gradient_r(gamma, k_set, s0, model.n, cfg)
    return crb_lgm(submatrix(model.h, k_set), r, model.sigma2)


class _SupportWorkspace:
    """Per-(model, x0) cache of support factorizations and isometry data.

    bound_L_star and theorem_bound evaluate bound_L_K across many supports
    and components for a single x0; the Gram inverses and isometry vectors
    depend only on (model, K, x0), so they are computed once here.
    """

    def __init__(self, model: SparseLinearModel, x0: ArrayLike):
        _check_sparse_model(model)
        x0 = require_sparsity(x0, model.sparsity, name="x0")
        if x0.shape[0] != model.n:
            raise ValueError(f"x0 has length {x0.shape[0]}, expected {model.n}")
        self.model = model
        self.x0 = x0
        self.hx0 = model.h @ x0
        self._entries: dict[tuple[int, ...], _SupportEntry] = {}

    def entry(self, k_set: Support) -> "_SupportEntry":
        cached = self._entries.get(k_set.indices)
        if cached is None:
            cached = _SupportEntry(self, k_set)
            self._entries[k_set.indices] = cached
        return cached


class _SupportEntry:
    __slots__ = ("ginv", "iso", "beta2", "xs0")

    def __init__(self, ws: _SupportWorkspace, k_set: Support):
        model = ws.model
        if k_set.size != model.sparsity:
            raise ValueError(f"support size {k_set.size} != model sparsity {model.sparsity}")
        h_k = submatrix(model.h, k_set)
        factor = spd_factor(gram(h_k), name="H_K^T H_K")
        self.ginv = spd_solve(factor, np.eye(k_set.size))
        s0 = self.ginv @ (h_k.T @ ws.hx0)
        residual = ws.hx0 - h_k @ s0
        energy = float(residual @ residual)
        beta = float(np.exp(-energy / (2.0 * model.sigma2)))
        self.iso = IsometryData(s0=s0, beta=beta, residual_energy=energy)
        self.beta2 = beta * beta
        self.xs0 = embed(s0, k_set, model.n)


def bound_L_K(model: SparseLinearModel, gamma: MeanFunction, k_set: Support,
              x0: ArrayLike, cfg: QuadratureConfig = DEFAULT_QUADRATURE,
              *, _ws: _SupportWorkspace | None = None) -> BoundResult:
    """The support-relaxed variance bound for mean gamma at x0.

    Returns the bound together with its ingredients; negative values are
    possible (a vacuous but valid bound) when gamma vanishes on the
    support, and bound_L_star discards them via the maximum.
    """
    ws = _ws if _ws is not None else _SupportWorkspace(model, x0)
    entry = ws.entry(k_set)
    iso = entry.iso

    r = gradient_r(gamma, k_set, iso.s0, model.n, cfg)
    crb = max(0.0, model.sigma2 * float(r @ entry.ginv @ r))
    g_xs0 = float(gamma.evaluate(entry.xs0))
    g_x0 = float(gamma.evaluate(ws.x0))
    value = entry.beta2 * (crb + g_xs0 * g_xs0) - g_x0 * g_x0

    # Independent assembly through the isometric image of gamma: scale the
    # gradient by beta first, then take the quadratic form.
    r_tilde = iso.beta * r
    crb_tilde = max(0.0, model.sigma2 * float(r_tilde @ entry.ginv @ r_tilde))
    g_tilde_s0 = iso.beta * g_xs0
    tilde_value = crb_tilde + g_tilde_s0 * g_tilde_s0 - g_x0 * g_x0

    scale = max(abs(value), abs(tilde_value),
                entry.beta2 * (crb + g_xs0 * g_xs0) + g_x0 * g_x0)
    if abs(value - tilde_value) > _TWO_FORM_RTOL * scale:
        raise RuntimeError(
            f"bound forms disagree on {k_set.indices}: {value!r} vs {tilde_value!r}")

    return BoundResult(value=value, k_set=k_set, s0=iso.s0, beta2=entry.beta2,
                       crb_term=crb, gamma_at_xs0=g_xs0, gamma_at_x0=g_x0,
                       tilde_form_value=tilde_value)


def bound_L_star(model: SparseLinearModel, gamma: MeanFunction, x0: ArrayLike,
                 cfg: QuadratureConfig = DEFAULT_QUADRATURE, *,
                 mode: str = "exhaustive", budget: int = DEFAULT_BUDGET,
                 _ws: _SupportWorkspace | None = None) -> BoundResult:
    """Maximize bound_L_K over supports.

    ``mode="exhaustive"`` enumerates all C(N, S) supports in lexicographic
    order (ties keep the lexicographically smallest K) and refuses to start
    past ``budget`` subsets.  ``mode="greedy"`` evaluates the single
    heuristic support built from gamma's component plus the S-1 largest
    remaining entries of x0; it is a fast path, not used by acceptance runs.
    """
    ws = _ws if _ws is not None else _SupportWorkspace(model, x0)
    n, s = model.n, model.sparsity
    if mode == "exhaustive":
        total = math.comb(n, s)
        if total > budget:
            raise BudgetExceededError(
                f"{total} supports exceed the budget of {budget}; "
                "raise the budget or use mode='greedy'")
        candidates = (Support(c) for c in combinations(range(1, n + 1), s))
    elif mode == "greedy":
        candidates = iter([_greedy_support(gamma, ws.x0, s)])
    else:
        raise ValueError(f"unknown search mode {mode!r}")

    best: BoundResult | None = None
    for k_set in candidates:
        result = bound_L_K(model, gamma, k_set, ws.x0, cfg, _ws=ws)
        if best is None or result.value > best.value:
            best = result
    assert best is not None
    return best


def _greedy_support(gamma: MeanFunction, x0: np.ndarray, s: int) -> Support:
    k = getattr(gamma, "k", None)
    if not isinstance(k, int) or not 1 <= k <= x0.shape[0]:
        raise ValueError("greedy mode needs a mean function with a valid component index")
    order = np.argsort(-np.abs(x0), kind="stable")
    picks = [k - 1]
    for idx in order:
        if len(picks) == s:
            break
        if int(idx) != k - 1:
            picks.append(int(idx))
    return Support(tuple(sorted(i + 1 for i in picks)))


def theorem_bound(model: SparseLinearModel, gammas: Sequence[MeanFunction],
                  x0: ArrayLike, cfg: QuadratureConfig = DEFAULT_QUADRATURE, *,
                  mode: str = "exhaustive", budget: int = DEFAULT_BUDGET) -> float:
    """Sum of the per-component maxima: the total-variance lower bound."""
    _check_sparse_model(model)
    if len(gammas) != model.n:
        raise ValueError(f"need one mean function per component, got {len(gammas)} for N={model.n}")
    ws = _SupportWorkspace(model, x0)
    return sum(
        bound_L_star(model, gamma, ws.x0, cfg, mode=mode, budget=budget, _ws=ws).value
        for gamma in gammas
    )


def ssnm_unbiased_bound(n: int, s: int, xi: float, sigma2: float) -> float:
    """Closed-form unbiased bound ``[S + (N - S) e^{-xi^2/sigma2}] sigma2``."""
    if not 1 <= s < n:
        raise ValueError(f"need 1 <= S < N, got S={s}, N={n}")
    if not sigma2 > 0.0:
        raise ValueError("sigma2 must be positive")
    return (s + (n - s) * math.exp(-xi * xi / sigma2)) * sigma2


def ssnm_s1_estimator_bound(model: SparseLinearModel, gamma_j: MeanFunction,
                            gamma_i: MeanFunction, x0: ArrayLike,
                            cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """The S = 1 bound with estimator-induced means.

    ``gamma_j`` is the mean of component j(x0); ``gamma_i`` the mean of the
    representative off-support component, which is the smallest index
    different from j(x0).  The off-support factor e^{-xi^2/sigma^2} enters
    once, through beta^2 inside bound_L_K.  When gamma_i can be relabeled
    to other components, all off-support choices are verified to give the
    same value to 1e-10 relative instead of assuming the symmetry.
    """
    _check_sparse_model(model)
    if model.sparsity != 1:
        raise UnsupportedConfigurationError("this bound is defined for S = 1 only")
    if not model.is_ssnm:
        raise UnsupportedConfigurationError("this bound is defined for H = I only")
    x0 = require_sparsity(x0, 1, name="x0")
    n = model.n
    _, j = xi_and_j(x0, 1)
    i = 1 if j != 1 else 2
    if getattr(gamma_j, "k", j) != j:
        raise ValueError(f"gamma_j must be the mean of component {j}, got {gamma_j.k}")
    if getattr(gamma_i, "k", i) != i:
        raise ValueError(f"gamma_i must be the mean of component {i}, got {gamma_i.k}")

    ws = _SupportWorkspace(model, x0)
    term_j = bound_L_K(model, gamma_j, Support((j,)), x0, cfg, _ws=ws).value
    term_i = bound_L_K(model, gamma_i, Support((i,)), x0, cfg, _ws=ws).value

    for other in range(1, n + 1):
        if other in (i, j):
            continue
        relabeled = gamma_i.with_component(other)
        if relabeled is None:
            break  # nothing to verify for means without a component structure
        term_other = bound_L_K(model, relabeled, Support((other,)), x0, cfg, _ws=ws).value
        if abs(term_other - term_i) > 1e-10 * max(1.0, abs(term_i)):
            raise RuntimeError(
                f"off-support components disagree: K={{{other}}} gives "
                f"{term_other!r}, K={{{i}}} gives {term_i!r}")

    return term_j + (n - 1) * term_i


def _check_sparse_model(model) -> None:
    if not isinstance(model, SparseLinearModel):
        raise ValueError("a sparse model (with a sparsity degree) is required here")
