"""Prescribed mean functions, their support restrictions and gradients.

A mean function gamma assigns to each admissible parameter vector the
expectation one component of an estimator is required to have.  Four kinds
are provided:

* ``unbiased(k)``      -- gamma(x) = x_k
* ``affine(k, a, b)``  -- gamma(x) = a^T x + b
* ``ht_induced``       -- mean of component k of the hard-threshold rule,
                          in closed form
* ``ml_induced``       -- mean of component k of best-1 selection, by
                          quadrature (S = 1 only)

The closed form for the hard-threshold mean of ``y ~ N(mu, sigma^2)``:

    E[y 1{|y| >= T}] = mu (1 - Phi(b) + Phi(a)) + sigma (phi(b) - phi(a))

with ``a = (-T - mu)/sigma`` and ``b = (T - mu)/sigma``; this follows from
the standard truncated-normal first moment and is validated against a
quadrature oracle in the tests.
"""

from __future__ import annotations

import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike
from scipy.special import ndtr

from .errors import GradientAccuracyWarning, UnsupportedConfigurationError
from .linalg import as_vector
from .model import IsometryData, Support, embed

__all__ = [
    "QuadratureConfig",
    "MeanFunction",
    "UnbiasedMean",
    "AffineMean",
    "HTInducedMean",
    "MLInducedMean",
    "unbiased",
    "affine",
    "ht_induced",
    "ml_induced",
    "ht_mean",
    "ml_mean",
    "tilde_gamma",
    "gradient_r",
]

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))

# Step-halving agreement required from finite-difference gradients.
RICHARDSON_RTOL = 1e-5


@dataclass(frozen=True)
class QuadratureConfig:
    """Numerical knobs for induced means and numerical gradients.

    ``half_width_sigmas`` and ``nodes`` control the Gauss-Legendre rule for
    the best-1-selection mean; ``fd_step`` is the relative central
    difference step, applied as ``fd_step * max(1, |s_p|)`` per coordinate.
    """

    half_width_sigmas: float = 10.0
    nodes: int = 2001
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.nodes < 51 or self.nodes % 2 == 0:
            raise ValueError(f"node count must be odd and >= 51, got {self.nodes}")
        if self.half_width_sigmas < 6.0:
            raise ValueError(f"integration half-width must be >= 6 sigma, got {self.half_width_sigmas}")
        if not self.fd_step > 0.0:
            raise ValueError("fd_step must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


class MeanFunction(ABC):
    """A prescribed mean for one estimator component."""

    k: int

    @abstractmethod
    def evaluate(self, x: ArrayLike) -> float:
        """gamma(x) for a full-length parameter vector."""

    def with_component(self, k: int) -> "MeanFunction | None":
        """The same kind of mean for another component, if that is meaningful."""
        return None


@dataclass(frozen=True)
class UnbiasedMean(MeanFunction):
    k: int

    def evaluate(self, x: ArrayLike) -> float:
        x = as_vector(x, name="x")
        return float(x[self.k - 1])

    def with_component(self, k: int) -> "UnbiasedMean":
        return UnbiasedMean(k)


@dataclass(frozen=True, eq=False)
class AffineMean(MeanFunction):
    """gamma(x) = a^T x + b, the CRB-equality case."""

    k: int
    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", as_vector(self.a, name="a"))
        object.__setattr__(self, "b", float(self.b))

    def evaluate(self, x: ArrayLike) -> float:
        x = as_vector(x, name="x")
        return float(self.a @ x + self.b)


@dataclass(frozen=True)
class HTInducedMean(MeanFunction):
    """Mean of component k of hard thresholding at level t."""

    k: int
    t: float
    sigma: float

    def __post_init__(self):
        if self.t < 0.0:
            raise ValueError("threshold must be nonnegative")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    def evaluate(self, x: ArrayLike) -> float:
        x = as_vector(x, name="x")
        return ht_mean(float(x[self.k - 1]), self.t, self.sigma)

    def with_component(self, k: int) -> "HTInducedMean":
        return replace(self, k=k)


@dataclass(frozen=True)
class MLInducedMean(MeanFunction):
    """Mean of component k of best-S selection (quadrature; S = 1 only)."""

    k: int
    sparsity: int
    sigma: float
    cfg: QuadratureConfig = DEFAULT_QUADRATURE

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")

    def evaluate(self, x: ArrayLike) -> float:
        return ml_mean(x, self.k, self.sparsity, self.sigma, self.cfg)

    def with_component(self, k: int) -> "MLInducedMean":
        return replace(self, k=k)


def unbiased(k: int) -> UnbiasedMean:
    return UnbiasedMean(int(k))


def affine(k: int, a: ArrayLike, b: float) -> AffineMean:
    return AffineMean(int(k), np.asarray(a, dtype=float), float(b))


def ht_induced(k: int, t: float, sigma: float) -> HTInducedMean:
    return HTInducedMean(int(k), float(t), float(sigma))


def ml_induced(k: int, sparsity: int, sigma: float,
               cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> MLInducedMean:
    return MLInducedMean(int(k), int(sparsity), float(sigma), cfg)


def _phi(z):
    return np.exp(-0.5 * z * z) / _SQRT_2PI


def ht_mean(mu: float, t: float, sigma: float) -> float:
    """E[y 1{|y| >= t}] for y ~ N(mu, sigma^2), in closed form."""
    if t < 0.0:
        raise ValueError("threshold must be nonnegative")
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    a = (-t - mu) / sigma
    b = (t - mu) / sigma
    return float(mu * (1.0 - ndtr(b) + ndtr(a)) + sigma * (_phi(b) - _phi(a)))


@lru_cache(maxsize=8)
def _gl_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(nodes)
    return x, w


def ml_mean(x: ArrayLike, k: int, sparsity: int, sigma: float,
            cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Mean of component k of best-S selection at parameter ``x``.

    For S = 1 this is the integral of
    ``y phi_sigma(y - x_k) prod_{l != k} P(|y_l| < |y|)``
    evaluated by Gauss-Legendre quadrature, split at y = 0 where the
    integrand has a derivative kink.  S > 1 has no quadrature path; use
    the Monte Carlo mean estimator instead.
    """
    if sparsity != 1:
        raise UnsupportedConfigurationError(
            "quadrature mean is implemented for S = 1 only; use "
            "montecarlo.estimate_mean_function for larger S")
    x = as_vector(x, name="x")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"component {k} out of range 1..{n}")
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    mu = float(x[k - 1])
    others = np.delete(x, k - 1)
    half = cfg.half_width_sigmas * sigma
    lo, hi = mu - half, mu + half
    pieces = [(lo, 0.0), (0.0, hi)] if lo < 0.0 < hi else [(lo, hi)]
    nodes, weights = _gl_rule(cfg.nodes)
    total = 0.0
    for a, b in pieces:
        y = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        scale = 0.5 * (b - a)
        win = np.ones_like(y)
        mag = np.abs(y)
        for xl in others:
            win *= ndtr((mag - xl) / sigma) - ndtr((-mag - xl) / sigma)
        density = _phi((y - mu) / sigma) / sigma
        total += scale * float(np.dot(weights, y * density * win))
    return total


def tilde_gamma(gamma: MeanFunction, k_set: Support, iso: IsometryData,
                s: ArrayLike, n: int) -> float:
    """The isometric image ``beta * gamma(x(s))`` of a mean on a support."""
    s = as_vector(s, name="s")
    return iso.beta * gamma.evaluate(embed(s, k_set, n))


def gradient_r(gamma: MeanFunction, k_set: Support, s0: ArrayLike, n: int,
               cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Gradient of ``s -> gamma(x(s))`` at ``s0`` on the given support.

    Closed form for the unbiased and affine kinds.  Induced kinds use
    central differences at the configured step, re-evaluated at half the
    step; a relative disagreement above ``RICHARDSON_RTOL`` emits
    :class:`GradientAccuracyWarning` and the half-step value is kept.
    """
    s0 = as_vector(s0, name="s0")
    if s0.shape[0] != k_set.size:
        raise ValueError("s0 must have one entry per support index")
    k_set.check_within(n)

    if isinstance(gamma, UnbiasedMean):
        r = np.zeros(k_set.size)
        if gamma.k in k_set.indices:
            r[k_set.indices.index(gamma.k)] = 1.0
        return r
    if isinstance(gamma, AffineMean):
        if gamma.a.shape[0] != n:
            raise ValueError("affine coefficients must have length N")
        return gamma.a[list(k_set.zero_based())].copy()

    def value(s):
        return gamma.evaluate(embed(s, k_set, n))

    r = np.zeros(k_set.size)
    for p in range(k_set.size):
        step = cfg.fd_step * max(1.0, abs(float(s0[p])))
        coarse = _central_difference(value, s0, p, step)
        fine = _central_difference(value, s0, p, 0.5 * step)
        scale = max(abs(coarse), abs(fine))
        if scale > 1e-9 and abs(coarse - fine) > RICHARDSON_RTOL * scale:
            warnings.warn(
                f"gradient coordinate {p + 1} changed by more than "
                f"{RICHARDSON_RTOL:g} relative when the step was halved",
                GradientAccuracyWarning,
                stacklevel=2,
            )
        r[p] = fine
    return r


def _central_difference(fn, s0: np.ndarray, p: int, step: float) -> float:
    plus = s0.copy()
    plus[p] += step
    minus = s0.copy()
    minus[p] -= step
    return (fn(plus) - fn(minus)) / (2.0 * step)
