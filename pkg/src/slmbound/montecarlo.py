"""Seeded Monte Carlo engine for estimator statistics.

Noise comes from the counter-based stream in :mod:`.rng`: trial ``i``
consumes the ``M`` standard-normal words ``[i*M, (i+1)*M)`` of the
stream keyed by the spec's seed.  Chunks therefore regenerate their own
noise independently, partial moments are reduced in chunk order, and the
result is bit-identical for a given spec no matter how many worker
threads ran the chunks.

All moments are accumulated for the deviation D = x-hat - x0, which keeps
the power sums small and makes the variance/MSE algebra exact:

  mean  = x0 + s1/n          bias = s1/n
  var_k = (s2_k - s1_k^2/n)/(n-1)     total variance = sum_k var_k
  mse   = q1/n   with q_i = ||D_i||^2

Standard errors use the matching sample fourth moments (s3, s4, the
Gram accumulator C = sum_i D_i D_i^T and qt = sum_i q_i D_i).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .estimators import Estimator
from .linalg import as_vector
from .model import LinearGaussianModel, SparseLinearModel, require_sparsity
from .rng import normals

__all__ = [
    "SimulationSpec",
    "EstimatorStats",
    "MeanFunctionEstimate",
    "simulate",
    "estimate_mean_function",
]

DEFAULT_CHUNK = 65536


@dataclass(frozen=True, eq=False)
class SimulationSpec:
    """Everything that determines a simulation's output, seed included.

    The model may be a plain linear Gaussian model (the least-squares
    calibration runs use one); the sparsity membership check on x0
    applies when the model carries a sparsity degree.
    """

    model: LinearGaussianModel
    x0: np.ndarray
    estimator: Estimator
    n_trials: int
    seed: int
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if not isinstance(self.model, LinearGaussianModel):
            raise ValueError("model must be a linear Gaussian model")
        if isinstance(self.model, SparseLinearModel):
            x0 = require_sparsity(self.x0, self.model.sparsity, name="x0")
        else:
            x0 = as_vector(self.x0, name="x0")
        if x0.shape[0] != self.model.n:
            raise ValueError(f"x0 has length {x0.shape[0]}, expected {self.model.n}")
        object.__setattr__(self, "x0", x0)
        if not isinstance(self.n_trials, int) or self.n_trials < 100:
            raise ValueError("n_trials must be an integer >= 100")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if not isinstance(self.chunk_size, int) or self.chunk_size < 1:
            raise ValueError("chunk_size must be a positive integer")
        if not isinstance(self.estimator, Estimator):
            raise ValueError("estimator must be an Estimator instance")


@dataclass(frozen=True, eq=False)
class EstimatorStats:
    """Aggregates of one simulation, each with its standard error."""

    n_trials: int
    seed: int
    mean_vec: np.ndarray
    bias_vec: np.ndarray
    se_mean: np.ndarray
    component_variances: np.ndarray
    se_component_variances: np.ndarray
    total_variance: float
    se_total_variance: float
    mse: float
    se_mse: float

    @property
    def bias_norm(self) -> float:
        return float(np.linalg.norm(self.bias_vec))


@dataclass(frozen=True, eq=False)
class MeanFunctionEstimate:
    """Estimated estimator means at several parameter points.

    Rows of ``means``/``ses`` follow the rows of ``points``.  All points
    share the same noise draws, so differences across nearby points have
    far smaller variance than the per-point standard errors suggest.
    """

    points: np.ndarray
    means: np.ndarray
    ses: np.ndarray
    n_trials: int
    seed: int


def _chunk_bounds(n_trials: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(a, min(a + chunk_size, n_trials)) for a in range(0, n_trials, chunk_size)]


def _draw_ys(model: LinearGaussianModel, hx0: np.ndarray, seed: int,
             start: int, stop: int, sigma: float) -> np.ndarray:
    m = model.m
    noise = normals(seed, start * m, (stop - start) * m).reshape(stop - start, m)
    return hx0[None, :] + sigma * noise


def _moment_chunk(spec: SimulationSpec, hx0: np.ndarray, sigma: float,
                  start: int, stop: int):
    ys = _draw_ys(spec.model, hx0, spec.seed, start, stop, sigma)
    d = spec.estimator.apply_batch(ys) - spec.x0[None, :]
    d2 = d * d
    q = d2.sum(axis=1)
    return (
        d.sum(axis=0),
        d2.sum(axis=0),
        (d2 * d).sum(axis=0),
        (d2 * d2).sum(axis=0),
        d.T @ d,
        d.T @ q,
        float(q.sum()),
        float(q @ q),
    )


def _run_ordered(worker, n_chunks: int, threads: int) -> list:
    if threads <= 1:
        return [worker(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(n_chunks)))


def simulate(spec: SimulationSpec, threads: int = 1) -> EstimatorStats:
    """Run the simulation and aggregate; bit-identical per spec.

    ``threads`` distributes chunks over a thread pool; the reduction is
    an ordered fold over chunk partials, so the thread count changes
    timing only, never the result.
    """
    model = spec.model
    sigma = math.sqrt(model.sigma2)
    hx0 = model.h @ spec.x0
    bounds = _chunk_bounds(spec.n_trials, spec.chunk_size)

    def worker(i: int):
        a, b = bounds[i]
        return _moment_chunk(spec, hx0, sigma, a, b)

    partials = _run_ordered(worker, len(bounds), threads)

    n_dim = model.n
    s1 = np.zeros(n_dim)
    s2 = np.zeros(n_dim)
    s3 = np.zeros(n_dim)
    s4 = np.zeros(n_dim)
    c = np.zeros((n_dim, n_dim))
    qt = np.zeros(n_dim)
    q1 = 0.0
    q2 = 0.0
    for p1, p2, p3, p4, pc, pqt, pq1, pq2 in partials:
        s1 += p1
        s2 += p2
        s3 += p3
        s4 += p4
        c += pc
        qt += pqt
        q1 += pq1
        q2 += pq2

    n = spec.n_trials
    denom = n - 1
    e = s1 / n
    compvar = np.maximum(0.0, (s2 - s1 * s1 / n) / denom)
    total_variance = float(compvar.sum())
    mse = q1 / n

    se_mean = np.sqrt(compvar / n)
    mu4 = (s4 - 4.0 * e * s3 + 6.0 * e * e * s2 - 3.0 * n * e**4) / n
    se_compvar = np.sqrt(np.maximum(0.0, mu4 - compvar * compvar) / n)
    var_q = max(0.0, (q2 - q1 * q1 / n) / denom)
    se_mse = math.sqrt(var_q / n)

    # d_i = ||D_i - e||^2 expanded in the accumulated moments
    ee = float(e @ e)
    sum_d = q1 - n * ee
    sum_d2 = q2 - 4.0 * float(qt @ e) + 4.0 * float(e @ c @ e) + 2.0 * q1 * ee - 3.0 * n * ee * ee
    var_d = max(0.0, (sum_d2 - sum_d * sum_d / n) / denom)
    se_total = (n / denom) * math.sqrt(var_d / n)

    return EstimatorStats(
        n_trials=n,
        seed=spec.seed,
        mean_vec=spec.x0 + e,
        bias_vec=e,
        se_mean=se_mean,
        component_variances=compvar,
        se_component_variances=se_compvar,
        total_variance=total_variance,
        se_total_variance=se_total,
        mse=mse,
        se_mse=se_mse,
    )


def estimate_mean_function(model: LinearGaussianModel, estimator: Estimator,
                           points: ArrayLike, n_trials: int, seed: int,
                           chunk_size: int = DEFAULT_CHUNK,
                           threads: int = 1) -> MeanFunctionEstimate:
    """Estimate the estimator's mean at each point with shared noise.

    Every point sees the same noise draws (common random numbers), which
    is what makes finite differences of the returned means usable as
    gradient estimates.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("points must be a nonempty list of vectors")
    if pts.shape[1] != model.n:
        raise ValueError(f"points have {pts.shape[1]} entries, expected {model.n}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    if isinstance(model, SparseLinearModel):
        for row in pts:
            require_sparsity(row, model.sparsity, name="point")
    if not isinstance(n_trials, int) or n_trials < 100:
        raise ValueError("n_trials must be an integer >= 100")
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")

    sigma = math.sqrt(model.sigma2)
    h_pts = pts @ model.h.T
    bounds = _chunk_bounds(n_trials, chunk_size)
    m = model.m

    def worker(i: int):
        a, b = bounds[i]
        noise = normals(seed, a * m, (b - a) * m).reshape(b - a, m)
        s1 = np.empty_like(pts)
        s2 = np.empty_like(pts)
        for p in range(pts.shape[0]):
            xhat = estimator.apply_batch(h_pts[p][None, :] + sigma * noise)
            s1[p] = xhat.sum(axis=0)
            s2[p] = (xhat * xhat).sum(axis=0)
        return s1, s2

    partials = _run_ordered(worker, len(bounds), threads)
    s1 = np.zeros_like(pts)
    s2 = np.zeros_like(pts)
    for p1, p2 in partials:
        s1 += p1
        s2 += p2

    means = s1 / n_trials
    compvar = np.maximum(0.0, (s2 - s1 * s1 / n_trials) / (n_trials - 1))
    ses = np.sqrt(compvar / n_trials)
    return MeanFunctionEstimate(points=pts, means=means, ses=ses,
                                n_trials=n_trials, seed=seed)
