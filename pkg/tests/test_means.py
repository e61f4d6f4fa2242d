"""Prescribed means: closed forms, quadrature, gradients.

The hard-threshold closed form and the best-1-selection quadrature are
each checked against an adaptive integrator written here, so the library
and the oracle share no code path.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr

from slmbound.errors import GradientAccuracyWarning, UnsupportedConfigurationError
from slmbound.means import (
    DEFAULT_QUADRATURE,
    AffineMean,
    HTInducedMean,
    MeanFunction,
    MLInducedMean,
    QuadratureConfig,
    UnbiasedMean,
    affine,
    gradient_r,
    ht_induced,
    ht_mean,
    ml_induced,
    ml_mean,
    tilde_gamma,
    unbiased,
)
from slmbound.model import IsometryData, Support, embed, ssnm
from slmbound.rng import normals


def _phi(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _ht_mean_adaptive(mu, t, sigma):
    """E[y 1{|y| >= t}], y ~ N(mu, sigma^2), by adaptive integration."""

    def f(y):
        return y * _phi((y - mu) / sigma) / sigma

    lo, hi = mu - 12.0 * sigma, mu + 12.0 * sigma
    total = 0.0
    if hi > t:
        total += quad(f, max(lo, t), hi, limit=200)[0]
    if lo < -t:
        total += quad(f, lo, min(hi, -t), limit=200)[0]
    return total


def _ml_mean_adaptive(x, k, sigma):
    """Best-1-selection component mean by adaptive integration."""
    x = np.asarray(x, dtype=float)
    mu = float(x[k - 1])
    others = np.delete(x, k - 1)

    def f(y):
        win = 1.0
        for xl in others:
            win *= ndtr((abs(y) - xl) / sigma) - ndtr((-abs(y) - xl) / sigma)
        return y * _phi((y - mu) / sigma) / sigma * win

    lo, hi = mu - 12.0 * sigma, mu + 12.0 * sigma
    pts = [0.0] if lo < 0.0 < hi else None
    return quad(f, lo, hi, points=pts, limit=400)[0]


# ----------------------------------------------------------- simple kinds


def test_unbiased_mean_is_exact_component_read():
    g = unbiased(2)
    assert g.evaluate([0.0, 7.0, 0.0]) == 7.0
    for seed in range(50):
        x = np.zeros(5)
        x[seed % 5] = normals(seed, 0, 1)[0]
        assert g.evaluate(x) == x[1]
    assert g.with_component(4) == UnbiasedMean(4)


def test_affine_mean_evaluates_inner_product():
    g = affine(1, [1.0, -2.0, 0.5], 3.0)
    assert g.evaluate([1.0, 1.0, 2.0]) == pytest.approx(3.0, abs=1e-15)
    assert g.with_component(2) is None  # relabeling has no meaning here


def test_ht_induced_and_ml_induced_dispatch():
    g_ht = ht_induced(2, 3.0, 1.0)
    x = [0.0, 3.0, 0.0]
    assert g_ht.evaluate(x) == pytest.approx(ht_mean(3.0, 3.0, 1.0), rel=1e-15)
    assert g_ht.with_component(3).k == 3
    g_ml = ml_induced(1, 1, 1.0)
    assert g_ml.evaluate([2.0, 0.0, 0.0]) == pytest.approx(
        ml_mean([2.0, 0.0, 0.0], 1, 1, 1.0), rel=1e-15)
    assert g_ml.with_component(2).k == 2


def test_mean_constructor_validation():
    with pytest.raises(ValueError):
        ht_induced(1, -0.5, 1.0)
    with pytest.raises(ValueError):
        ht_induced(1, 1.0, 0.0)
    with pytest.raises(ValueError):
        ml_induced(1, 1, -1.0)


# -------------------------------------------------------------- ht closed


def test_ht_mean_no_threshold_is_identity():
    for mu in (-3.0, 0.0, 0.7, 10.0):
        assert ht_mean(mu, 0.0, 1.0) == pytest.approx(mu, rel=1e-14, abs=1e-14)


def test_ht_mean_symmetric_kill_at_zero():
    for t in (0.5, 1.0, 4.0):
        assert ht_mean(0.0, t, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_ht_mean_odd_in_mu():
    for mu in (0.3, 1.5, 4.0):
        assert ht_mean(-mu, 2.0, 1.0) == pytest.approx(
            -ht_mean(mu, 2.0, 1.0), rel=1e-13)


def test_ht_mean_matches_adaptive_integrator():
    for sigma in (1.0, 2.0):
        for t_mult in (0.0, 1.0, 3.0, 5.0):
            t = t_mult * sigma
            for mu_mult in (-6.0, -3.0, -1.0, 0.0, 0.5, 1.0, 3.0, 6.0):
                mu = mu_mult * sigma
                assert ht_mean(mu, t, sigma) == pytest.approx(
                    _ht_mean_adaptive(mu, t, sigma), abs=1e-8)


def test_ht_mean_validation():
    with pytest.raises(ValueError):
        ht_mean(1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        ht_mean(1.0, 1.0, 0.0)


# ------------------------------------------------------------ ml by quad


def test_ml_mean_zero_vector_is_zero():
    assert abs(ml_mean(np.zeros(5), 1, 1, 1.0)) < 1e-12


def test_ml_mean_dominant_entry_passes_through():
    x = np.zeros(5)
    x[0] = 20.0
    assert ml_mean(x, 1, 1, 1.0) == pytest.approx(20.0, abs=1e-4)


def test_ml_mean_is_odd():
    x = np.array([2.0, 0.0, 0.0, 0.0])
    assert ml_mean(-x, 1, 1, 1.0) == pytest.approx(
        -ml_mean(x, 1, 1, 1.0), abs=1e-9)


def test_ml_mean_matches_adaptive_integrator():
    cases = [
        (np.array([2.0, 0.0, 0.0, 0.0, 0.0]), 1, 1.0),
        (np.array([2.0, 0.0, 0.0, 0.0, 0.0]), 2, 1.0),
        (np.array([0.5, 0.0, 0.0]), 1, 1.0),
        (np.array([0.0, -1.5, 0.0]), 2, 2.0),
        (np.array([0.0, -1.5, 0.0]), 1, 2.0),
    ]
    for x, k, sigma in cases:
        assert ml_mean(x, k, 1, sigma) == pytest.approx(
            _ml_mean_adaptive(x, k, sigma), abs=1e-7)


def test_ml_mean_off_support_shrinks_toward_zero():
    # competing with a strong entry, a zero component keeps a small mean
    x = np.array([4.0, 0.0, 0.0, 0.0, 0.0])
    v = ml_mean(x, 2, 1, 1.0)
    assert abs(v) < 0.01


def test_ml_mean_larger_sparsity_not_supported():
    with pytest.raises(UnsupportedConfigurationError):
        ml_mean([1.0, 0.0, 0.0], 1, 2, 1.0)


def test_ml_mean_validation():
    with pytest.raises(ValueError):
        ml_mean([1.0, 0.0], 3, 1, 1.0)
    with pytest.raises(ValueError):
        ml_mean([1.0, 0.0], 1, 1, 0.0)


def test_quadrature_config_validation():
    QuadratureConfig()
    with pytest.raises(ValueError):
        QuadratureConfig(nodes=50)
    with pytest.raises(ValueError):
        QuadratureConfig(nodes=49)
    with pytest.raises(ValueError):
        QuadratureConfig(half_width_sigmas=5.0)
    with pytest.raises(ValueError):
        QuadratureConfig(fd_step=0.0)


# ------------------------------------------------------------ tilde gamma


def test_tilde_gamma_scales_by_beta():
    k = Support((2,))
    iso1 = IsometryData(s0=np.array([0.0]), beta=1.0, residual_energy=0.0)
    assert tilde_gamma(unbiased(2), k, iso1, [5.0], 3) == 5.0
    beta = math.exp(-2.0)
    iso2 = IsometryData(s0=np.array([0.0]), beta=beta, residual_energy=4.0)
    g = affine(1, [0.5, 2.0, 0.0], 1.0)
    # gamma(x(s)) = 2 s + 1 on K = {2}
    assert tilde_gamma(g, k, iso2, [3.0], 3) == pytest.approx(beta * 7.0, rel=1e-14)


# --------------------------------------------------------------- gradients


def test_gradient_unbiased_inside_and_outside_support():
    k = Support((2, 4))
    assert np.array_equal(gradient_r(unbiased(4), k, [0.0, 0.0], 5), [0.0, 1.0])
    assert np.array_equal(gradient_r(unbiased(3), k, [0.0, 0.0], 5), [0.0, 0.0])


def test_gradient_affine_restricts_coefficients():
    a = np.array([1.0, -2.0, 0.5, 7.0])
    g = affine(1, a, 0.0)
    assert np.array_equal(gradient_r(g, Support((1, 3)), [0.0, 0.0], 4),
                          [1.0, 0.5])
    with pytest.raises(ValueError):
        gradient_r(g, Support((1, 3)), [0.0, 0.0], 5)  # coefficient length


def test_gradient_ht_matches_analytic_derivative():
    # d/dmu of mu(1 - Phi(b) + Phi(a)) + sigma(phi(b) - phi(a)) with
    # a = (-T - mu)/sigma, b = (T - mu)/sigma, phi'(z) = -z phi(z)
    for mu, t, sigma in [(3.0, 3.0, 1.0), (0.5, 1.0, 1.0), (-2.0, 4.0, 2.0)]:
        a = (-t - mu) / sigma
        b = (t - mu) / sigma
        expect = ((1.0 - ndtr(b) + ndtr(a))
                  + (mu / sigma) * (_phi(b) - _phi(a))
                  + b * _phi(b) - a * _phi(a))
        r = gradient_r(ht_induced(1, t, sigma), Support((1,)), [mu], 3)
        assert r[0] == pytest.approx(expect, rel=1e-5)


def test_gradient_ml_matches_difference_of_adaptive_means():
    x0 = 2.0
    h = 1e-4
    up = _ml_mean_adaptive([x0 + h, 0.0, 0.0], 1, 1.0)
    dn = _ml_mean_adaptive([x0 - h, 0.0, 0.0], 1, 1.0)
    r = gradient_r(ml_induced(1, 1, 1.0), Support((1,)), [x0], 3)
    assert r[0] == pytest.approx((up - dn) / (2.0 * h), rel=1e-4)


def test_gradient_off_component_of_induced_mean_is_zero():
    # gamma depends only on x_k; on a support excluding k it is constant
    r = gradient_r(ht_induced(3, 1.0, 1.0), Support((1,)), [1.0], 3)
    assert r[0] == pytest.approx(0.0, abs=1e-10)


class _CubeRootMean(MeanFunction):
    """Infinite slope at the origin; trips the step-halving check."""

    def __init__(self, k):
        self.k = k

    def evaluate(self, x):
        return float(np.cbrt(np.asarray(x, dtype=float)[self.k - 1]))


def test_gradient_warns_when_step_halving_disagrees():
    with pytest.warns(GradientAccuracyWarning):
        r = gradient_r(_CubeRootMean(1), Support((1,)), [0.0], 2)
    step = DEFAULT_QUADRATURE.fd_step  # |s0| < 1 so the raw step applies
    fine = (np.cbrt(step / 2.0) - np.cbrt(-step / 2.0)) / step
    assert r[0] == pytest.approx(fine, rel=1e-12)  # half-step value kept


def test_gradient_validates_s0_length():
    with pytest.raises(ValueError):
        gradient_r(unbiased(1), Support((1, 2)), [0.0], 4)


# ---------------------------------------------------- monte carlo cross-check


def test_ml_mean_agrees_with_simulation():
    from slmbound.estimators import MlSsnm
    from slmbound.montecarlo import estimate_mean_function

    model = ssnm(5, 1.0, 1)
    x = embed([2.0], Support((1,)), 5)
    est = estimate_mean_function(model, MlSsnm(1), [x], 200_000, seed=91)
    for k in (1, 2):
        mc = est.means[0, k - 1]
        se = est.ses[0, k - 1]
        assert abs(mc - ml_mean(x, k, 1, 1.0)) <= 3.0 * se
