"""Bound chain: restricted CRB, support relaxation, maxima, closed forms.

Anchor values are computed by hand (2x2 adjugates, explicit exponential
factors) and the support-search results are checked against full manual
enumerations on three-candidate instances.
"""

import math
from itertools import combinations

import numpy as np
import pytest

from slmbound.bounds import (
    DEFAULT_BUDGET,
    bound_L_K,
    bound_L_star,
    crb_lgm,
    crb_restricted,
    ssnm_s1_estimator_bound,
    ssnm_unbiased_bound,
    theorem_bound,
)
from slmbound.errors import (
    BudgetExceededError,
    SingularMatrixError,
    UnsupportedConfigurationError,
)
from slmbound.means import MeanFunction, affine, ht_induced, unbiased
from slmbound.model import (
    LinearGaussianModel,
    SparseLinearModel,
    Support,
    embed,
    gaussian_matrix,
    ssnm,
    xi_and_j,
)
from slmbound.rng import normals, uniforms

E4 = math.exp(-4.0)  # 0.018315638888734...


# ---------------------------------------------------------------- crb_lgm


def test_crb_identity_gram():
    assert crb_lgm(np.eye(3), [0.0, 1.0, 0.0], 2.0) == pytest.approx(2.0, rel=1e-14)


def test_crb_diagonal_gram():
    a = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert crb_lgm(a, [0.0, 1.0], 1.0) == pytest.approx(0.25, rel=1e-14)
    assert crb_lgm(a, [1.0, 0.0], 1.0) == pytest.approx(1.0, rel=1e-14)


def test_crb_matches_adjugate_inverse():
    for seed in range(20):
        a = normals(2000 + seed, 0, 8).reshape(4, 2)
        r = normals(2100 + seed, 0, 2)
        g = a.T @ a
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        ginv = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]]) / det
        expect = 1.7 * float(r @ ginv @ r)
        assert crb_lgm(a, r, 1.7) == pytest.approx(expect, rel=1e-9)


def test_crb_rejects_rank_deficiency_and_bad_sigma():
    with pytest.raises(SingularMatrixError):
        crb_lgm(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        crb_lgm(np.eye(2), [1.0, 0.0], 0.0)


# ---------------------------------------------------------- crb_restricted


def test_crb_restricted_ssnm_component_in_support():
    m = ssnm(4, 2.0, 2)
    v = crb_restricted(m, Support((1, 3)), unbiased(3), [0.5, -0.5])
    assert v == pytest.approx(2.0, rel=1e-12)


def test_crb_restricted_component_outside_support_vanishes():
    m = ssnm(4, 2.0, 2)
    v = crb_restricted(m, Support((1, 3)), unbiased(2), [0.5, -0.5])
    assert v == 0.0


def test_crb_restricted_hand_gram():
    # H = [[1,1],[0,1]], K = {2}: Gram = 1 + 1 = 2, so sigma^2 / 2
    m = SparseLinearModel(np.array([[1.0, 1.0], [0.0, 1.0]]), 3.0, 1)
    v = crb_restricted(m, Support((2,)), unbiased(2), [0.0])
    assert v == pytest.approx(1.5, rel=1e-12)


def test_crb_restricted_needs_sparse_model():
    lgm = LinearGaussianModel(np.eye(3), 1.0)
    with pytest.raises(ValueError):
        crb_restricted(lgm, Support((1,)), unbiased(1), [0.0])


# ---------------------------------------------------------------- bound_L_K


def test_bound_support_covering_x0_gives_sigma2():
    m = ssnm(4, 1.5, 2)
    x0 = np.array([2.0, 0.0, -1.0, 0.0])
    for k in (1, 3):
        res = bound_L_K(m, unbiased(k), Support((1, 3)), x0)
        assert res.value == pytest.approx(1.5, rel=1e-12)
        assert res.beta2 == pytest.approx(1.0, abs=1e-15)


def test_bound_swap_support_pays_weakest_entry():
    m = ssnm(4, 1.5, 2)
    x0 = np.array([3.0, -1.0, 0.0, 0.0])  # xi = -1 at j = 2
    res = bound_L_K(m, unbiased(3), Support((1, 3)), x0)
    assert res.value == pytest.approx(1.5 * math.exp(-1.0 / 1.5), rel=1e-12)
    assert res.gamma_at_xs0 == pytest.approx(0.0, abs=1e-15)


def test_bound_frozen_three_dim_value():
    m = ssnm(3, 1.0, 1)
    x0 = np.array([2.0, 0.0, 0.0])
    res = bound_L_K(m, unbiased(2), Support((2,)), x0)
    assert res.value == pytest.approx(E4, rel=1e-12)
    assert res.value == pytest.approx(0.018315638888734, rel=1e-10)
    assert res.beta2 == pytest.approx(E4, rel=1e-12)
    assert res.crb_term == pytest.approx(1.0, rel=1e-12)


def test_bound_result_reassembles_from_ingredients():
    h = gaussian_matrix(4, 4, 51)
    m = SparseLinearModel(h, 0.8, 2)
    x0 = embed([1.0, -2.0], Support((2, 4)), 4)
    for k_set in [Support((1, 2)), Support((2, 4)), Support((3, 4))]:
        res = bound_L_K(m, unbiased(2), k_set, x0)
        rebuilt = (res.beta2 * (res.crb_term + res.gamma_at_xs0 ** 2)
                   - res.gamma_at_x0 ** 2)
        scale = max(1e-30, abs(res.value), abs(rebuilt))
        assert abs(res.value - rebuilt) <= 1e-12 * scale
        assert abs(res.value - res.tilde_form_value) <= 1e-10 * scale
        assert res.crb_term >= 0.0


def test_bound_two_routes_agree_with_numeric_gradients():
    h = gaussian_matrix(5, 4, 52)
    m = SparseLinearModel(h, 1.2, 2)
    x0 = embed([2.0, 0.7], Support((1, 3)), 4)
    for k in range(1, 5):
        gamma = ht_induced(k, 2.0, math.sqrt(1.2))
        for c in combinations(range(1, 5), 2):
            res = bound_L_K(m, gamma, Support(c), x0)
            scale = max(1e-30, abs(res.value), abs(res.tilde_form_value))
            assert abs(res.value - res.tilde_form_value) <= 1e-10 * scale


# -------------------------------------------------------------- bound_L_star


def test_star_frozen_enumeration():
    # three candidates by hand: K={1} and K={3} give 0, K={2} gives e^-4
    m = ssnm(3, 1.0, 1)
    x0 = np.array([2.0, 0.0, 0.0])
    res = bound_L_star(m, unbiased(2), x0)
    assert res.value == pytest.approx(E4, rel=1e-12)
    assert res.k_set.indices == (2,)
    zero1 = bound_L_K(m, unbiased(2), Support((1,)), x0)
    zero3 = bound_L_K(m, unbiased(2), Support((3,)), x0)
    assert abs(zero1.value) < 1e-15 and abs(zero3.value) < 1e-15


def test_star_zero_parameter_is_sigma2_for_every_component():
    m = ssnm(3, 2.5, 1)
    for k in (1, 2, 3):
        res = bound_L_star(m, unbiased(k), np.zeros(3))
        assert res.value == pytest.approx(2.5, rel=1e-12)
        assert res.k_set.indices == (k,)  # only K = {k} attains the max


def test_star_tie_break_is_lexicographic():
    m = ssnm(3, 1.0, 2)
    res = bound_L_star(m, unbiased(2), np.zeros(3))
    # {1,2} and {2,3} tie at sigma^2; the first in enumeration order wins
    assert res.k_set.indices == (1, 2)
    assert res.value == pytest.approx(1.0, rel=1e-12)


def test_star_exhaustive_budget_refusal():
    big = ssnm(25, 1.0, 12)  # C(25,12) = 5200300 candidate supports
    with pytest.raises(BudgetExceededError):
        bound_L_star(big, unbiased(1), np.zeros(25))
    small = ssnm(10, 1.0, 2)  # C(10,2) = 45
    with pytest.raises(BudgetExceededError):
        bound_L_star(small, unbiased(1), np.zeros(10), budget=44)
    bound_L_star(small, unbiased(1), np.zeros(10), budget=45)


def test_star_greedy_skips_enumeration():
    big = ssnm(25, 1.0, 12)
    x0 = embed(np.arange(1.0, 13.0), Support.of(range(1, 13)), 25)
    res = bound_L_star(big, unbiased(1), x0, mode="greedy")
    assert res.value == pytest.approx(1.0, rel=1e-12)  # k on the support


def test_star_greedy_matches_exhaustive_on_clean_instances():
    for seed in range(15):
        n = 4 + seed % 3
        s = 1 + seed % 2
        m = ssnm(n, 1.0, s)
        vals = 1.0 + uniforms(2200 + seed, 0, s)  # distinct magnitudes
        pos = Support.of((np.argsort(uniforms(2300 + seed, 0, n))[:s] + 1).tolist())
        x0 = embed(vals, pos, n)
        for k in range(1, n + 1):
            ex = bound_L_star(m, unbiased(k), x0)
            gr = bound_L_star(m, unbiased(k), x0, mode="greedy")
            assert gr.value <= ex.value + 1e-12
            assert gr.value == pytest.approx(ex.value, rel=1e-10)


def test_star_rejects_unknown_mode():
    with pytest.raises(ValueError):
        bound_L_star(ssnm(3, 1.0, 1), unbiased(1), np.zeros(3), mode="magic")


# ------------------------------------------------------------ theorem bound


def test_theorem_zero_parameter():
    m = ssnm(4, 0.25, 2)
    gammas = [unbiased(k) for k in range(1, 5)]
    assert theorem_bound(m, gammas, np.zeros(4)) == pytest.approx(1.0, rel=1e-12)


def test_theorem_equals_closed_form_on_random_instances():
    for seed in range(20):
        n = 3 + seed % 4
        s = 1 + seed % min(3, n - 1)
        sigma2 = (0.5, 1.0, 4.0)[seed % 3]
        m = ssnm(n, sigma2, s)
        u = uniforms(2400 + seed, 0, n + s)
        pos = Support.of((np.argsort(u[:n])[:s] + 1).tolist())
        x0 = embed(4.0 * u[n:] - 2.0, pos, n)
        got = theorem_bound(m, [unbiased(k) for k in range(1, n + 1)], x0)
        xi, _ = xi_and_j(x0, s)
        want = ssnm_unbiased_bound(n, s, xi, sigma2)
        assert abs(got - want) <= 1e-10 * want


def test_theorem_validates_inputs():
    m = ssnm(3, 1.0, 1)
    with pytest.raises(ValueError):
        theorem_bound(m, [unbiased(1)], np.zeros(3))
    lgm = LinearGaussianModel(np.eye(3), 1.0)
    with pytest.raises(ValueError):
        theorem_bound(lgm, [unbiased(k) for k in (1, 2, 3)], np.zeros(3))


# ------------------------------------------------------------- closed forms


def test_closed_form_frozen_and_limits():
    assert ssnm_unbiased_bound(5, 1, 2.0, 1.0) == pytest.approx(
        1.0732625555549367, rel=1e-14)
    assert ssnm_unbiased_bound(5, 1, 0.0, 1.0) == 5.0
    assert ssnm_unbiased_bound(4, 2, 0.0, 0.25) == 1.0
    assert ssnm_unbiased_bound(5, 2, 20.0, 1.0) == pytest.approx(2.0, abs=1e-10)


def test_closed_form_strictly_decreasing_in_magnitude():
    xs = np.linspace(0.0, 5.0, 40)
    vals = [ssnm_unbiased_bound(6, 2, x, 1.0) for x in xs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert ssnm_unbiased_bound(6, 2, -3.0, 1.0) == ssnm_unbiased_bound(6, 2, 3.0, 1.0)


def test_closed_form_validation():
    with pytest.raises(ValueError):
        ssnm_unbiased_bound(3, 3, 1.0, 1.0)
    with pytest.raises(ValueError):
        ssnm_unbiased_bound(3, 0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ssnm_unbiased_bound(3, 1, 1.0, 0.0)


def test_closed_form_continuous_at_sparsity_boundary():
    for n in (2, 5, 10):
        for sigma2 in (0.25, 1.0):
            lo = ssnm_unbiased_bound(n, 1, 0.0, sigma2)
            hi = ssnm_unbiased_bound(n, 1, 1e-6, sigma2)
            assert abs(hi - lo) < 1e-9 * n * sigma2


# ------------------------------------------------- estimator-induced bound


def test_s1_bound_with_unbiased_means_reduces_to_closed_form():
    m = ssnm(5, 1.0, 1)
    x0 = embed([2.0], Support((1,)), 5)
    got = ssnm_s1_estimator_bound(m, unbiased(1), unbiased(2), x0)
    assert got == pytest.approx(1.0 + 4.0 * E4, rel=1e-12)
    assert got == pytest.approx(ssnm_unbiased_bound(5, 1, 2.0, 1.0), rel=1e-12)


def test_s1_bound_zero_parameter_unbiased():
    m = ssnm(4, 2.0, 1)
    got = ssnm_s1_estimator_bound(m, unbiased(1), unbiased(2), np.zeros(4))
    assert got == pytest.approx(8.0, rel=1e-12)


def test_s1_bound_matches_manual_two_term_assembly():
    m = ssnm(5, 1.0, 1)
    x0 = embed([2.0], Support((1,)), 5)
    gj = ht_induced(1, 4.0, 1.0)
    gi = ht_induced(2, 4.0, 1.0)
    got = ssnm_s1_estimator_bound(m, gj, gi, x0)
    tj = bound_L_K(m, gj, Support((1,)), x0).value
    ti = bound_L_K(m, gi, Support((2,)), x0).value
    assert got == pytest.approx(tj + 4.0 * ti, rel=1e-12)


def test_s1_bound_accepts_means_without_relabeling():
    m = ssnm(4, 1.0, 1)
    x0 = embed([1.0], Support((2,)), 4)  # j = 2, so i = 1
    gj = affine(2, [0.0, 1.0, 0.0, 0.0], 0.0)
    gi = affine(1, [1.0, 0.0, 0.0, 0.0], 0.0)
    got = ssnm_s1_estimator_bound(m, gj, gi, x0)
    tj = bound_L_K(m, gj, Support((2,)), x0).value
    ti = bound_L_K(m, gi, Support((1,)), x0).value
    assert got == pytest.approx(tj + 3.0 * ti, rel=1e-12)


class _LopsidedMean(MeanFunction):
    """Relabeling silently changes scale; breaks off-support symmetry."""

    def __init__(self, k, scale=1.0):
        self.k = k
        self.scale = scale

    def evaluate(self, x):
        return self.scale * float(np.asarray(x, dtype=float)[self.k - 1])

    def with_component(self, k):
        return _LopsidedMean(k, self.scale if k < 3 else 2.0)


def test_s1_bound_detects_asymmetric_off_support_means():
    m = ssnm(4, 1.0, 1)
    x0 = embed([2.0], Support((1,)), 4)
    with pytest.raises(RuntimeError, match="disagree"):
        ssnm_s1_estimator_bound(m, _LopsidedMean(1), _LopsidedMean(2), x0)


def test_s1_bound_configuration_errors():
    x0 = np.array([2.0, 0.0, 0.0])
    with pytest.raises(UnsupportedConfigurationError):
        ssnm_s1_estimator_bound(ssnm(4, 1.0, 2), unbiased(1), unbiased(2),
                                [2.0, 0.0, 0.0, 0.0])
    h = gaussian_matrix(3, 3, 61)
    with pytest.raises(UnsupportedConfigurationError):
        ssnm_s1_estimator_bound(SparseLinearModel(h, 1.0, 1),
                                unbiased(1), unbiased(2), x0)
    m = ssnm(3, 1.0, 1)
    with pytest.raises(ValueError):
        ssnm_s1_estimator_bound(m, unbiased(1), unbiased(2), [2.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        ssnm_s1_estimator_bound(m, unbiased(2), unbiased(2), x0)  # gamma_j off j
    with pytest.raises(ValueError):
        ssnm_s1_estimator_bound(m, unbiased(1), unbiased(3), x0)  # gamma_i off i


def test_default_budget_is_documented_size():
    assert DEFAULT_BUDGET == 10**6
