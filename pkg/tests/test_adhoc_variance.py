import numpy as np
import pytest

from cvauc.exceptions import InvalidInputError
from cvauc.services.adhoc_variance import (
    CovarianceComponents,
    expected_naive_bias,
    expected_naive_value,
    naive_var_err_cvk,
    var1_cvk,
    var2_cvk,
    var3_cvk,
    var_cvkm,
    var_cvkr,
    var_decomposition,
)


def test_naive_var_values():
    assert naive_var_err_cvk([0.1, 0.2, 0.3]) == pytest.approx(0.01 / 3)


def test_naive_var_constant_is_zero():
    assert naive_var_err_cvk([0.25] * 5) == 0.0


def test_naive_var_two_pass_oracle():
    rng = np.random.default_rng(0)
    values = rng.uniform(size=7)
    mean = sum(values) / 7
    expected = sum((v - mean) ** 2 for v in values) / 6 / 7
    assert naive_var_err_cvk(values) == pytest.approx(expected, rel=1e-12)


def test_naive_var_needs_two_folds():
    with pytest.raises(InvalidInputError):
        naive_var_err_cvk([0.1])


def test_var_decomposition_values():
    comp = CovarianceComponents(sigma2=1.0, omega=0.5, gamma=0.1)
    assert var_decomposition(comp, 10, 2) == pytest.approx(0.23)


def test_var_decomposition_independent_limit():
    comp = CovarianceComponents(sigma2=0.3, omega=0.0, gamma=0.0)
    assert var_decomposition(comp, 12, 3) == pytest.approx(0.3 / 12)


def test_expected_naive_bias_is_minus_gamma():
    comp = CovarianceComponents(sigma2=1.0, omega=0.5, gamma=0.1)
    assert expected_naive_bias(comp) == -0.1
    assert expected_naive_value(comp, 10, 2) - var_decomposition(comp, 10, 2) == pytest.approx(-0.1)


def test_components_reject_negative_variance():
    with pytest.raises(InvalidInputError):
        CovarianceComponents(sigma2=-1.0, omega=0.0, gamma=0.0)


def test_var2_values():
    assert var2_cvk([0.7, 0.8, 0.9]) == pytest.approx(0.01 / 3)
    assert var2_cvk([0.6, 0.6]) == 0.0


def test_var1_scales_pooled_variance():
    pairs = np.array([[0.6, 0.7], [0.8, 0.9]])
    assert var1_cvk(pairs) == pytest.approx(np.var(pairs, ddof=1) / 2)


def test_var1_and_var2_differ_only_in_prefactor_on_matched_sequence():
    # a 1 x K row of matched AUCs: 1/sqrt(K) of the sample variance vs 1/K
    matched = np.array([0.7, 0.75, 0.9, 0.8])
    assert var1_cvk(matched[np.newaxis, :]) == pytest.approx(var2_cvk(matched) * np.sqrt(4))


def test_var1_needs_full_pairing():
    pairs = np.array([[0.6, np.nan], [np.nan, 0.9]])
    with pytest.raises(InvalidInputError):
        var1_cvk(pairs)


def test_var3_criteria():
    pairs = np.array([[0.6, 0.7], [0.8, 0.9]])
    auc = pairs.mean()
    rows = pairs.mean(axis=1) - auc
    cols = pairs.mean(axis=0) - auc
    assert var3_cvk(pairs, auc) == pytest.approx(np.sum(rows ** 2) / 2 + np.sum(cols ** 2) / 2)
    assert var3_cvk(pairs, auc, "mle") == pytest.approx(np.sum(rows ** 2) / 4 + np.sum(cols ** 2) / 4)
    with pytest.raises(InvalidInputError):
        var3_cvk(pairs, auc, "other")


def test_var_cvkr_with_one_repetition_equals_cvk():
    pairs = np.array([[[0.6, 0.7, 0.65], [0.8, 0.9, 0.75], [0.7, 0.72, 0.71]]])
    assert var_cvkr(pairs, 1) == pytest.approx(var1_cvk(pairs[0]))
    assert var_cvkr(np.diagonal(pairs, axis1=1, axis2=2), 2) == pytest.approx(var2_cvk(np.diagonal(pairs[0])))
    assert var_cvkr(pairs, 3, rep_auc=[pairs.mean()]) == pytest.approx(var3_cvk(pairs[0], pairs.mean()))


def test_var_cvkr_averages():
    matched = np.array([[0.7, 0.8, 0.9], [0.6, 0.6, 0.6]])
    assert var_cvkr(matched, 2) == pytest.approx((0.01 / 3 + 0.0) / 2)
    with pytest.raises(InvalidInputError):
        var_cvkr(matched, 4)
    with pytest.raises(InvalidInputError):
        var_cvkr(np.zeros((2, 2, 2)), 3)


def test_var_cvkm():
    assert var_cvkm([0.7] * 10, 10, 10) == 0.0
    values = np.array([0.6, 0.7, 0.9, 0.8])
    assert var_cvkm(values, 4, 4) == pytest.approx(np.var(values, ddof=1) / 4)


def test_all_variances_non_negative():
    rng = np.random.default_rng(1)
    pairs = rng.uniform(size=(4, 4))
    assert var1_cvk(pairs) >= 0
    assert var2_cvk(np.diagonal(pairs)) >= 0
    assert var3_cvk(pairs, pairs.mean()) >= 0
    assert var_cvkm(rng.uniform(size=20), 4, 4) >= 0
