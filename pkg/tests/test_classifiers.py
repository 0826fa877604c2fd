import numpy as np
import pytest

from cvauc.core import empirical_auc
from cvauc.exceptions import InvalidInputError, NumericalFailureError
from cvauc.schemas.study import ClassifierSpec
from cvauc.services import classifiers
from tests.conftest import gaussian_dataset


def test_lda_matches_closed_form(lda):
    data = gaussian_dataset(12, 9, p=3)
    model = classifiers.train(lda, data.class1, data.class2)
    mean1, mean2 = data.class1.mean(axis=0), data.class2.mean(axis=0)
    pooled = (11 * np.cov(data.class1, rowvar=False) + 8 * np.cov(data.class2, rowvar=False)) / 19
    weights = np.linalg.solve(pooled, mean1 - mean2)
    intercept = -weights @ (mean1 + mean2) / 2 + np.log(12 / 9)
    x = np.array([0.3, -0.2, 0.5])
    assert classifiers.score(model, x) == pytest.approx(model.orientation * (x @ weights + intercept))
    assert not model.ridge_applied


def test_class1_training_scores_are_higher(lda, qda):
    data = gaussian_dataset(15, 15, shift=2.0)
    for spec in (lda, qda):
        model = classifiers.train(spec, data.class1, data.class2)
        assert model.score_many(data.class1).mean() > model.score_many(data.class2).mean()


def test_predict_class_uses_sign_of_score(lda):
    data = gaussian_dataset(20, 20, shift=4.0)
    model = classifiers.train(lda, data.class1, data.class2)
    assert (classifiers.predict_class(model, data.class1) == 1).mean() > 0.9
    assert (classifiers.predict_class(model, data.class2) == 2).mean() > 0.9


def test_qda_uses_separate_covariances(qda):
    rng = np.random.default_rng(5)
    class1 = rng.standard_normal((30, 2))
    class2 = 4.0 * rng.standard_normal((30, 2))
    model = classifiers.train(qda, class1, class2)
    assert len(model.covariances) == 2
    # near the common mean the narrow class is more likely
    assert classifiers.score(model, np.zeros(2)) > 0
    assert classifiers.score(model, np.array([8.0, 8.0])) < 0


def test_collinear_features_activate_ridge(lda):
    rng = np.random.default_rng(6)
    base1 = rng.standard_normal((10, 1))
    base2 = rng.standard_normal((10, 1)) + 1.0
    model = classifiers.train(lda, np.hstack([base1, base1]), np.hstack([base2, base2]))
    assert model.ridge_applied
    assert model.ridge > 0
    assert np.all(np.isfinite(model.score_many(np.hstack([base1, base1]))))


def test_user_ridge_is_recorded():
    data = gaussian_dataset(10, 10)
    model = classifiers.train(ClassifierSpec(kind="lda", ridge=0.5), data.class1, data.class2)
    assert model.ridge == pytest.approx(0.5)


def test_dimension_mismatch(lda):
    data = gaussian_dataset(6, 6)
    model = classifiers.train(lda, data.class1, data.class2)
    with pytest.raises(InvalidInputError):
        model.score_many(np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        classifiers.train(lda, data.class1, np.zeros((6, 3)))


def test_constant_class_with_zero_variance_gets_regularized(qda):
    class1 = np.zeros((5, 2))
    class2 = np.random.default_rng(8).standard_normal((5, 2)) + 3.0
    model = classifiers.train(qda, class1, class2)
    assert model.ridge_applied
    assert classifiers.score(model, np.zeros(2)) > 0


def test_singular_after_ridge_reports_context(monkeypatch, lda):
    data = gaussian_dataset(6, 6)
    monkeypatch.setattr(classifiers, "INVERSE_TOLERANCE", -1.0)
    with pytest.raises(NumericalFailureError) as info:
        classifiers.train(lda, data.class1, data.class2, context={"rep": 3})
    assert info.value.context["rep"] == 3


def test_scores_are_bitwise_deterministic(lda, qda):
    data = gaussian_dataset(12, 12, p=3)
    points = np.random.default_rng(9).standard_normal((20, 3))
    for spec in (lda, qda):
        first = classifiers.train(spec, data.class1, data.class2).score_many(points)
        second = classifiers.train(spec, data.class1, data.class2).score_many(points)
        np.testing.assert_array_equal(first, second)


def test_lda_is_translation_equivariant(lda):
    data = gaussian_dataset(15, 10, p=2)
    shift = np.array([3.0, -7.5])
    points = np.random.default_rng(10).standard_normal((8, 2))
    base = classifiers.train(lda, data.class1, data.class2).score_many(points)
    moved = classifiers.train(lda, data.class1 + shift, data.class2 + shift).score_many(points + shift)
    np.testing.assert_allclose(np.subtract.outer(moved, moved), np.subtract.outer(base, base), atol=1e-9)


def test_qda_and_lda_agree_on_spherical_classes(lda, qda):
    train = gaussian_dataset(200, 200, p=2, seed=30)
    test = gaussian_dataset(3000, 3000, p=2, seed=31)
    aucs = []
    for spec in (lda, qda):
        model = classifiers.train(spec, train.class1, train.class2)
        aucs.append(empirical_auc(model.score_many(test.class1), model.score_many(test.class2)))
    assert abs(aucs[0] - aucs[1]) < 0.02


def test_identical_training_classes_give_constant_scores(lda):
    rows = gaussian_dataset(10, 10, seed=32).class1
    model = classifiers.train(lda, rows, rows.copy())
    points = np.random.default_rng(11).standard_normal((6, 2))
    scores = model.score_many(points)
    assert np.all(scores == scores[0])
    assert empirical_auc(scores[:3], scores[3:]) == 0.5


def test_one_dimensional_test_auc(lda):
    rng = np.random.default_rng(33)
    model = classifiers.train(lda, rng.standard_normal((200, 1)), rng.standard_normal((200, 1)) + 2.0)
    test1 = rng.standard_normal((4000, 1))
    test2 = rng.standard_normal((4000, 1)) + 2.0
    # Phi(2 / sqrt(2)) = 0.921
    assert empirical_auc(model.score_many(test1), model.score_many(test2)) == pytest.approx(0.921, abs=0.05)
