import numpy as np
import pytest

from cvauc.core import TwoClassDataset
from cvauc.schemas.study import ClassifierSpec, StudyConfig


class ConstantRule:
    """Scores every observation with the same fixed linear rule"""

    def __init__(self, weights=None, offset: float = 0.0):
        self.weights = weights
        self.offset = offset
        self.ridge_applied = False

    def score_many(self, features):
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if self.weights is None:
            return np.ones(features.shape[0])
        return features @ np.asarray(self.weights, dtype=float) + self.offset


def always_class1(spec, train1, train2, context=None):
    return ConstantRule()


def fixed_linear(spec, train1, train2, context=None):
    """Ignores the training data: score = p/2 - sum(x)"""
    p = train1.shape[1]
    return ConstantRule(weights=-np.ones(p), offset=0.5 * p)


@pytest.fixture
def lda():
    return ClassifierSpec(kind="lda")


@pytest.fixture
def qda():
    return ClassifierSpec(kind="qda")


def gaussian_dataset(n1, n2, p=2, shift=1.0, seed=7):
    rng = np.random.default_rng(seed)
    return TwoClassDataset(rng.standard_normal((n1, p)), rng.standard_normal((n2, p)) + shift)


@pytest.fixture
def data_8x8():
    return gaussian_dataset(8, 8)


@pytest.fixture
def data_6x6():
    return gaussian_dataset(6, 6, seed=11)


@pytest.fixture
def separated_1d():
    class1 = np.linspace(100.0, 101.0, 6)[:, np.newaxis]
    class2 = np.linspace(0.0, 1.0, 6)[:, np.newaxis]
    return TwoClassDataset(class1, class2)


@pytest.fixture
def small_study():
    return StudyConfig(
        n1=10, n2=10, p=2, K=2, M=60, R=3, n_mc=6, seed=1,
        estimators=["cvkm", "cvkr"], true_auc=False
    )
