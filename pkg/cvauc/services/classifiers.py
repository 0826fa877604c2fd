from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np

from cvauc.config import settings
from cvauc.exceptions import InvalidInputError, NumericalFailureError
from cvauc.schemas.study import ClassifierSpec
from cvauc.utils.validators import validate_matrix
import logging

logger = logging.getLogger(__name__)

INVERSE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class TrainedClassifier:
    """A fitted LDA or QDA scoring rule h_X"""
    kind: str
    means: Tuple[np.ndarray, np.ndarray]
    covariances: Tuple[np.ndarray, ...]
    inverses: Tuple[np.ndarray, ...]
    log_dets: Tuple[float, ...]
    log_prior_ratio: float
    orientation: float
    ridge: float
    ridge_applied: bool
    weights: Optional[np.ndarray] = None
    intercept: float = 0.0

    @property
    def p(self) -> int:
        return self.means[0].size

    def _raw_scores(self, features: np.ndarray) -> np.ndarray:
        if self.kind == "lda":
            return features @ self.weights + self.intercept
        quad = []
        for mean, inverse in zip(self.means, self.inverses):
            diff = features - mean
            quad.append(np.einsum("ij,jk,ik->i", diff, inverse, diff))
        return (
            -0.5 * quad[0] - 0.5 * self.log_dets[0]
            + 0.5 * quad[1] + 0.5 * self.log_dets[1]
            + self.log_prior_ratio
        )

    def score_many(self, features) -> np.ndarray:
        """Scores of every row of ``features``"""
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[np.newaxis, :]
        if features.shape[1] != self.p:
            raise InvalidInputError(
                "Feature dimension does not match the trained classifier",
                {"expected": self.p, "got": features.shape[1]}
            )
        return self.orientation * self._raw_scores(features)


def score(classifier: TrainedClassifier, x) -> float:
    """h_X(x) for a single feature vector"""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("x must be a single feature vector", {"shape": x.shape})
    return float(classifier.score_many(x)[0])


def predict_class(classifier, features) -> np.ndarray:
    """Class 1 iff score > 0, else class 2"""
    return np.where(classifier.score_many(features) > 0, 1, 2)


def _regularize(covariance: np.ndarray, ridge: float, context: Dict[str, Any]) -> Tuple[np.ndarray, float, bool]:
    """Add the user ridge, then the automatic ridge when ill-conditioned"""
    p = covariance.shape[0]
    covariance = 0.5 * (covariance + covariance.T) + ridge * np.eye(p)
    eigenvalues = np.linalg.eigvalsh(covariance)
    applied = False
    total = ridge
    if eigenvalues[0] <= settings.ridge_eig_ratio * eigenvalues[-1]:
        scale = np.trace(covariance) / p
        extra = settings.ridge_scale * (scale if scale > 0 else 1.0)
        covariance = covariance + extra * np.eye(p)
        total += extra
        applied = True
        logger.debug(f"Automatic ridge {extra:.3g} added ({context})")
    return covariance, total, applied


def _invert(covariance: np.ndarray, context: Dict[str, Any]) -> Tuple[np.ndarray, float]:
    try:
        inverse = np.linalg.inv(covariance)
        sign, log_det = np.linalg.slogdet(covariance)
    except np.linalg.LinAlgError as e:
        raise NumericalFailureError(f"Singular covariance after ridge: {e}", context)
    residual = np.linalg.norm(covariance @ inverse - np.eye(covariance.shape[0]), ord=np.inf)
    if sign <= 0 or not np.isfinite(residual) or residual >= INVERSE_TOLERANCE:
        raise NumericalFailureError(
            "Singular covariance after ridge",
            dict(context, residual=float(residual))
        )
    return inverse, float(log_det)


def _covariance(rows: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.cov(rows, rowvar=False, ddof=1))


def train(
    spec: ClassifierSpec,
    train1,
    train2,
    context: Optional[Dict[str, Any]] = None
) -> TrainedClassifier:
    """Fit LDA (pooled covariance) or QDA (per-class covariances)"""
    context = dict(context or {})
    train1 = validate_matrix("train1", train1, min_rows=2)
    train2 = validate_matrix("train2", train2, min_rows=2)
    if train1.shape[1] != train2.shape[1]:
        raise InvalidInputError(
            "Training matrices must have the same number of features",
            dict(context, p1=train1.shape[1], p2=train2.shape[1])
        )
    n1, n2 = train1.shape[0], train2.shape[0]
    mean1, mean2 = train1.mean(axis=0), train2.mean(axis=0)
    log_prior_ratio = float(np.log(n1 / n2))

    if spec.kind == "lda":
        pooled = ((n1 - 1) * _covariance(train1) + (n2 - 1) * _covariance(train2)) / (n1 + n2 - 2)
        pooled, ridge, applied = _regularize(pooled, spec.ridge, context)
        inverse, log_det = _invert(pooled, context)
        weights = inverse @ (mean1 - mean2)
        intercept = float(-weights @ (mean1 + mean2) / 2.0 + log_prior_ratio)
        classifier = TrainedClassifier(
            kind="lda",
            means=(mean1, mean2),
            covariances=(pooled,),
            inverses=(inverse,),
            log_dets=(log_det,),
            log_prior_ratio=log_prior_ratio,
            orientation=1.0,
            ridge=ridge,
            ridge_applied=applied,
            weights=weights,
            intercept=intercept
        )
    else:
        covariances, inverses, log_dets = [], [], []
        ridge, applied = 0.0, False
        for rows in (train1, train2):
            covariance, class_ridge, class_applied = _regularize(_covariance(rows), spec.ridge, context)
            inverse, log_det = _invert(covariance, context)
            covariances.append(covariance)
            inverses.append(inverse)
            log_dets.append(log_det)
            ridge = max(ridge, class_ridge)
            applied = applied or class_applied
        classifier = TrainedClassifier(
            kind="qda",
            means=(mean1, mean2),
            covariances=tuple(covariances),
            inverses=tuple(inverses),
            log_dets=tuple(log_dets),
            log_prior_ratio=log_prior_ratio,
            orientation=1.0,
            ridge=ridge,
            ridge_applied=applied
        )

    # Orientation: class-1 training scores must not average below class-2 ones
    raw1 = classifier.score_many(train1).mean()
    raw2 = classifier.score_many(train2).mean()
    if not (np.isfinite(raw1) and np.isfinite(raw2)):
        raise NumericalFailureError("Non-finite training scores", context)
    if raw1 < raw2:
        classifier = replace(classifier, orientation=-1.0)
    return classifier
