"""Cross-validation estimators of the AUC and of the error rate.

CVN, CVK and CVKR share one K-fold evaluator: for every repetition and every
excluded fold pair (k1, k2) one classifier is trained without fold k1 of
class 1 and fold k2 of class 2, then scores the two testing folds. Full
pairing trains K1*K2 classifiers per repetition, matched pairing trains K
(k1 = k2 only). CVKM trains one classifier per repetition and tests on fold
0 of each class.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Tuple

import numpy as np

from cvauc.config import settings
from cvauc.core import (
    CvMode,
    FoldPlan,
    Pairing,
    PairwiseAucTable,
    RepetitionScores,
    TwoClassDataset,
    fold_pairs,
    frozen_array,
    psi_matrix,
)
from cvauc.exceptions import CoverageError, InvalidInputError, NumericalFailureError
from cvauc.schemas.study import ClassifierSpec
from cvauc.services import classifiers
from cvauc.services.resampling import plan_cvn
import logging

logger = logging.getLogger(__name__)

Trainer = Callable[..., Any]

# Target for the expected number of never-covered CVKM pairs behind the M suggestion
COVERAGE_TARGET = 0.01


@dataclass
class EstimationDiagnostics:
    trainings: int = 0
    ridge_activations: int = 0
    zero_den_pairs: int = 0
    min_den: Optional[int] = None
    policy: Optional[str] = None

    def record(self, classifier) -> None:
        self.trainings += 1
        if getattr(classifier, "ridge_applied", False):
            self.ridge_activations += 1


@dataclass(frozen=True)
class CvAucResult:
    """Point estimate plus everything the variance estimators need"""
    mode: CvMode
    pairing: Pairing
    auc: float
    pair_mean: np.ndarray
    per_obs_auc1: np.ndarray
    per_obs_auc2: np.ndarray
    rep_auc: np.ndarray
    table: Optional[PairwiseAucTable] = None
    reps: Optional[RepetitionScores] = None
    per_fold_auc: Optional[np.ndarray] = None
    matched_auc: Optional[np.ndarray] = None
    diagnostics: EstimationDiagnostics = field(default_factory=EstimationDiagnostics)
    tol: float = 0.0

    def __post_init__(self):
        for name in ("pair_mean", "per_obs_auc1", "per_obs_auc2", "rep_auc", "per_fold_auc", "matched_auc"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, frozen_array(value))

    @property
    def n1(self) -> int:
        return self.pair_mean.shape[0]

    @property
    def n2(self) -> int:
        return self.pair_mean.shape[1]


@dataclass(frozen=True)
class CvErrResult:
    """CVK error rate of the pooled two-class sample"""
    err: float
    errors: np.ndarray
    fold_ids: np.ndarray
    fold_errors: np.ndarray
    diagnostics: EstimationDiagnostics = field(default_factory=EstimationDiagnostics)

    def __post_init__(self):
        for name in ("errors", "fold_ids", "fold_errors"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))

    @property
    def n_folds(self) -> int:
        return self.fold_errors.size


def _train(trainer: Trainer, spec, train1, train2, context, diagnostics) -> Any:
    try:
        classifier = trainer(spec, train1, train2, context=context)
    except NumericalFailureError as e:
        e.context = {**context, **e.context}
        raise
    diagnostics.record(classifier)
    return classifier


def _check_plan(data: TwoClassDataset, plan: FoldPlan, modes) -> None:
    if plan.mode not in modes:
        raise InvalidInputError(
            "Plan mode does not match the estimator",
            {"plan": plan.mode.value, "expected": [mode.value for mode in modes]}
        )
    if (plan.n1, plan.n2) != (data.n1, data.n2):
        raise InvalidInputError(
            "Plan does not cover the dataset",
            {"plan": (plan.n1, plan.n2), "data": (data.n1, data.n2)}
        )


def _evaluate_kfold(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    plan: FoldPlan,
    pairing: Pairing,
    trainer: Trainer,
    tol: float
) -> CvAucResult:
    n1, n2, k1, k2 = data.n1, data.n2, plan.k1, plan.k2
    n_reps = plan.n_reps
    diagnostics = EstimationDiagnostics()
    psi_sum = np.zeros((n1, n2))
    pair_count = np.zeros((n1, n2))
    per_fold = np.full((n_reps, k1, k2), np.nan)
    rep_auc = np.empty(n_reps)
    matched = np.full((n_reps, k1), np.nan) if k1 == k2 else None
    scores1 = np.full((n_reps, n1), np.nan)
    scores2 = np.full((n_reps, n2), np.nan)

    for r, rep in enumerate(plan.reps):
        folds1, folds2 = rep.class1.assignment, rep.class2.assignment
        rep_sum, rep_pairs = 0.0, 0
        for fold1, fold2 in fold_pairs(k1, k2, pairing):
            context = {"rep": r, "k1": fold1, "k2": fold2}
            classifier = _train(
                trainer, spec,
                data.class1[folds1 != fold1], data.class2[folds2 != fold2],
                context, diagnostics
            )
            test1, test2 = rep.class1.members(fold1), rep.class2.members(fold2)
            s1 = classifier.score_many(data.class1[test1])
            s2 = classifier.score_many(data.class2[test2])
            if not (np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))):
                raise NumericalFailureError("Non-finite classifier scores", context)
            block = psi_matrix(s1, s2, tol)
            psi_sum[np.ix_(test1, test2)] += block
            pair_count[np.ix_(test1, test2)] += 1
            per_fold[r, fold1, fold2] = block.mean()
            rep_sum += block.sum()
            rep_pairs += block.size
            if pairing == Pairing.MATCHED:
                scores1[r, test1] = s1
                scores2[r, test2] = s2
        rep_auc[r] = rep_sum / rep_pairs
        if matched is not None:
            matched[r] = np.diagonal(per_fold[r])

    pair_mean = np.full((n1, n2), np.nan)
    np.divide(psi_sum, pair_count, out=pair_mean, where=pair_count > 0)
    auc = float(rep_auc.mean())
    reps = None
    if pairing == Pairing.MATCHED:
        reps = RepetitionScores(
            scores1, scores2,
            np.ones((n_reps, n1), dtype=bool), np.ones((n_reps, n2), dtype=bool)
        )
    if diagnostics.ridge_activations:
        logger.warning(
            f"Ridge regularization activated in {diagnostics.ridge_activations} "
            f"of {diagnostics.trainings} trainings"
        )
    return CvAucResult(
        mode=plan.mode,
        pairing=pairing,
        auc=auc,
        pair_mean=pair_mean,
        per_obs_auc1=np.nanmean(pair_mean, axis=1),
        per_obs_auc2=np.nanmean(pair_mean, axis=0),
        rep_auc=rep_auc,
        reps=reps,
        per_fold_auc=per_fold,
        matched_auc=matched,
        diagnostics=diagnostics,
        tol=tol
    )


def auc_cvn(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    trainer: Trainer = classifiers.train,
    tol: Optional[float] = None
) -> CvAucResult:
    """Leave-pair-out: each (i, j) is scored by a classifier trained without x_i and y_j"""
    tol = settings.tie_tolerance if tol is None else tol
    return _evaluate_kfold(data, spec, plan_cvn(data.n1, data.n2), Pairing.FULL, trainer, tol)


def auc_cvk(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    plan: FoldPlan,
    pairing: Optional[Pairing] = None,
    trainer: Trainer = classifiers.train,
    tol: Optional[float] = None
) -> CvAucResult:
    """Single K-fold estimator; also yields AUC_{k1k2} and AUC_k"""
    _check_plan(data, plan, (CvMode.CVK, CvMode.CVN))
    tol = settings.tie_tolerance if tol is None else tol
    pairing = Pairing(pairing or plan.pairing)
    if pairing == Pairing.MATCHED and plan.k1 != plan.k2:
        raise InvalidInputError("matched pairing needs K1 = K2", {"K1": plan.k1, "K2": plan.k2})
    return _evaluate_kfold(data, spec, plan, pairing, trainer, tol)


def auc_cvkr(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    plan: FoldPlan,
    pairing: Optional[Pairing] = None,
    trainer: Trainer = classifiers.train,
    tol: Optional[float] = None
) -> CvAucResult:
    """Repeated K-fold: the per-repetition K-fold estimates averaged over R"""
    _check_plan(data, plan, (CvMode.CVKR, CvMode.CVK))
    tol = settings.tie_tolerance if tol is None else tol
    pairing = Pairing(pairing or plan.pairing)
    if pairing == Pairing.MATCHED and plan.k1 != plan.k2:
        raise InvalidInputError("matched pairing needs K1 = K2", {"K1": plan.k1, "K2": plan.k2})
    return _evaluate_kfold(data, spec, plan, pairing, trainer, tol)


def suggest_m(n1: int, n2: int, n1_test: int, n2_test: int) -> int:
    """Smallest M with fewer than COVERAGE_TARGET expected never-covered pairs"""
    q = (n1_test / n1) * (n2_test / n2)
    if q >= 1.0:
        return 1
    return int(math.ceil(math.log(COVERAGE_TARGET / (n1 * n2)) / math.log1p(-q)))


def cvkm_scores(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    plan: FoldPlan,
    trainer: Trainer = classifiers.train,
    diagnostics: Optional[EstimationDiagnostics] = None
) -> RepetitionScores:
    """h_m on testing fold 0 of every repetition"""
    diagnostics = diagnostics if diagnostics is not None else EstimationDiagnostics()
    ind1, ind2 = plan.test_indicators(0)
    scores1 = np.full(ind1.shape, np.nan)
    scores2 = np.full(ind2.shape, np.nan)
    for m, rep in enumerate(plan.reps):
        context = {"rep": m}
        classifier = _train(
            trainer, spec,
            data.class1[~ind1[m]], data.class2[~ind2[m]],
            context, diagnostics
        )
        scores1[m, ind1[m]] = classifier.score_many(data.class1[ind1[m]])
        scores2[m, ind2[m]] = classifier.score_many(data.class2[ind2[m]])
    if not (np.all(np.isfinite(scores1[ind1])) and np.all(np.isfinite(scores2[ind2]))):
        raise NumericalFailureError("Non-finite classifier scores", {"mode": "cvkm"})
    return RepetitionScores(scores1, scores2, ind1, ind2)


def tested_psi_blocks(reps: RepetitionScores, tol: float, block_size: int = 128):
    """Yield (slice, W) with W[m, i, j] = I_i^m I_j^m psi(h_m(i), h_m(j))"""
    for block in reps.blocks(block_size):
        ind1, ind2 = reps.ind1[block], reps.ind2[block]
        kernel = psi_matrix(
            np.where(ind1, reps.scores1[block], 0.0),
            np.where(ind2, reps.scores2[block], 0.0),
            tol
        )
        yield block, kernel * ind1[:, :, np.newaxis] * ind2[:, np.newaxis, :]


def pairwise_table(reps: RepetitionScores, tol: float) -> Tuple[PairwiseAucTable, np.ndarray]:
    """PairwiseAucTable and the per-repetition fold-0 AUCs (AUC_11m)"""
    n1, n2 = reps.scores1.shape[1], reps.scores2.shape[1]
    table = PairwiseAucTable.zeros(n1, n2)
    auc_11m = np.empty(reps.n_reps)
    for block, weighted in tested_psi_blocks(reps, tol):
        ind1 = reps.ind1[block].astype(np.int64)
        ind2 = reps.ind2[block].astype(np.int64)
        table = table.merge(PairwiseAucTable(weighted.sum(axis=0), ind1.T @ ind2))
        auc_11m[block] = weighted.sum(axis=(1, 2)) / (ind1.sum(axis=1) * ind2.sum(axis=1))
    return table, auc_11m


def auc_cvkm(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    plan: FoldPlan,
    trainer: Trainer = classifiers.train,
    tol: Optional[float] = None,
    policy: Optional[str] = None
) -> CvAucResult:
    """Monte-Carlo K-fold estimator with indicator-weighted pair ratios"""
    _check_plan(data, plan, (CvMode.CVKM,))
    tol = settings.tie_tolerance if tol is None else tol
    policy = policy or settings.zero_den_policy
    if policy not in ("strict", "skip"):
        raise InvalidInputError("Unknown zero-denominator policy", {"policy": policy})

    diagnostics = EstimationDiagnostics(policy=policy)
    reps = cvkm_scores(data, spec, plan, trainer, diagnostics)
    table, auc_11m = pairwise_table(reps, tol)
    covered = table.covered
    zero_pairs = int((~covered).sum())
    diagnostics.zero_den_pairs = zero_pairs
    diagnostics.min_den = int(table.den.min())

    if zero_pairs:
        worst = np.argwhere(~covered)[0]
        suggestion = suggest_m(
            data.n1, data.n2,
            plan.reps[0].class1.fold_size, plan.reps[0].class2.fold_size
        )
        if policy == "strict":
            raise CoverageError(
                f"{zero_pairs} pairs never share a testing fold; increase M",
                zero_pairs=zero_pairs,
                worst_pair=(int(worst[0]), int(worst[1])),
                suggested_m=suggestion,
                context={"M": plan.n_reps}
            )
        if zero_pairs == covered.size:
            raise CoverageError(
                "No pair shares a testing fold",
                zero_pairs=zero_pairs,
                worst_pair=(int(worst[0]), int(worst[1])),
                suggested_m=suggestion
            )
        logger.warning(
            f"Skipping {zero_pairs} of {covered.size} pairs with no shared testing fold "
            f"(M={plan.n_reps}, suggested M={suggestion})"
        )

    ratio = table.ratio()
    auc = float(ratio[covered].mean())
    # Uncovered pairs carry the estimate itself, which leaves every mean unchanged
    pair_mean = np.where(covered, ratio, auc)
    if diagnostics.ridge_activations:
        logger.warning(
            f"Ridge regularization activated in {diagnostics.ridge_activations} "
            f"of {diagnostics.trainings} trainings"
        )
    return CvAucResult(
        mode=CvMode.CVKM,
        pairing=Pairing.FULL,
        auc=auc,
        pair_mean=pair_mean,
        per_obs_auc1=pair_mean.mean(axis=1),
        per_obs_auc2=pair_mean.mean(axis=0),
        rep_auc=auc_11m,
        table=table,
        reps=reps,
        diagnostics=diagnostics,
        tol=tol
    )


def err_cvk(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    plan: FoldPlan,
    trainer: Trainer = classifiers.train
) -> CvErrResult:
    """Pooled K-fold zero-one error: fold k is fold k of both classes"""
    _check_plan(data, plan, (CvMode.CVK,))
    if plan.k1 != plan.k2:
        raise InvalidInputError("the error-rate plan needs K1 = K2", {"K1": plan.k1, "K2": plan.k2})
    rep = plan.reps[0]
    folds1, folds2 = rep.class1.assignment, rep.class2.assignment
    errors1 = np.empty(data.n1)
    errors2 = np.empty(data.n2)
    diagnostics = EstimationDiagnostics()
    fold_errors = np.empty(plan.k1)

    for k in range(plan.k1):
        context = {"fold": k}
        classifier = _train(
            trainer, spec,
            data.class1[folds1 != k], data.class2[folds2 != k],
            context, diagnostics
        )
        test1, test2 = folds1 == k, folds2 == k
        errors1[test1] = classifier.score_many(data.class1[test1]) <= 0
        errors2[test2] = classifier.score_many(data.class2[test2]) > 0
        fold_errors[k] = np.concatenate([errors1[test1], errors2[test2]]).mean()

    return CvErrResult(
        err=float(fold_errors.mean()),
        errors=np.concatenate([errors1, errors2]),
        fold_ids=np.concatenate([folds1, folds2]),
        fold_errors=fold_errors,
        diagnostics=diagnostics
    )


def err_cvn(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    trainer: Trainer = classifiers.train
) -> CvErrResult:
    """Leave-one-out zero-one error of the pooled sample (class 1 first)"""
    diagnostics = EstimationDiagnostics()
    errors = np.empty(data.n1 + data.n2)
    for i in range(data.n1):
        classifier = _train(
            trainer, spec,
            np.delete(data.class1, i, axis=0), data.class2,
            {"class": 1, "obs": i}, diagnostics
        )
        errors[i] = classifier.score_many(data.class1[i])[0] <= 0
    for j in range(data.n2):
        classifier = _train(
            trainer, spec,
            data.class1, np.delete(data.class2, j, axis=0),
            {"class": 2, "obs": j}, diagnostics
        )
        errors[data.n1 + j] = classifier.score_many(data.class2[j])[0] > 0

    return CvErrResult(
        err=float(errors.mean()),
        errors=errors,
        fold_ids=np.arange(errors.size),
        fold_errors=errors,
        diagnostics=diagnostics
    )
