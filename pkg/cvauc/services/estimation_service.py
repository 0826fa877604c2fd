import math
from dataclasses import asdict
from typing import Dict, Optional

import numpy as np

from cvauc.config import settings
from cvauc.core import CvMode, Pairing, TwoClassDataset
from cvauc.exceptions import InvalidInputError
from cvauc.schemas.report import EstimateReport
from cvauc.schemas.study import ClassifierSpec
from cvauc.services import adhoc_variance, classifiers, estimators, if_variance, resampling
from cvauc.services.estimators import CvAucResult, Trainer
from cvauc.utils.validators import validate_count
import logging

logger = logging.getLogger(__name__)


def _listed(array: Optional[np.ndarray]):
    """Nested lists with NaN as None"""
    if array is None:
        return None
    return np.where(np.isfinite(array), array, None).tolist()


def _root(value: float) -> float:
    return math.sqrt(max(value, 0.0))


def _kfold_se(result: CvAucResult) -> Dict[str, Optional[float]]:
    se: Dict[str, Optional[float]] = {}
    full = result.pairing == Pairing.FULL
    if result.mode == CvMode.CVK:
        se["sqrt_var2_cvk"] = _root(adhoc_variance.var2_cvk(result.matched_auc[0]))
        if full:
            se["sqrt_var1_cvk"] = _root(adhoc_variance.var1_cvk(result.per_fold_auc[0]))
            se["sqrt_var3_cvk"] = _root(adhoc_variance.var3_cvk(result.per_fold_auc[0], result.rep_auc[0]))
    else:
        se["sqrt_var2_cvkr"] = _root(adhoc_variance.var_cvkr(result.matched_auc, 2))
        if full:
            se["sqrt_var1_cvkr"] = _root(adhoc_variance.var_cvkr(result.per_fold_auc, 1))
            se["sqrt_var3_cvkr"] = _root(adhoc_variance.var_cvkr(result.per_fold_auc, 3, rep_auc=result.rep_auc))
    se["sd_if_i"] = if_variance.if_partial_cvkr(result).sd
    return se


def estimate(
    data: TwoClassDataset,
    spec: ClassifierSpec,
    mode: CvMode,
    n_folds: int = 10,
    n_reps: int = 200,
    seed: Optional[int] = None,
    pairing: Pairing = Pairing.FULL,
    policy: Optional[str] = None,
    ragged: bool = False,
    trainer: Trainer = classifiers.train
) -> EstimateReport:
    """Point estimate and every applicable standard error for one dataset"""
    mode = CvMode(mode)
    pairing = Pairing(pairing)
    if mode != CvMode.CVN and seed is None:
        raise InvalidInputError("A seed is required for randomized CV", {"mode": mode.value})
    logger.info(f"Estimating {mode.value} AUC on n1={data.n1}, n2={data.n2}, p={data.p}")

    err = None
    influence = None
    se: Dict[str, Optional[float]] = {}
    if mode == CvMode.CVN:
        result = estimators.auc_cvn(data, spec, trainer=trainer)
        se["sd_if"] = if_variance.if_sd_cvn_reduction(result.per_obs_auc1, result.per_obs_auc2, result.auc)
        error_result = estimators.err_cvn(data, spec, trainer=trainer)
        err = error_result.err
        se["sd_if_err"] = if_variance.if_sd_err_cvn(error_result.errors)
    elif mode == CvMode.CVKM:
        n_reps = validate_count("M", n_reps)
        plan = resampling.plan_cvkm(data.n1, data.n2, n_folds, n_reps, seed, ragged=ragged)
        result = estimators.auc_cvkm(data, spec, plan, trainer=trainer, policy=policy)
        components = if_variance.if_sd_cvkm(result, plan)
        se["sd_if"] = components.sd
        se["sd_if_i"] = components.sd_term_i
        se["sqrt_var_cvkm"] = _root(adhoc_variance.var_cvkm(result.rep_auc, plan.k1, plan.k2))
        influence = {
            "u1": components.u1.tolist(),
            "u2": components.u2.tolist(),
            "term_ii1": components.term_ii1.tolist(),
            "term_iii1": components.term_iii1.tolist(),
            "term_ii2": components.term_ii2.tolist(),
            "term_iii2": components.term_iii2.tolist(),
        }
    else:
        if mode == CvMode.CVK:
            plan = resampling.plan_cvk(data.n1, data.n2, n_folds, n_folds, seed, pairing, ragged)
            result = estimators.auc_cvk(data, spec, plan, pairing, trainer=trainer)
        else:
            plan = resampling.plan_cvkr(data.n1, data.n2, n_folds, n_reps, seed, pairing, ragged)
            result = estimators.auc_cvkr(data, spec, plan, pairing, trainer=trainer)
        se.update(_kfold_se(result))
        if mode == CvMode.CVK:
            error_plan = resampling.plan_error_cvk(data.n1, data.n2, n_folds, seed, ragged)
            error_result = estimators.err_cvk(data, spec, error_plan, trainer=trainer)
            err = error_result.err
            se["sqrt_naive_var_err"] = _root(adhoc_variance.naive_var_err_cvk(error_result.fold_errors))

    return EstimateReport(
        mode=mode.value,
        pairing=result.pairing.value,
        n1=data.n1,
        n2=data.n2,
        classifier=spec.model_dump(),
        settings={
            "K": n_folds if mode != CvMode.CVN else None,
            "reps": n_reps if mode in (CvMode.CVKR, CvMode.CVKM) else None,
            "seed": seed,
            "tie_tolerance": settings.tie_tolerance,
            "zero_den_policy": result.diagnostics.policy,
        },
        auc=result.auc,
        se=se,
        err=err,
        per_obs_auc1=result.per_obs_auc1.tolist(),
        per_obs_auc2=result.per_obs_auc2.tolist(),
        per_fold_auc=_listed(result.per_fold_auc),
        matched_auc=_listed(result.matched_auc),
        influence=influence,
        diagnostics=asdict(result.diagnostics)
    )
