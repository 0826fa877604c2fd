"""Monte-Carlo study harness.

Every trial draws a fresh Gaussian dataset, runs the configured CV
estimators and all of their standard-error estimates, and returns a flat
dict of metrics. Trials are independent (own substreams keyed by the
trial index) and are summarized in trial order.
"""
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import gammaln
from scipy.stats import norm
from tqdm import tqdm

from cvauc.config import settings
from cvauc.core import Pairing, TwoClassDataset, empirical_auc
from cvauc.exceptions import InvalidInputError, NumericalFailureError, TrialFailureAbort
from cvauc.schemas.report import ComponentsReport, PointSummary, SeSummary, StudyReport
from cvauc.schemas.study import StudyConfig
from cvauc.services import adhoc_variance, classifiers, estimators, if_variance, resampling
from cvauc.services.estimators import Trainer
from cvauc.utils.rng import Stream, substream
from cvauc.workers import ordered_map
import logging

logger = logging.getLogger(__name__)

# SE estimator -> the point estimator whose spread it estimates
SE_TARGETS: Dict[str, str] = {
    "sd_if_cvkm": "auc_cvkm",
    "sd_if_i_cvkm": "auc_cvkm",
    "sqrt_var_cvkm": "auc_cvkm",
    "sqrt_var1_cvk": "auc_cvk",
    "sqrt_var2_cvk": "auc_cvk",
    "sqrt_var3_cvk": "auc_cvk",
    "sqrt_var1_cvkr": "auc_cvkr",
    "sqrt_var2_cvkr": "auc_cvkr",
    "sqrt_var3_cvkr": "auc_cvkr",
    "sd_if_i_cvkr": "auc_cvkr",
}
# reported name -> (metric, point estimator whose true SD it is scored against)
CROSS_TARGETS: Dict[str, Tuple[str, str]] = {
    "sd_if_cvkm_vs_cvkr": ("sd_if_cvkm", "auc_cvkr"),
}
POINT_ESTIMATORS = ("auc_cvkm", "auc_cvk", "auc_cvkr")


@dataclass
class TrialOutcome:
    trial: int
    values: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None
    payload: Any = None


def _require_seed(cfg: StudyConfig) -> int:
    if cfg.seed is None:
        raise InvalidInputError("The study needs a seed")
    return cfg.seed


def generate_dataset(cfg: StudyConfig, trial_index: int) -> TwoClassDataset:
    """Class 1 ~ N(0, I_p), class 2 ~ N(c 1, I_p)"""
    rng = substream(_require_seed(cfg), Stream.DATASET, trial_index)
    class1 = rng.standard_normal((cfg.n1, cfg.p))
    class2 = rng.standard_normal((cfg.n2, cfg.p)) + cfg.separation
    return TwoClassDataset(class1, class2)


def bayes_auc(cfg: StudyConfig) -> float:
    """AUC of the optimal rule for two unit-covariance Gaussians"""
    return float(norm.cdf(cfg.separation * math.sqrt(cfg.p) / math.sqrt(2.0)))


def conditional_auc(
    cfg: StudyConfig,
    data: TwoClassDataset,
    trial_index: int,
    trainer: Trainer = classifiers.train
) -> float:
    """AUC of the classifier trained on all of ``data``, on a fresh sample"""
    classifier = trainer(cfg.classifier, data.class1, data.class2, context={"trial": trial_index})
    rng = substream(_require_seed(cfg), Stream.TEST_SAMPLE, trial_index)
    size = settings.true_auc_test_size
    test1 = rng.standard_normal((size, cfg.p))
    test2 = rng.standard_normal((size, cfg.p)) + cfg.separation
    return empirical_auc(classifier.score_many(test1), classifier.score_many(test2))


def permutation_ratio(n: int) -> float:
    """C(n, n/2) / n^n, the share of training-set draws a CVKR repetition can realize"""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise InvalidInputError("n must be an even integer >= 2", {"n": n})
    half = n // 2
    return float(np.exp(gammaln(n + 1) - 2 * gammaln(half + 1) - n * np.log(n)))


def _cvkm_metrics(cfg, data, trial_index, trainer) -> Dict[str, float]:
    plan = resampling.plan_cvkm(cfg.n1, cfg.n2, cfg.K, cfg.M, seed=(cfg.seed, trial_index))
    result = estimators.auc_cvkm(data, cfg.classifier, plan, trainer=trainer, policy=cfg.zero_den_policy)
    influence = if_variance.if_sd_cvkm(result, plan)
    return {
        "auc_cvkm": result.auc,
        "sd_if_cvkm": influence.sd,
        "sd_if_i_cvkm": influence.sd_term_i,
        "sqrt_var_cvkm": math.sqrt(adhoc_variance.var_cvkm(result.rep_auc, cfg.K, cfg.K)),
        "ridge_cvkm": float(result.diagnostics.ridge_activations),
    }


def _cvkr_metrics(cfg, data, trial_index, trainer) -> Dict[str, float]:
    pairing = Pairing(cfg.pairing)
    plan = resampling.plan_cvkr(cfg.n1, cfg.n2, cfg.K, cfg.R, seed=(cfg.seed, trial_index), pairing=pairing)
    result = estimators.auc_cvkr(data, cfg.classifier, plan, trainer=trainer)
    values = {
        "auc_cvkr": result.auc,
        "auc_cvk": float(result.rep_auc[0]),
        "sqrt_var2_cvk": math.sqrt(adhoc_variance.var2_cvk(result.matched_auc[0])),
        "sqrt_var2_cvkr": math.sqrt(adhoc_variance.var_cvkr(result.matched_auc, 2)),
        "sd_if_i_cvkr": if_variance.if_partial_cvkr(result).sd,
        "ridge_cvkr": float(result.diagnostics.ridge_activations),
    }
    if pairing == Pairing.FULL:
        values.update({
            "sqrt_var1_cvk": math.sqrt(adhoc_variance.var1_cvk(result.per_fold_auc[0])),
            "sqrt_var3_cvk": math.sqrt(adhoc_variance.var3_cvk(result.per_fold_auc[0], result.rep_auc[0])),
            "sqrt_var1_cvkr": math.sqrt(adhoc_variance.var_cvkr(result.per_fold_auc, 1)),
            "sqrt_var3_cvkr": math.sqrt(
                adhoc_variance.var_cvkr(result.per_fold_auc, 3, rep_auc=result.rep_auc)
            ),
        })
    return values


def run_trial(cfg: StudyConfig, trial_index: int, trainer: Trainer = classifiers.train) -> TrialOutcome:
    """All configured estimates for one simulated dataset"""
    outcome = TrialOutcome(trial=trial_index)
    try:
        data = generate_dataset(cfg, trial_index)
        if "cvkm" in cfg.estimators:
            outcome.values.update(_cvkm_metrics(cfg, data, trial_index, trainer))
        if "cvkr" in cfg.estimators:
            outcome.values.update(_cvkr_metrics(cfg, data, trial_index, trainer))
        if cfg.true_auc:
            outcome.values["true_auc"] = conditional_auc(cfg, data, trial_index, trainer)
    except NumericalFailureError as e:
        outcome.values = {}
        outcome.error = str(e)
    return outcome


def _check_failures(outcomes: List[TrialOutcome]) -> int:
    failures = [outcome for outcome in outcomes if outcome.error is not None]
    for outcome in failures:
        logger.warning(f"Trial {outcome.trial} failed: {outcome.error}")
    if outcomes and len(failures) / len(outcomes) > settings.max_failure_rate:
        logger.error(f"{len(failures)} of {len(outcomes)} trials failed; aborting")
        raise TrialFailureAbort(len(failures), len(outcomes), [f.error for f in failures[:5]])
    return len(failures)


def run_trials(
    cfg: StudyConfig,
    workers: Optional[int] = None,
    progress: Optional[bool] = None,
    trainer: Trainer = classifiers.train
) -> Tuple[pd.DataFrame, int]:
    """Per-trial metrics (one row per successful trial) and the failure count"""
    _require_seed(cfg)
    progress = settings.progress if progress is None else progress
    logger.info(
        f"Running {cfg.n_mc} trials: n1={cfg.n1} n2={cfg.n2} p={cfg.p} K={cfg.K} "
        f"estimators={','.join(cfg.estimators)}"
    )
    job = partial(run_trial, cfg, trainer=trainer)
    outcomes = list(tqdm(
        ordered_map(job, list(range(cfg.n_mc)), workers),
        total=cfg.n_mc,
        desc="trials",
        disable=not progress
    ))
    failed = _check_failures(outcomes)
    rows = [dict(trial=outcome.trial, **outcome.values) for outcome in outcomes if outcome.error is None]
    return pd.DataFrame(rows), failed


def _mean_and_sd(values: np.ndarray) -> Tuple[float, float]:
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), sd


def summarize_trials(cfg: StudyConfig, trials: pd.DataFrame, failed: int = 0) -> StudyReport:
    """Aggregate per-trial metrics into the cell report"""
    points: List[PointSummary] = []
    true_sds: Dict[str, float] = {}
    for name in POINT_ESTIMATORS:
        if name not in trials:
            continue
        values = trials[name].to_numpy(dtype=float)
        mean, sd = _mean_and_sd(values)
        true_sds[name] = sd
        points.append(PointSummary(
            name=name, mean=mean, true_sd=sd, mc_se=sd / math.sqrt(values.size), n_trials=values.size
        ))

    se_estimators: List[SeSummary] = []
    entries = [(name, name, target) for name, target in SE_TARGETS.items()]
    entries += [(name, metric, target) for name, (metric, target) in CROSS_TARGETS.items()]
    for name, metric, target in entries:
        if metric not in trials or target not in true_sds:
            continue
        values = trials[metric].to_numpy(dtype=float)
        mean, sd = _mean_and_sd(values)
        true_sd = true_sds[target]
        bias = mean - true_sd
        rms = math.sqrt(bias ** 2 + sd ** 2)
        scale = 1.0 / true_sd if true_sd > 0 else float("nan")
        se_estimators.append(SeSummary(
            name=name,
            target=target,
            mean=mean,
            sd=sd,
            bias=bias,
            rms=rms,
            normalized_mean=mean * scale,
            normalized_bias=bias * scale,
            normalized_sd=sd * scale,
            normalized_rms=rms * scale,
            mc_se=sd / math.sqrt(values.size)
        ))

    true_auc = float(trials["true_auc"].mean()) if "true_auc" in trials else None
    return StudyReport(
        config=cfg.model_dump(),
        separation=cfg.separation,
        bayes_auc=bayes_auc(cfg),
        true_auc_mean=true_auc,
        n_trials=len(trials),
        n_failed=failed,
        points=points,
        se_estimators=se_estimators
    )


def run_study(
    cfg: StudyConfig,
    workers: Optional[int] = None,
    progress: Optional[bool] = None,
    trainer: Trainer = classifiers.train
) -> StudyReport:
    trials, failed = run_trials(cfg, workers, progress, trainer)
    report = summarize_trials(cfg, trials, failed)
    for point in report.points:
        logger.info(f"{point.name}: mean={point.mean:.4f} true SD={point.true_sd:.4f}")
    return report


@dataclass
class ErrorTrial:
    err: float
    naive_var: float
    errors: np.ndarray
    fold_ids: np.ndarray


def error_trial(cfg: StudyConfig, trial_index: int, trainer: Trainer = classifiers.train) -> ErrorTrial:
    """CVK error rate of one simulated dataset"""
    data = generate_dataset(cfg, trial_index)
    plan = resampling.plan_error_cvk(cfg.n1, cfg.n2, cfg.K, seed=(cfg.seed, trial_index))
    result = estimators.err_cvk(data, cfg.classifier, plan, trainer=trainer)
    return ErrorTrial(
        err=result.err,
        naive_var=adhoc_variance.naive_var_err_cvk(result.fold_errors),
        errors=result.errors,
        fold_ids=result.fold_ids
    )


def run_error_trial(cfg: StudyConfig, trial_index: int, trainer: Trainer = classifiers.train) -> TrialOutcome:
    outcome = TrialOutcome(trial=trial_index)
    try:
        outcome.payload = error_trial(cfg, trial_index, trainer)
    except NumericalFailureError as e:
        outcome.error = str(e)
    return outcome


def _fold_products(centered: np.ndarray, fold_ids: np.ndarray, n_folds: int) -> Tuple[float, float]:
    """Sums of c_i c_j over within-fold and cross-fold pairs (i != j)"""
    fold_sums = np.bincount(fold_ids, weights=centered, minlength=n_folds)
    squares = np.sum(centered ** 2)
    within = np.sum(fold_sums ** 2) - squares
    cross = centered.sum() ** 2 - np.sum(fold_sums ** 2)
    return float(within), float(cross)


def estimate_components(
    cfg: StudyConfig,
    workers: Optional[int] = None,
    progress: Optional[bool] = None,
    trainer: Trainer = classifiers.train
) -> ComponentsReport:
    """Moment estimates of sigma2, omega and gamma with the naive-variance bias check"""
    _require_seed(cfg)
    progress = settings.progress if progress is None else progress
    n = cfg.n1 + cfg.n2
    fold_size = cfg.n1 // cfg.K + cfg.n2 // cfg.K
    logger.info(f"Estimating error covariance components over {cfg.n_mc} trials (n={n}, K={cfg.K})")
    job = partial(run_error_trial, cfg, trainer=trainer)
    outcomes = list(tqdm(
        ordered_map(job, list(range(cfg.n_mc)), workers),
        total=cfg.n_mc,
        desc="components",
        disable=not progress
    ))
    failed = _check_failures(outcomes)
    trials: List[ErrorTrial] = [outcome.payload for outcome in outcomes if outcome.error is None]
    n_trials = len(trials)
    if n_trials < 2:
        raise TrialFailureAbort(failed, cfg.n_mc, [outcome.error for outcome in outcomes if outcome.error][:5])

    errors = np.vstack([trial.errors for trial in trials])
    mu = float(errors.mean())
    within_pairs = cfg.K * fold_size * (fold_size - 1)
    cross_pairs = n ** 2 - cfg.K * fold_size ** 2
    omegas, gammas = [], []
    for trial in trials:
        within, cross = _fold_products(trial.errors - mu, trial.fold_ids, cfg.K)
        omegas.append(within / within_pairs if within_pairs else 0.0)
        gammas.append(cross / cross_pairs)
    omegas, gammas = np.asarray(omegas), np.asarray(gammas)
    components = adhoc_variance.CovarianceComponents(
        sigma2=float(np.sum((errors - mu) ** 2) / (errors.size - 1)),
        omega=float(omegas.mean()),
        gamma=float(gammas.mean()),
        mu=mu
    )

    root = math.sqrt(n_trials)
    naive = np.array([trial.naive_var for trial in trials])
    errs = np.array([trial.err for trial in trials])
    mean_naive, sd_naive = _mean_and_sd(naive)
    mc_var = float(np.var(errs, ddof=1))
    se_mc_var = mc_var * math.sqrt(2.0 / (n_trials - 1))
    se_mean_naive = sd_naive / root
    report = ComponentsReport(
        config=cfg.model_dump(),
        n_trials=n_trials,
        n_failed=failed,
        n=n,
        fold_size=fold_size,
        mu=components.mu,
        sigma2=components.sigma2,
        omega=components.omega,
        gamma=components.gamma,
        se_omega=float(np.std(omegas, ddof=1)) / root,
        se_gamma=float(np.std(gammas, ddof=1)) / root,
        mean_naive_var=mean_naive,
        se_mean_naive_var=se_mean_naive,
        mc_var=mc_var,
        se_mc_var=se_mc_var,
        observed_bias=mean_naive - mc_var,
        se_observed_bias=math.sqrt(se_mean_naive ** 2 + se_mc_var ** 2),
        predicted_bias=adhoc_variance.expected_naive_bias(components),
        reconstructed_var=adhoc_variance.var_decomposition(components, n, fold_size),
        expected_naive_var=adhoc_variance.expected_naive_value(components, n, fold_size)
    )
    logger.info(
        f"Components: sigma2={report.sigma2:.5f} omega={report.omega:.5f} gamma={report.gamma:.5f}; "
        f"naive bias observed {report.observed_bias:.5f} vs predicted {report.predicted_bias:.5f}"
    )
    return report
