from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from cvauc.exceptions import InvalidInputError
from cvauc.utils.validators import validate_count, validate_finite_scalar, validate_vector


@dataclass(frozen=True)
class CovarianceComponents:
    """Moments of the per-observation CV errors e_i.

    sigma2 is Var e_i, omega the covariance of two errors from the same
    testing fold, gamma the covariance of two errors from different folds
    and mu the mean error.
    """
    sigma2: float
    omega: float
    gamma: float
    mu: float = 0.0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise InvalidInputError("sigma2 must be non-negative", {"sigma2": self.sigma2})


def _sample_variance(values: np.ndarray, name: str) -> float:
    if values.size < 2:
        raise InvalidInputError(f"{name} needs at least two values", {"size": int(values.size)})
    return float(np.var(values, ddof=1))


def naive_var_err_cvk(err_k) -> float:
    """(1/K) times the sample variance of the K fold errors"""
    err_k = validate_vector("err_k", err_k)
    return _sample_variance(err_k, "err_k") / err_k.size


def var_decomposition(comp: CovarianceComponents, n: int, n_k: int) -> float:
    """Var of the CVK error rate: sigma2/n + (n_K-1) omega/n + (n-n_K) gamma/n"""
    n = validate_count("n", n)
    n_k = validate_count("n_K", n_k)
    if n_k > n:
        raise InvalidInputError("n_K cannot exceed n", {"n": n, "n_K": n_k})
    return (comp.sigma2 + (n_k - 1) * comp.omega + (n - n_k) * comp.gamma) / n


def expected_naive_bias(comp: CovarianceComponents) -> float:
    """E[naive variance] - Var of the CVK error rate"""
    return -comp.gamma


def expected_naive_value(comp: CovarianceComponents, n: int, n_k: int) -> float:
    """E[naive variance]: sigma2/n + (n_K-1) omega/n - gamma/K"""
    n = validate_count("n", n)
    n_k = validate_count("n_K", n_k)
    return (comp.sigma2 + (n_k - 1) * comp.omega) / n - comp.gamma * n_k / n


def _auc_pairs(auc_pairs) -> np.ndarray:
    auc_pairs = np.asarray(auc_pairs, dtype=float)
    if auc_pairs.ndim != 2:
        raise InvalidInputError("AUC_{k1k2} must be a K1 x K2 matrix", {"shape": auc_pairs.shape})
    if not np.all(np.isfinite(auc_pairs)):
        raise InvalidInputError("AUC_{k1k2} needs every fold pair (full pairing)")
    return auc_pairs


def var1_cvk(auc_pairs) -> float:
    """Sample variance of the pooled AUC_{k1k2}, scaled by 1/sqrt(K1 K2)"""
    auc_pairs = _auc_pairs(auc_pairs)
    return _sample_variance(auc_pairs.ravel(), "AUC_{k1k2}") / np.sqrt(auc_pairs.size)


def var2_cvk(auc_matched) -> float:
    """(1/K) times the sample variance of the matched-fold AUC_k"""
    auc_matched = validate_vector("AUC_k", auc_matched)
    return _sample_variance(auc_matched, "AUC_k") / auc_matched.size


def var3_cvk(auc_pairs, auc_cvk: float, criterion: Literal["unbiased", "mle"] = "unbiased") -> float:
    """Spread of the row and column means of AUC_{k1k2} around the CVK estimate"""
    auc_pairs = _auc_pairs(auc_pairs)
    auc_cvk = validate_finite_scalar("auc_cvk", auc_cvk)
    k1, k2 = auc_pairs.shape
    if k1 < 2 or k2 < 2:
        raise InvalidInputError("var3 needs K1, K2 >= 2", {"K1": k1, "K2": k2})
    if criterion == "unbiased":
        c1, c2 = 1.0 / (k1 * (k1 - 1)), 1.0 / (k2 * (k2 - 1))
    elif criterion == "mle":
        c1, c2 = 1.0 / k1 ** 2, 1.0 / k2 ** 2
    else:
        raise InvalidInputError("criterion must be 'unbiased' or 'mle'", {"criterion": criterion})
    rows = auc_pairs.mean(axis=1) - auc_cvk
    cols = auc_pairs.mean(axis=0) - auc_cvk
    return float(c1 * np.sum(rows ** 2) + c2 * np.sum(cols ** 2))


def var_cvkr(
    per_rep_inputs,
    which: Literal[1, 2, 3],
    rep_auc: Optional[np.ndarray] = None,
    criterion: Literal["unbiased", "mle"] = "unbiased"
) -> float:
    """Average of a CVK ad-hoc variance over the R repetitions.

    ``per_rep_inputs`` is R x K1 x K2 (AUC_{k1k2}) for ``which`` 1 and 3 and
    R x K (AUC_k) for ``which`` 2; ``rep_auc`` holds the R per-repetition
    CVK estimates that ``which`` 3 centers on.
    """
    per_rep_inputs = np.asarray(per_rep_inputs, dtype=float)
    if which == 1:
        values = [var1_cvk(block) for block in per_rep_inputs]
    elif which == 2:
        values = [var2_cvk(block) for block in per_rep_inputs]
    elif which == 3:
        if rep_auc is None or len(rep_auc) != len(per_rep_inputs):
            raise InvalidInputError("var3 needs one CVK estimate per repetition")
        values = [var3_cvk(block, auc, criterion) for block, auc in zip(per_rep_inputs, rep_auc)]
    else:
        raise InvalidInputError("which must be 1, 2 or 3", {"which": which})
    if not values:
        raise InvalidInputError("at least one repetition is required")
    return float(np.mean(values))


def var_cvkm(auc_11m, k1: int, k2: int) -> float:
    """Sample variance of the per-repetition fold-0 AUCs, scaled by 1/sqrt(K1 K2)"""
    auc_11m = validate_vector("AUC_11m", auc_11m)
    k1 = validate_count("K1", k1)
    k2 = validate_count("K2", k2)
    return _sample_variance(auc_11m, "AUC_11m") / np.sqrt(k1 * k2)
