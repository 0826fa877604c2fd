"""Influence-function standard error of the CVKM AUC estimator.

Perturbing observation i of class 1 by epsilon moves mass to it in the
empirical distribution (f) and changes the probability g of every
realized training set. Differentiating the perturbed estimator at 0 gives

    U_1i = I + II - III

with I = AUC_1i - AUC, II the derivative through the numerators of the
pair ratios and III the one through their denominators (quotient rule).
g'/g is two-valued: n_1K - n_1 when x_i is in the testing fold of the
repetition and n_1K otherwise, so II and III reduce to weighted sums of
the per-repetition vectors

    q[m] = sum_{j1,j2} I^m_j1 I^m_j2 psi_m(j1, j2) / den(j1, j2)
    t[m] = sum_{j1,j2} I^m_j1 I^m_j2 num(j1, j2) / den(j1, j2)^2

The epsilon-dependent closed form of g is only evaluated by the
finite-difference oracle (``perturbed_auc_cvkm``).
"""
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import comb, gammaln

from cvauc.config import settings
from cvauc.core import CvMode, FoldPlan, RepetitionScores
from cvauc.exceptions import InvalidInputError
from cvauc.services.estimators import CvAucResult, tested_psi_blocks
from cvauc.utils.validators import validate_count, validate_epsilon, validate_vector
import logging

logger = logging.getLogger(__name__)

Observation = Tuple[int, int]


@dataclass(frozen=True)
class InfluenceComponents:
    """Per-observation influence values and the terms they are built from"""
    term_i1: np.ndarray
    term_ii1: np.ndarray
    term_iii1: np.ndarray
    term_i2: np.ndarray
    term_ii2: np.ndarray
    term_iii2: np.ndarray

    @property
    def u1(self) -> np.ndarray:
        return self.term_i1 + self.term_ii1 - self.term_iii1

    @property
    def u2(self) -> np.ndarray:
        return self.term_i2 + self.term_ii2 - self.term_iii2

    @staticmethod
    def _sd(u1: np.ndarray, u2: np.ndarray) -> float:
        return float(np.sqrt(np.sum(u1 ** 2) / u1.size ** 2 + np.sum(u2 ** 2) / u2.size ** 2))

    @property
    def sd(self) -> float:
        return self._sd(self.u1, self.u2)

    @property
    def sd_term_i(self) -> float:
        """SD from term I alone"""
        return self._sd(self.term_i1, self.term_i2)


@dataclass(frozen=True)
class PerturbationKernel:
    """g'/g_0 for every (repetition, observation) of each class"""
    gdot1: np.ndarray
    gdot2: np.ndarray

    @classmethod
    def from_reps(cls, reps: RepetitionScores) -> "PerturbationKernel":
        n1, n2 = reps.ind1.shape[1], reps.ind2.shape[1]
        n1k, n2k = int(reps.ind1[0].sum()), int(reps.ind2[0].sum())
        return cls(
            gdot1=np.where(reps.ind1, n1k - n1, n1k).astype(float),
            gdot2=np.where(reps.ind2, n2k - n2, n2k).astype(float)
        )


def f_derivative(n: int, index: int) -> np.ndarray:
    """d f_eps(j) / d eps = delta_ij - 1/n"""
    n = validate_count("n", n)
    if not 0 <= index < n:
        raise InvalidInputError("index out of range", {"n": n, "index": index})
    out = np.full(n, -1.0 / n)
    out[index] += 1.0
    return out


def _check_fold(n: int, n_k: int) -> Tuple[int, int]:
    n = validate_count("n", n, minimum=2)
    n_k = validate_count("n_K", n_k)
    if n_k >= n:
        raise InvalidInputError("n_K must be smaller than n", {"n": n, "n_K": n_k})
    return n, n_k


def g_perturbed(n: int, n_k: int, eps: float, in_test_fold: bool) -> float:
    """Probability of a realized training set after perturbing one observation.

    The testing fold of size n_K is drawn without replacement with
    probabilities proportional to the perturbed masses; at eps = 0 every
    training set has probability 1 / C(n, n_K).
    """
    n, n_k = _check_fold(n, n_k)
    eps = validate_epsilon(eps)
    n_train = n - n_k
    base = float(comb(n, n_k, exact=True))
    if in_test_fold:
        return (1.0 - eps) ** n_train / base
    r = np.arange(1, n_train + 1)
    terms = (1.0 - eps) ** (r - 1) * (eps * n - r * eps + 1.0)
    return float(terms.sum() / (n_train * base))


def gdot_ratio(n: int, n_k: int, in_test_fold: bool) -> float:
    """g'(0) / g_0"""
    n, n_k = _check_fold(n, n_k)
    return float(n_k - n if in_test_fold else n_k)


def _require_cvkm(result: CvAucResult) -> None:
    if result.mode != CvMode.CVKM or result.table is None or result.reps is None:
        raise InvalidInputError("the influence estimator needs a CVKM result", {"mode": result.mode})


def _check_plan(result: CvAucResult, plan: Optional[FoldPlan]) -> None:
    if plan is not None and plan.n_reps != result.reps.n_reps:
        raise InvalidInputError("plan and result disagree on M", {"plan": plan.n_reps, "result": result.reps.n_reps})


def _repetition_sums(result: CvAucResult, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """q[m] and t[m]"""
    table, reps = result.table, result.reps
    covered = table.covered
    den = np.where(covered, table.den, 1).astype(float)
    inv_den = np.where(covered, 1.0 / den, 0.0)
    num_over_den2 = np.where(covered, table.num / den ** 2, 0.0)
    q = np.empty(reps.n_reps)
    for block, weighted in tested_psi_blocks(reps, tol):
        q[block] = np.einsum("mij,ij->m", weighted, inv_den)
    ind1 = reps.ind1.astype(float)
    ind2 = reps.ind2.astype(float)
    t = np.einsum("mi,ij,mj->m", ind1, num_over_den2, ind2)
    return q, t


def if_sd_cvkm(result: CvAucResult, plan: Optional[FoldPlan] = None, tol: Optional[float] = None) -> InfluenceComponents:
    """Influence values of every observation for a CVKM estimate"""
    _require_cvkm(result)
    _check_plan(result, plan)
    tol = result.tol if tol is None else tol
    kernel = PerturbationKernel.from_reps(result.reps)
    q, t = _repetition_sums(result, tol)
    scale = 1.0 / (result.n1 * result.n2)

    components = InfluenceComponents(
        term_i1=result.per_obs_auc1 - result.auc,
        term_ii1=scale * (kernel.gdot1.T @ q),
        term_iii1=scale * (kernel.gdot1.T @ t),
        term_i2=result.per_obs_auc2 - result.auc,
        term_ii2=scale * (kernel.gdot2.T @ q),
        term_iii2=scale * (kernel.gdot2.T @ t)
    )
    logger.debug(f"Influence SD {components.sd:.6f} (term I only {components.sd_term_i:.6f})")
    return components


def if_sd_cvn_reduction(per_obs_auc1, per_obs_auc2, auc: float) -> float:
    """SD from the leave-pair-out influence values AUC_1i - AUC and AUC_2j - AUC"""
    per_obs_auc1 = validate_vector("per_obs_auc1", per_obs_auc1)
    per_obs_auc2 = validate_vector("per_obs_auc2", per_obs_auc2)
    u1 = per_obs_auc1 - auc
    u2 = per_obs_auc2 - auc
    return float(np.sqrt(np.sum(u1 ** 2) / u1.size ** 2 + np.sum(u2 ** 2) / u2.size ** 2))


def if_sd_err_cvn(errors) -> float:
    """sqrt((1/n^2) sum (e_i - mean e)^2)"""
    errors = validate_vector("errors", errors)
    return float(np.sqrt(np.sum((errors - errors.mean()) ** 2)) / errors.size)


def perturbed_auc_cvkm(
    result: CvAucResult,
    plan: FoldPlan,
    eps: float,
    obs: Observation,
    tol: Optional[float] = None
) -> float:
    """CVKM estimate after putting extra mass eps on one observation.

    ``obs`` is (class, index) with class 1 or 2 and a 0-based index. Pairs
    that never share a testing fold keep the unperturbed estimate.
    """
    _require_cvkm(result)
    _check_plan(result, plan)
    eps = validate_epsilon(eps)
    tol = result.tol if tol is None else tol
    klass, index = obs
    if klass not in (1, 2):
        raise InvalidInputError("class must be 1 or 2", {"class": klass})
    reps = result.reps
    n1, n2 = result.n1, result.n2
    n = n1 if klass == 1 else n2
    if not 0 <= index < n:
        raise InvalidInputError("index out of range", {"n": n, "index": index})
    ind = reps.ind1 if klass == 1 else reps.ind2
    n_k = int(ind[0].sum())

    g0 = g_perturbed(n, n_k, 0.0, False)
    weight_test = g_perturbed(n, n_k, eps, True) / g0
    weight_train = g_perturbed(n, n_k, eps, False) / g0
    weights = np.where(ind[:, index], weight_test, weight_train)

    num = np.zeros((n1, n2))
    for block, weighted in tested_psi_blocks(reps, tol):
        num += np.einsum("m,mij->ij", weights[block], weighted)
    den = np.einsum("m,mi,mj->ij", weights, reps.ind1.astype(float), reps.ind2.astype(float))
    covered = result.table.covered
    ratio = np.full((n1, n2), result.auc)
    np.divide(num, den, out=ratio, where=covered)

    mass = 1.0 / n + eps * f_derivative(n, index)
    f1 = mass if klass == 1 else np.full(n1, 1.0 / n1)
    f2 = mass if klass == 2 else np.full(n2, 1.0 / n2)
    return float(f1 @ ratio @ f2)


def one_sided_derivative(func: Callable[[float], float], step: Optional[float] = None) -> float:
    """Second-order forward difference (-3 f(0) + 4 f(h) - f(2h)) / 2h"""
    step = settings.fd_step if step is None else step
    return (-3.0 * func(0.0) + 4.0 * func(step) - func(2.0 * step)) / (2.0 * step)


def influence_by_differencing(
    result: CvAucResult,
    plan: FoldPlan,
    obs: Observation,
    step: Optional[float] = None
) -> float:
    """Numerical influence of one observation on the CVKM estimate"""
    return one_sided_derivative(lambda eps: perturbed_auc_cvkm(result, plan, eps, obs), step)


@dataclass(frozen=True)
class PartialInfluence:
    """Term I of the CVKR influence values; the training-set term is not available"""
    term_i1: np.ndarray
    term_i2: np.ndarray
    log_g0: float

    @property
    def sd(self) -> float:
        return InfluenceComponents._sd(self.term_i1, self.term_i2)


def log_g0_cvkr(n1: int, n2: int, k1: int, k2: int) -> float:
    """log of the probability of one realized pair of K-fold partitions"""
    total = 0.0
    for n, k in ((n1, k1), (n2, k2)):
        n = validate_count("n", n, minimum=2)
        k = validate_count("K", k, minimum=2)
        if n % k:
            raise InvalidInputError("K must divide n", {"n": n, "K": k})
        n_k = n // k
        remaining = n - n_k * np.arange(k)
        total -= float(np.sum(gammaln(remaining + 1) - gammaln(n_k + 1) - gammaln(remaining - n_k + 1)))
    return total


def if_partial_cvkr(result: CvAucResult) -> PartialInfluence:
    """Term I of the CVKR influence values with the partition probability G_0"""
    if result.mode not in (CvMode.CVKR, CvMode.CVK):
        raise InvalidInputError("a CVKR result is required", {"mode": result.mode})
    _, k1, k2 = result.per_fold_auc.shape
    try:
        log_g0 = log_g0_cvkr(result.n1, result.n2, k1, k2)
    except InvalidInputError:
        # ragged folds have no closed-form partition probability
        log_g0 = float("nan")
    return PartialInfluence(
        term_i1=result.per_obs_auc1 - result.auc,
        term_i2=result.per_obs_auc2 - result.auc,
        log_g0=log_g0
    )
