"""FoldPlans for the four CV versions.

A random partition is drawn as a uniform permutation followed by canonical
folding, which gives every partition the same probability (the g_0 of the
influence-function derivation). Each (repetition, class) pair draws from
its own Philox substream, so repetitions can be generated in any order.
"""
from typing import Sequence, Tuple

import numpy as np

from cvauc.core import (
    CvMode,
    FoldMap,
    FoldPlan,
    FoldRepetition,
    Pairing,
    fold_map_canonical,
)
from cvauc.exceptions import InvalidInputError
from cvauc.utils.rng import SeedLike, Stream, as_entropy, substream
from cvauc.utils.validators import validate_count
import logging

logger = logging.getLogger(__name__)


def _seed_tuple(seed: SeedLike) -> Tuple[int, ...]:
    entropy = as_entropy(seed)
    return (entropy,) if isinstance(entropy, int) else tuple(entropy)


def random_fold_map(n: int, n_folds: int, seed: SeedLike, key: Sequence[int], ragged: bool = False) -> FoldMap:
    """Canonical folding of a uniformly permuted index set"""
    canonical = fold_map_canonical(n, n_folds, ragged=ragged)
    order = substream(seed, Stream.PARTITION, *key).permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[order] = canonical.assignment
    return FoldMap(assignment, n_folds)


def _random_reps(n1, n2, k1, k2, n_reps, seed, ragged) -> Tuple[FoldRepetition, ...]:
    return tuple(
        FoldRepetition(
            random_fold_map(n1, k1, seed, (m, 1), ragged),
            random_fold_map(n2, k2, seed, (m, 2), ragged)
        )
        for m in range(n_reps)
    )


def plan_cvn(n1: int, n2: int) -> FoldPlan:
    """Leave-one-out: K = n and K(i) = i for each class"""
    n1 = validate_count("n1", n1, minimum=2)
    n2 = validate_count("n2", n2, minimum=2)
    rep = FoldRepetition(FoldMap(np.arange(n1), n1), FoldMap(np.arange(n2), n2))
    return FoldPlan((rep,), CvMode.CVN, Pairing.FULL)


def plan_cvk(
    n1: int,
    n2: int,
    k1: int,
    k2: int,
    seed: SeedLike,
    pairing: Pairing = Pairing.FULL,
    ragged: bool = False
) -> FoldPlan:
    """One random K-fold partition per class"""
    reps = _random_reps(n1, n2, k1, k2, 1, seed, ragged)
    return FoldPlan(reps, CvMode.CVK, Pairing(pairing), _seed_tuple(seed))


def plan_cvkr(
    n1: int,
    n2: int,
    n_folds: int,
    n_reps: int,
    seed: SeedLike,
    pairing: Pairing = Pairing.FULL,
    ragged: bool = False
) -> FoldPlan:
    """R independent exhaustive K-fold partitions per class"""
    n_reps = validate_count("R", n_reps)
    reps = _random_reps(n1, n2, n_folds, n_folds, n_reps, seed, ragged)
    return FoldPlan(reps, CvMode.CVKR, Pairing(pairing), _seed_tuple(seed))


def plan_cvkm(
    n1: int,
    n2: int,
    n_folds: int,
    n_reps: int,
    seed: SeedLike,
    ragged: bool = False
) -> FoldPlan:
    """M independent random partitions per class; only fold 0 is ever tested"""
    n_reps = validate_count("M", n_reps)
    reps = _random_reps(n1, n2, n_folds, n_folds, n_reps, seed, ragged)
    plan = FoldPlan(reps, CvMode.CVKM, Pairing.FULL, _seed_tuple(seed))
    expected = n_reps / n_folds ** 2
    if expected < 1:
        logger.warning(
            f"CVKM with M={n_reps}, K={n_folds} expects {expected:.2f} co-occurrences per pair; "
            "some pairs will likely never share a testing fold"
        )
    return plan


def plan_error_cvk(n1: int, n2: int, n_folds: int, seed: SeedLike, ragged: bool = False) -> FoldPlan:
    """Matched K-fold plan for the pooled error-rate estimator"""
    if n_folds > min(n1, n2):
        raise InvalidInputError("K cannot exceed either class size", {"n1": n1, "n2": n2, "K": n_folds})
    return plan_cvk(n1, n2, n_folds, n_folds, seed, Pairing.MATCHED, ragged)
