"""Domain types and elementary kernels shared by every estimator.

Observations and folds are 1-based in the documentation (``x_1 .. x_n``,
folds ``1 .. K``) and 0-based in every array and file: fold ``k`` of the
text is ``k - 1`` here, and the single CVKM testing fold is index 0.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from cvauc.exceptions import InvalidInputError
from cvauc.utils.validators import (
    validate_count,
    validate_finite_scalar,
    validate_matrix,
    validate_vector,
)


class CvMode(str, Enum):
    CVN = "cvn"
    CVK = "cvk"
    CVKR = "cvkr"
    CVKM = "cvkm"


class Pairing(str, Enum):
    FULL = "full"
    MATCHED = "matched"


def frozen_array(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TwoClassDataset:
    """Feature matrices of the two classes (rows are observations)"""
    class1: np.ndarray
    class2: np.ndarray

    def __post_init__(self):
        class1 = validate_matrix("class1", self.class1, min_rows=2)
        class2 = validate_matrix("class2", self.class2, min_rows=2)
        if class1.shape[1] != class2.shape[1]:
            raise InvalidInputError(
                "Both classes must have the same number of features",
                {"p1": class1.shape[1], "p2": class2.shape[1]}
            )
        object.__setattr__(self, "class1", frozen_array(class1))
        object.__setattr__(self, "class2", frozen_array(class2))

    @property
    def n1(self) -> int:
        return self.class1.shape[0]

    @property
    def n2(self) -> int:
        return self.class2.shape[0]

    @property
    def p(self) -> int:
        return self.class1.shape[1]

    @classmethod
    def from_labeled(cls, features, labels) -> "TwoClassDataset":
        """Split a labeled matrix into classes; labels must be 1 or 2"""
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels)
        if features.ndim == 1:
            features = features[:, np.newaxis]
        if labels.shape != (features.shape[0],):
            raise InvalidInputError(
                "One label per row is required",
                {"rows": features.shape[0], "labels": labels.shape}
            )
        unknown = sorted(set(labels.tolist()) - {1, 2})
        if unknown:
            raise InvalidInputError("Labels must be 1 or 2", {"unknown": unknown[:5]})
        return cls(features[labels == 1], features[labels == 2])

    def pooled(self) -> Tuple[np.ndarray, np.ndarray]:
        """Stacked features and labels (class 1 first)"""
        features = np.vstack([self.class1, self.class2])
        labels = np.concatenate([np.ones(self.n1, dtype=int), np.full(self.n2, 2, dtype=int)])
        return features, labels


@dataclass(frozen=True)
class FoldMap:
    """Assignment of n observations to K folds (0-based fold ids)"""
    assignment: np.ndarray
    n_folds: int

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=int)
        if assignment.ndim != 1 or assignment.size == 0:
            raise InvalidInputError("assignment must be a non-empty vector")
        if assignment.min() < 0 or assignment.max() >= self.n_folds:
            raise InvalidInputError(
                "fold ids must lie in [0, K)",
                {"K": self.n_folds, "min": int(assignment.min()), "max": int(assignment.max())}
            )
        sizes = np.bincount(assignment, minlength=self.n_folds)
        if np.any(sizes == 0):
            raise InvalidInputError("every fold needs at least one member", {"sizes": sizes.tolist()})
        object.__setattr__(self, "assignment", frozen_array(assignment))

    @property
    def n(self) -> int:
        return self.assignment.size

    @property
    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_folds)

    @property
    def fold_size(self) -> int:
        """n_K; for ragged maps the size of the first (largest) fold"""
        return int(self.fold_sizes[0])

    @property
    def is_ragged(self) -> bool:
        sizes = self.fold_sizes
        return bool(np.any(sizes != sizes[0]))

    def members(self, k: int) -> np.ndarray:
        """Inverse image of fold k"""
        return np.flatnonzero(self.assignment == k)

    def indicator(self, k: int) -> np.ndarray:
        return self.assignment == k


@dataclass(frozen=True)
class FoldRepetition:
    class1: FoldMap
    class2: FoldMap


@dataclass(frozen=True)
class FoldPlan:
    """A realized CV partitioning: one pair of fold maps per repetition"""
    reps: Tuple[FoldRepetition, ...]
    mode: CvMode
    pairing: Pairing = Pairing.FULL
    seed: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        reps = tuple(self.reps)
        if not reps:
            raise InvalidInputError("a plan needs at least one repetition")
        first = reps[0]
        for rep in reps:
            if (rep.class1.n, rep.class2.n) != (first.class1.n, first.class2.n):
                raise InvalidInputError("all repetitions must cover the same observations")
            if (rep.class1.n_folds, rep.class2.n_folds) != (first.class1.n_folds, first.class2.n_folds):
                raise InvalidInputError("all repetitions must use the same fold counts")
        if self.mode == CvMode.CVN:
            if len(reps) != 1 or first.class1.n_folds != first.class1.n \
                    or first.class2.n_folds != first.class2.n:
                raise InvalidInputError("CVN plans hold one repetition with K = n per class")
        if self.mode == CvMode.CVK and len(reps) != 1:
            raise InvalidInputError("CVK plans hold exactly one repetition", {"reps": len(reps)})
        if self.pairing == Pairing.MATCHED and first.class1.n_folds != first.class2.n_folds:
            raise InvalidInputError(
                "matched pairing needs K1 = K2",
                {"K1": first.class1.n_folds, "K2": first.class2.n_folds}
            )
        object.__setattr__(self, "reps", reps)

    @property
    def n_reps(self) -> int:
        return len(self.reps)

    @property
    def n1(self) -> int:
        return self.reps[0].class1.n

    @property
    def n2(self) -> int:
        return self.reps[0].class2.n

    @property
    def k1(self) -> int:
        return self.reps[0].class1.n_folds

    @property
    def k2(self) -> int:
        return self.reps[0].class2.n_folds

    def test_indicators(self, fold: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        """I_i^m and I_j^m (M x n1, M x n2) for membership of the given fold"""
        ind1 = np.vstack([rep.class1.indicator(fold) for rep in self.reps])
        ind2 = np.vstack([rep.class2.indicator(fold) for rep in self.reps])
        return ind1, ind2


@dataclass(frozen=True)
class RepetitionScores:
    """Per-repetition scores h_m and testing indicators I^m.

    Scores outside a repetition's testing fold are NaN and never read.
    """
    scores1: np.ndarray
    scores2: np.ndarray
    ind1: np.ndarray
    ind2: np.ndarray

    def __post_init__(self):
        scores1 = np.asarray(self.scores1, dtype=float)
        scores2 = np.asarray(self.scores2, dtype=float)
        ind1 = np.asarray(self.ind1, dtype=bool)
        ind2 = np.asarray(self.ind2, dtype=bool)
        if scores1.shape != ind1.shape or scores2.shape != ind2.shape:
            raise InvalidInputError("scores and indicators must have matching shapes")
        if scores1.shape[0] != scores2.shape[0]:
            raise InvalidInputError("both classes need the same number of repetitions")
        if not (np.all(np.isfinite(scores1[ind1])) and np.all(np.isfinite(scores2[ind2]))):
            raise InvalidInputError("tested observations must have finite scores")
        for name, value in (("scores1", scores1), ("scores2", scores2), ("ind1", ind1), ("ind2", ind2)):
            object.__setattr__(self, name, frozen_array(value))

    @property
    def n_reps(self) -> int:
        return self.scores1.shape[0]

    @property
    def appearances1(self) -> np.ndarray:
        """N_i^m = 1 - I_i^m: whether x_i is in the training set of repetition m"""
        return 1 - self.ind1.astype(int)

    @property
    def appearances2(self) -> np.ndarray:
        return 1 - self.ind2.astype(int)

    def blocks(self, size: int = 128) -> Iterator[slice]:
        for start in range(0, self.n_reps, size):
            yield slice(start, min(start + size, self.n_reps))


@dataclass(frozen=True)
class PairwiseAucTable:
    """Per-pair sums over repetitions: num = sum I I psi, den = sum I I"""
    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.asarray(self.num, dtype=float)
        den = np.asarray(self.den, dtype=np.int64)
        if num.shape != den.shape or num.ndim != 2:
            raise InvalidInputError("num and den must be matching matrices")
        object.__setattr__(self, "num", frozen_array(num))
        object.__setattr__(self, "den", frozen_array(den))

    @classmethod
    def zeros(cls, n1: int, n2: int) -> "PairwiseAucTable":
        return cls(np.zeros((n1, n2)), np.zeros((n1, n2), dtype=np.int64))

    def merge(self, other: "PairwiseAucTable") -> "PairwiseAucTable":
        """Elementwise sum of two partial tables"""
        return PairwiseAucTable(self.num + other.num, self.den + other.den)

    @property
    def covered(self) -> np.ndarray:
        return self.den > 0

    def ratio(self, fill: float = np.nan) -> np.ndarray:
        """num / den, with ``fill`` where den = 0"""
        out = np.full(self.num.shape, fill, dtype=float)
        np.divide(self.num, self.den, out=out, where=self.covered)
        return out


def psi(a: float, b: float, tol: float = 0.0) -> float:
    """Mann-Whitney kernel: 1 if a > b, 0.5 on a tie, 0 if a < b"""
    a = validate_finite_scalar("a", a)
    b = validate_finite_scalar("b", b)
    if abs(a - b) <= tol:
        return 0.5
    return 1.0 if a > b else 0.0


def psi_matrix(scores1, scores2, tol: float = 0.0) -> np.ndarray:
    """psi for every (i, j) pair; broadcasts over leading axes"""
    scores1 = np.asarray(scores1, dtype=float)
    scores2 = np.asarray(scores2, dtype=float)
    diff = scores1[..., :, np.newaxis] - scores2[..., np.newaxis, :]
    out = np.where(diff > 0, 1.0, 0.0)
    if tol > 0:
        out[np.abs(diff) <= tol] = 0.5
    else:
        out[diff == 0] = 0.5
    return out


def empirical_auc(scores1, scores2, tol: float = 0.0) -> float:
    """(1 / n1 n2) sum_i sum_j psi(scores1[i], scores2[j])"""
    scores1 = validate_vector("scores1", scores1)
    scores2 = validate_vector("scores2", scores2)
    n1, n2 = scores1.size, scores2.size
    if tol > 0:
        return float(psi_matrix(scores1, scores2, tol).sum() / (n1 * n2))
    # mid-ranks count ties as one half, exactly as psi does
    ranks = rankdata(np.concatenate([scores1, scores2]))
    return float((ranks[:n1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n2))


def fold_map_canonical(n: int, n_folds: int, ragged: bool = False) -> FoldMap:
    """K(i) = k iff n_K (k - 1) < i <= n_K k (1-based), returned 0-based.

    With ``ragged`` the n mod K remainder goes one-per-fold to the lowest folds.
    """
    n = validate_count("n", n, minimum=2)
    n_folds = validate_count("K", n_folds, minimum=2)
    if n_folds > n:
        raise InvalidInputError("K cannot exceed n", {"n": n, "K": n_folds})
    remainder = n % n_folds
    if remainder and not ragged:
        raise InvalidInputError(
            "K must divide n (use ragged folds for remainders)",
            {"n": n, "K": n_folds}
        )
    base = n // n_folds
    sizes = np.full(n_folds, base)
    sizes[:remainder] += 1
    return FoldMap(np.repeat(np.arange(n_folds), sizes), n_folds)


def fold_pairs(n_folds1: int, n_folds2: int, pairing: Pairing) -> Sequence[Tuple[int, int]]:
    """Excluded-fold pairs that need a trained classifier"""
    if pairing == Pairing.MATCHED:
        return [(k, k) for k in range(n_folds1)]
    return [(k1, k2) for k1 in range(n_folds1) for k2 in range(n_folds2)]
