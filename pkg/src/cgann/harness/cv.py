"""5x2 cross-validation plans and the combined 5x2cv F-test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

F_CRITICAL = 4.74  # F(10, 5) at the 0.05 level
REPLICATIONS = 5
TRAIN_FRACTION = 0.7


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class Fold:
    replication: int
    fold: int
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class SplitPlan:
    halves: list  # per replication: (d1, d2) index arrays
    folds: list

    def fold(self, replication: int, fold: int) -> Fold:
        return self.folds[2 * replication + fold]


def _stratified_halves(classes: np.ndarray, rng: np.random.Generator):
    order = np.concatenate([rng.permutation(np.flatnonzero(classes == c))
                            for c in np.unique(classes)])
    # alternate along the class-grouped order: every class splits within one example
    d2, d1 = order[0::2], order[1::2]
    return np.sort(d1), np.sort(d2)


def _train_counts(class_counts: np.ndarray, total: int) -> np.ndarray:
    quota = TRAIN_FRACTION * class_counts
    counts = np.floor(quota).astype(int)
    short = total - counts.sum()
    if short > 0:
        frac = quota - counts
        for c in sorted(range(len(counts)), key=lambda c: (-frac[c], c))[:short]:
            counts[c] += 1
    return counts


def train_size(m: int) -> int:
    # exact half-to-even rounding of 0.7 m: matches the benchmark table
    # (175 -> 122, 345 -> 242); the float product 0.7 * 345 is just below 241.5
    return int(round(Fraction(TRAIN_FRACTION).limit_denominator(100) * m))


def _fit_partition(fit: np.ndarray, classes: np.ndarray, rng: np.random.Generator):
    labels = np.unique(classes[fit])
    members = [rng.permutation(fit[classes[fit] == c]) for c in labels]
    counts = _train_counts(np.array([len(m) for m in members]), train_size(len(fit)))
    train = np.concatenate([m[:k] for m, k in zip(members, counts)])
    val = np.concatenate([m[k:] for m, k in zip(members, counts)])
    return np.sort(train), np.sort(val)


def split_5x2(classes, seed: int, replications: int = REPLICATIONS) -> SplitPlan:
    """Five stratified halvings; each yields a fold fitting on D1 and one fitting on D2.

    ``classes`` is the integer class of every example (or a dataset with a
    ``classes`` attribute).  D1 is the smaller half when the count is odd.
    """
    classes = np.asarray(getattr(classes, "classes", classes))
    if len(classes) < 10:
        raise SplitError(f"5x2 cross-validation needs at least 10 examples, got {len(classes)}")
    values, counts = np.unique(classes, return_counts=True)
    if counts.min() < 2:
        raise SplitError(f"class {values[counts.argmin()]} has fewer than 2 examples")
    halves, folds = [], []
    for r in range(replications):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), r]))
        d1, d2 = _stratified_halves(classes, rng)
        halves.append((d1, d2))
        for j, (fit, test) in enumerate(((d1, d2), (d2, d1))):
            train, val = _fit_partition(fit, classes, rng)
            folds.append(Fold(r, j, train, val, test))
    return SplitPlan(halves, folds)


@dataclass(frozen=True)
class FTestResult:
    differences: np.ndarray  # p_ij, shape (5, 2)
    variances: np.ndarray  # s_i^2, shape (5,)
    numerator: float
    denominator: float
    statistic: float
    degenerate: bool
    reject: bool

    def summary(self) -> str:
        if self.degenerate:
            verdict = "reject" if self.reject else "no rejection"
            return f"F undefined (zero variance, degenerate); {verdict} of equal error rates"
        verdict = "reject" if self.reject else "no rejection"
        return f"F = {self.statistic:.6g} (critical {F_CRITICAL}); {verdict} of equal error rates"


def decide(statistic: float, threshold: float = F_CRITICAL) -> bool:
    return statistic > threshold


def f_test_5x2(err_a, err_b) -> FTestResult:
    """Combined 5x2cv F-test on error vectors ordered (replication, fold)."""
    a = np.asarray(err_a, dtype=float).ravel()
    b = np.asarray(err_b, dtype=float).ravel()
    if a.size != 10 or b.size != 10:
        raise ValueError(f"expected two vectors of 10 errors, got {a.size} and {b.size}")
    p = (a - b).reshape(5, 2)
    mean = p.mean(axis=1, keepdims=True)
    s2 = ((p - mean) ** 2).sum(axis=1)
    num = float((p ** 2).sum())
    den = 2.0 * float(s2.sum())
    if den == 0.0:
        return FTestResult(p, s2, num, den, math.inf if num > 0 else math.nan, True, num > 0)
    stat = num / den
    return FTestResult(p, s2, num, den, stat, False, decide(stat))
