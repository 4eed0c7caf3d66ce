"""Stratified k-fold assignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewSamples
from .seeding import rng_for
from .vocab import LabelClass


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold: np.ndarray  # fold index per sample

    def train_test(self, i: int):
        """Index arrays (train, held-out) for fold ``i``."""
        held = self.fold == i
        return np.flatnonzero(~held), np.flatnonzero(held)

    def splits(self):
        return [self.train_test(i) for i in range(self.k)]


def _class_name(c) -> str:
    try:
        return LabelClass(int(c)).name
    except ValueError:
        return str(c)


def stratified_folds(labels, k: int, seed: int) -> FoldAssignment:
    """Shuffle each class (seeded per class) and deal its samples round-robin.

    Classes are visited in ascending code order, so the assignment depends
    only on ``(labels, k, seed)``.
    """
    labels = np.asarray(labels)
    if k < 1:
        raise ValueError("k must be >= 1")
    fold = np.zeros(len(labels), dtype=np.int64)
    if k == 1:
        return FoldAssignment(1, fold)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < k:
            raise TooFewSamples(f"class {_class_name(c)} has {len(idx)} samples, need at least {k} for {k} folds")
        idx = idx[rng_for(seed, int(c)).permutation(len(idx))]
        fold[idx] = np.arange(len(idx)) % k
    return FoldAssignment(k, fold)
