"""k-nearest-neighbour classification on flattened feature vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, EmptyData
from ..vocab import N_CLASSES


@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int = 1
    n_classes: int = N_CLASSES

    def __post_init__(self):
        if len(self.X) == 0:
            raise EmptyData("KNN needs at least one training vector")
        if not 1 <= self.k <= len(self.X):
            raise ValueError(f"k must be in [1, {len(self.X)}], got {self.k}")


def knn_fit(X, y, k: int = 1, n_classes: int = N_CLASSES) -> KnnModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) != len(y):
        raise DimensionMismatch("X and y lengths differ")
    return KnnModel(X, y, int(k), n_classes)


def squared_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # explicit differences rather than the |a|^2 - 2ab + |b|^2 expansion,
    # so exact ties stay exact
    out = np.empty((len(A), len(B)))
    for i, a in enumerate(A):
        d = B - a
        out[i] = np.einsum("ij,ij->i", d, d)
    return out


def knn_predict_batch(model: KnnModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.X.shape[1]:
        raise DimensionMismatch(f"query has {X.shape[1]} features, model has {model.X.shape[1]}")
    return knn_predict_multi(model.X, model.y, X, [model.k], model.n_classes)[0]


def knn_predict_multi(Xtr, ytr, X, ks, n_classes: int = N_CLASSES) -> list[np.ndarray]:
    """Predictions for several neighbour counts from one distance matrix."""
    d = squared_distances(X, Xtr)
    # stable sort: equal distances keep training order, lower index first
    nearest = np.argsort(d, axis=1, kind="stable")
    votes = np.zeros((len(X), n_classes), dtype=np.int64)
    rows = np.arange(len(X))
    out, j = {}, 0
    for k in sorted(set(ks)):
        while j < k:
            np.add.at(votes, (rows, ytr[nearest[:, j]]), 1)
            j += 1
        # argmax picks the lowest class code among tied vote counts
        out[k] = votes.argmax(axis=1)
    return [out[k] for k in ks]


def knn_predict(model: KnnModel, x) -> int:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("knn_predict expects a single vector")
    return int(knn_predict_batch(model, x[None, :])[0])
