"""Random forest: bagged CART trees with per-node feature subsampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyData
from ..seeding import derive_seed, rng_for
from ..vocab import N_CLASSES
from .tree import DecisionTree, tree_fit, tree_predict


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    n_trees: int
    max_depth: int | None
    bootstrap: bool
    features_per_split: int
    seed: int
    n_classes: int = N_CLASSES


def default_features_per_split(n_features: int) -> int:
    return max(1, int(round(math.sqrt(n_features))))


def _fit_one(X, y, i, n_trees, max_depth, bootstrap, fps, seed, n_classes, min_samples_leaf):
    tree_seed = derive_seed(seed, i)
    if bootstrap:
        rows = rng_for(tree_seed, 0).integers(0, len(X), len(X))
        Xb, yb = X[rows], y[rows]
    else:
        Xb, yb = X, y
    return tree_fit(Xb, yb, max_depth, min_samples_leaf, n_classes, fps, tree_seed)


def forest_fit(X, y, n_trees: int = 100, max_depth: int | None = None, bootstrap: bool = True,
               features_per_split: int | None = None, seed: int = 0, n_classes: int = N_CLASSES,
               min_samples_leaf: int = 1, pool=None) -> ForestModel:
    """Fit ``n_trees`` trees; tree ``i`` only depends on ``(seed, i)``.

    ``pool`` is an optional executor used to grow trees concurrently.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0 or len(X) != len(y):
        raise EmptyData("forest_fit needs matching, non-empty X and y")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    fps = default_features_per_split(X.shape[1]) if features_per_split is None else int(features_per_split)
    args = [(X, y, i, n_trees, max_depth, bootstrap, fps, seed, n_classes, min_samples_leaf) for i in range(n_trees)]
    if pool is not None:
        trees = list(pool.map(_fit_one, *zip(*args)))
    else:
        trees = [_fit_one(*a) for a in args]
    return ForestModel(tuple(trees), n_trees, max_depth, bootstrap, fps, seed, n_classes)


def forest_votes(model: ForestModel, X, n_trees: int | None = None, max_depth: int | None = None) -> np.ndarray:
    """Per-class vote counts, optionally using only the first ``n_trees``
    trees evaluated at depth ``max_depth``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    trees = model.trees[: n_trees or model.n_trees]
    votes = np.zeros((len(X), model.n_classes), dtype=np.int64)
    rows = np.arange(len(X))
    for tree in trees:
        np.add.at(votes, (rows, tree_predict(tree, X, max_depth)), 1)
    return votes


def forest_predict_batch(model: ForestModel, X, n_trees: int | None = None, max_depth: int | None = None) -> np.ndarray:
    # argmax resolves vote ties toward the lowest class code
    return forest_votes(model, X, n_trees, max_depth).argmax(axis=1)


def forest_predict(model: ForestModel, x) -> int:
    return int(forest_predict_batch(model, np.asarray(x, dtype=float)[None, :])[0])


__all__ = ["ForestModel", "DecisionTree", "forest_fit", "forest_predict", "forest_predict_batch", "forest_votes",
           "default_features_per_split"]
