"""Model families behind one interface, and grid-search tuning.

Each family can score a whole grid on one train/validation split at once
(``sweep``), reusing shared work where the models nest exactly:

* KNN: one distance matrix serves every ``k``;
* forest: trees depend only on ``(seed, tree index)`` and a shallower tree is
  a truncation of a deeper one, so the largest forest answers every
  ``(n_trees, max_depth)`` point;
* GBT: a model with fewer rounds is a prefix of one with more.

The shortcuts return exactly what fitting each grid point separately would.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import InvalidConfig
from ..folds import stratified_folds
from ..vocab import N_CLASSES
from .forest import forest_fit, forest_predict_batch
from .gbt import gbt_fit, gbt_staged_scores, gbt_predict_batch
from .knn import knn_fit, knn_predict_batch, knn_predict_multi


class ParamGrid:
    """Candidate values per hyperparameter, enumerated in declared order
    (first parameter outermost)."""

    def __init__(self, values: dict):
        if not values or any(len(v) == 0 for v in values.values()):
            raise InvalidConfig("parameter grid must be non-empty")
        self.values = {k: list(v) for k, v in values.items()}

    def points(self) -> list[dict]:
        names = list(self.values)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.values.values())]

    def __len__(self):
        return len(self.points())

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self.values.items()}

    def __eq__(self, other):
        return isinstance(other, ParamGrid) and self.values == other.values

    def __repr__(self):
        return f"ParamGrid({self.values!r})"


@dataclass(frozen=True)
class Family:
    name: str
    fit: Callable  # (X, y, params, seed) -> model
    predict: Callable  # (model, X) -> class codes
    sweep: Callable  # (points, Xtr, ytr, Xva, seed) -> list of predictions
    default_grid: ParamGrid
    params: tuple  # accepted parameter names


def _knn_fit(X, y, params, seed):
    return knn_fit(X, y, int(params.get("k", 1)), N_CLASSES)


def _knn_sweep(points, Xtr, ytr, Xva, seed):
    ks = [int(p.get("k", 1)) for p in points]
    for k in ks:
        if not 1 <= k <= len(Xtr):
            raise ValueError(f"k must be in [1, {len(Xtr)}], got {k}")
    return knn_predict_multi(np.asarray(Xtr, float), np.asarray(ytr, np.int64), np.asarray(Xva, float), ks)


_FOREST_DEFAULTS = {"n_trees": 100, "max_depth": None, "bootstrap": True, "features_per_split": None,
                    "min_samples_leaf": 1}


def _forest_params(params):
    p = dict(_FOREST_DEFAULTS)
    p.update(params)
    return p


def _forest_fit(X, y, params, seed, pool=None):
    p = _forest_params(params)
    return forest_fit(X, y, int(p["n_trees"]), p["max_depth"], bool(p["bootstrap"]), p["features_per_split"], seed,
                      N_CLASSES, int(p["min_samples_leaf"]), pool)


def _deepest(depths):
    return None if any(d is None for d in depths) else max(depths)


def _forest_sweep(points, Xtr, ytr, Xva, seed):
    full = [_forest_params(p) for p in points]
    groups = {}
    for i, p in enumerate(full):
        key = (p["bootstrap"], p["features_per_split"], p["min_samples_leaf"])
        groups.setdefault(key, []).append(i)
    out = [None] * len(points)
    for idxs in groups.values():
        big = dict(full[idxs[0]])
        big["n_trees"] = max(full[i]["n_trees"] for i in idxs)
        big["max_depth"] = _deepest([full[i]["max_depth"] for i in idxs])
        model = _forest_fit(Xtr, ytr, big, seed)
        for i in idxs:
            out[i] = forest_predict_batch(model, Xva, int(full[i]["n_trees"]), full[i]["max_depth"])
    return out


_GBT_DEFAULTS = {"rounds": 100, "learning_rate": 0.3, "max_depth": 3, "reg_lambda": 1.0, "gamma": 0.0}


def _gbt_params(params):
    p = dict(_GBT_DEFAULTS)
    p.update(params)
    return p


def _gbt_fit(X, y, params, seed):
    p = _gbt_params(params)
    return gbt_fit(X, y, int(p["rounds"]), float(p["learning_rate"]), int(p["max_depth"]), float(p["reg_lambda"]),
                   float(p["gamma"]), N_CLASSES)


def _gbt_sweep(points, Xtr, ytr, Xva, seed):
    full = [_gbt_params(p) for p in points]
    groups = {}
    for i, p in enumerate(full):
        groups.setdefault((p["learning_rate"], p["max_depth"], p["reg_lambda"], p["gamma"]), []).append(i)
    out = [None] * len(points)
    for idxs in groups.values():
        big = dict(full[idxs[0]])
        big["rounds"] = max(int(full[i]["rounds"]) for i in idxs)
        model = _gbt_fit(Xtr, ytr, big, seed)
        staged = gbt_staged_scores(model, Xva, [int(full[i]["rounds"]) for i in idxs])
        for i in idxs:
            out[i] = staged[int(full[i]["rounds"])].argmax(axis=1)
    return out


FAMILIES = {
    "knn": Family("knn", _knn_fit, knn_predict_batch, _knn_sweep, ParamGrid({"k": [1, 3, 5, 7]}), ("k",)),
    "forest": Family("forest", _forest_fit, forest_predict_batch, _forest_sweep,
                     ParamGrid({"n_trees": [50, 100], "max_depth": [8, 16]}), tuple(_FOREST_DEFAULTS)),
    "gbt": Family("gbt", _gbt_fit, gbt_predict_batch, _gbt_sweep,
                  ParamGrid({"rounds": [50, 100], "learning_rate": [0.1, 0.3], "max_depth": [3, 4],
                             "reg_lambda": [1.0], "gamma": [0.0]}), tuple(_GBT_DEFAULTS)),
}


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise InvalidConfig(f"unknown model family {name!r}; expected one of {sorted(FAMILIES)}") from None


def sweep_naive(family: Family, points, Xtr, ytr, Xva, seed):
    """Reference: fit every grid point on its own."""
    return [family.predict(family.fit(Xtr, ytr, p, seed), Xva) for p in points]


@dataclass(frozen=True)
class SearchResult:
    best: dict
    scores: tuple  # mean CV accuracy per grid point, enumeration order


def grid_search(family, grid: ParamGrid, X, y, k_folds: int, seed: int, pool=None) -> SearchResult:
    """Pick the grid point with the best mean stratified-CV accuracy.

    Ties go to the earliest point in enumeration order.  Model seeds and
    fold assignment both derive from ``seed``; ``pool`` may run folds
    concurrently without changing the result.
    """
    family = get_family(family) if isinstance(family, str) else family
    if k_folds < 2:
        raise ValueError("grid search needs k_folds >= 2")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    points = grid.points()
    folds = stratified_folds(y, k_folds, seed).splits()

    def run(split):
        tr, va = split
        preds = family.sweep(points, X[tr], y[tr], X[va], seed)
        return [float(np.mean(p == y[va])) for p in preds]

    per_fold = list(pool.map(run, folds)) if pool is not None else [run(f) for f in folds]
    scores = np.mean(np.array(per_fold), axis=0)
    best = int(np.argmax(scores))  # first maximum
    return SearchResult(points[best], tuple(float(s) for s in scores))
