"""Versioned JSON persistence for fitted models.

Layout::

    {"format": "labelgap-model", "version": 1, "family": "...",
     "params": {...}, "seed": ..., "normalizer": {...} | null,
     "meta": {...}, "state": {...}}

Trees are stored as nested objects and KNN as its stored matrix.  Floats
are written with ``repr`` precision, so a reloaded model predicts exactly
like the original.
"""
from __future__ import annotations

import json

import numpy as np

from ..errors import ParseError
from ..features import Normalizer
from .forest import ForestModel
from .gbt import GbtModel, reg_tree_from_dict, reg_tree_to_dict
from .knn import KnnModel
from .tree import tree_from_dict, tree_to_dict

FORMAT = "labelgap-model"
VERSION = 1


def family_of(model) -> str:
    if isinstance(model, KnnModel):
        return "knn"
    if isinstance(model, ForestModel):
        return "forest"
    if isinstance(model, GbtModel):
        return "gbt"
    raise TypeError(f"unsupported model type {type(model).__name__}")


def model_state(model) -> dict:
    if isinstance(model, KnnModel):
        return {"k": model.k, "n_classes": model.n_classes, "X": model.X.tolist(), "y": model.y.tolist()}
    if isinstance(model, ForestModel):
        return {
            "n_trees": model.n_trees,
            "max_depth": model.max_depth,
            "bootstrap": model.bootstrap,
            "features_per_split": model.features_per_split,
            "seed": model.seed,
            "n_classes": model.n_classes,
            "n_features": model.trees[0].n_features,
            "trees": [tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, GbtModel):
        return {
            "n_classes": model.n_classes,
            "learning_rate": model.learning_rate,
            "reg_lambda": model.reg_lambda,
            "gamma": model.gamma,
            "max_depth": model.max_depth,
            "base_score": model.base_score,
            "n_features": model.n_features,
            "train_loss": list(model.train_loss),
            "trees": [[reg_tree_to_dict(t) for t in per_class] for per_class in model.trees],
        }
    raise TypeError(f"unsupported model type {type(model).__name__}")


def model_from_state(family: str, s: dict):
    if family == "knn":
        return KnnModel(np.asarray(s["X"], dtype=float), np.asarray(s["y"], dtype=np.int64), int(s["k"]),
                        int(s["n_classes"]))
    if family == "forest":
        trees = tuple(tree_from_dict(t, int(s["n_features"]), int(s["n_classes"])) for t in s["trees"])
        return ForestModel(trees, int(s["n_trees"]), s["max_depth"], bool(s["bootstrap"]),
                           int(s["features_per_split"]), int(s["seed"]), int(s["n_classes"]))
    if family == "gbt":
        trees = tuple(tuple(reg_tree_from_dict(t) for t in per_class) for per_class in s["trees"])
        return GbtModel(trees, int(s["n_classes"]), float(s["learning_rate"]), float(s["reg_lambda"]),
                        float(s["gamma"]), int(s["max_depth"]), float(s["base_score"]), int(s["n_features"]),
                        tuple(s.get("train_loss", ())))
    raise ValueError(f"unknown model family {family!r}")


def model_to_dict(model, params: dict | None = None, seed: int | None = None,
                  normalizer: Normalizer | None = None, meta: dict | None = None) -> dict:
    return {
        "meta": meta or {},
        "format": FORMAT,
        "version": VERSION,
        "family": family_of(model),
        "params": params or {},
        "seed": seed,
        "normalizer": normalizer.to_dict() if normalizer is not None else None,
        "state": model_state(model),
    }


def save_model(path, model, params=None, seed=None, normalizer=None, meta=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, params, seed, normalizer, meta), fh)
        fh.write("\n")


def load_model(path):
    """Returns ``(model, record)`` where ``record`` carries params, seed,
    the normalizer (or None) and free-form ``meta``."""
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    if d.get("format") != FORMAT:
        raise ParseError(path, 1, f"not a {FORMAT} file")
    if d.get("version") != VERSION:
        raise ParseError(path, 1, f"unsupported model version {d.get('version')!r}")
    try:
        model = model_from_state(d["family"], d["state"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(path, 1, f"bad model state: {exc}") from None
    norm = Normalizer.from_dict(d["normalizer"]) if d.get("normalizer") else None
    return model, {"family": d["family"], "params": d.get("params", {}), "seed": d.get("seed"), "normalizer": norm,
                   "meta": d.get("meta", {})}
