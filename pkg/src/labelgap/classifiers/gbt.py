"""Gradient-boosted regression trees with a multiclass softmax objective.

Each round fits one regression tree per class to the softmax gradient and
hessian, choosing splits by the regularised second-order gain

    gain = 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma

and setting leaf weights to ``-G/(H+lambda)``.  Splits are found by exact
greedy enumeration over presorted feature columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import DimensionMismatch, SingleClass
from ..vocab import N_CLASSES
from .tree import LEAF


@dataclass(frozen=True)
class RegTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray


@dataclass(frozen=True)
class GbtModel:
    trees: tuple  # trees[round][class]
    n_classes: int
    learning_rate: float
    reg_lambda: float
    gamma: float
    max_depth: int
    base_score: float = 0.0
    n_features: int = 0
    train_loss: tuple = field(default=(), compare=False)

    @property
    def rounds(self) -> int:
        return len(self.trees)


@numba.njit(cache=True)
def _half_score(g, h, lam):
    d = h + lam
    if d <= 0.0:
        return 0.0
    return g * g / d


@numba.njit(cache=True)
def _grow(X, order, xs, g, h, max_depth, lam, gamma):
    # level-wise: one pass per feature over the presorted rows serves every
    # open node of the level at once
    n, D = X.shape
    cap = 2 ** (max_depth + 1) - 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    G = np.zeros(cap)
    H = np.zeros(cap)
    is_open = np.zeros(cap, np.bool_)
    node_of = np.zeros(n, np.int64)
    for i in range(n):
        G[0] += g[i]
        H[0] += h[i]
    n_nodes = 1
    is_open[0] = True
    level_lo, level_hi = 0, 1
    GL = np.zeros(cap)
    HL = np.zeros(cap)
    cnt = np.zeros(cap, np.int64)
    last = np.zeros(cap)
    parent = np.zeros(cap)
    best_gain = np.zeros(cap)
    best_feat = np.full(cap, -1, np.int64)
    best_thr = np.zeros(cap)
    for depth in range(max_depth):
        for k in range(level_lo, level_hi):
            best_gain[k] = 0.0
            best_feat[k] = -1
            parent[k] = _half_score(G[k], H[k], lam)
        for d in range(D):
            for k in range(level_lo, level_hi):
                GL[k] = 0.0
                HL[k] = 0.0
                cnt[k] = 0
            for j in range(n):
                i = order[d, j]
                k = node_of[i]
                if not is_open[k]:
                    continue
                v = xs[d, j]
                if cnt[k] > 0 and v > last[k]:
                    gain = 0.5 * (_half_score(GL[k], HL[k], lam) + _half_score(G[k] - GL[k], H[k] - HL[k], lam)
                                  - parent[k]) - gamma
                    if gain > best_gain[k]:
                        best_gain[k] = gain
                        best_feat[k] = d
                        m = 0.5 * (last[k] + v)
                        best_thr[k] = last[k] if m >= v else m
                GL[k] += g[i]
                HL[k] += h[i]
                cnt[k] += 1
                last[k] = v
        new_lo = n_nodes
        for k in range(level_lo, level_hi):
            is_open[k] = False
            if best_feat[k] >= 0:
                feature[k] = best_feat[k]
                threshold[k] = best_thr[k]
                left[k] = n_nodes
                right[k] = n_nodes + 1
                is_open[n_nodes] = True
                is_open[n_nodes + 1] = True
                n_nodes += 2
        if n_nodes == new_lo:
            break
        for i in range(n):
            k = node_of[i]
            if feature[k] >= 0 and left[k] >= new_lo:
                c = left[k] if X[i, feature[k]] <= threshold[k] else right[k]
                node_of[i] = c
                G[c] += g[i]
                H[c] += h[i]
        level_lo, level_hi = new_lo, n_nodes
    weight = np.zeros(n_nodes)
    for k in range(n_nodes):
        weight[k] = -G[k] / (H[k] + lam) if H[k] + lam > 0.0 else 0.0
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], weight, node_of


def grow_regression_tree(X, g, h, max_depth: int, reg_lambda: float = 1.0, gamma: float = 0.0, presorted=None):
    """One second-order regression tree; returns ``(tree, leaf_of_each_row)``.

    ``presorted`` is the ``(order, xs)`` pair from :func:`presort`, reusable
    across trees grown on the same ``X``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    order, xs = presort(X) if presorted is None else presorted
    f, t, l, r, w, node_of = _grow(X, order, xs, np.ascontiguousarray(g, float), np.ascontiguousarray(h, float),
                                   int(max_depth), float(reg_lambda), float(gamma))
    return RegTree(f, t, l, r, w), node_of


def presort(X):
    """Per-feature row order (ties by row index) and the matching sorted
    values, both laid out (n_features, n_rows) for contiguous scans."""
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    return np.ascontiguousarray(order.T), np.ascontiguousarray(xs.T)


def reg_tree_apply(tree: RegTree, X) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int64)
    rows = np.arange(len(X))
    while True:
        f = tree.feature[node]
        internal = f >= 0
        if not internal.any():
            return node
        go_left = X[rows, np.where(internal, f, 0)] <= tree.threshold[node]
        node = np.where(internal, np.where(go_left, tree.left[node], tree.right[node]), node)


def softmax(F: np.ndarray) -> np.ndarray:
    z = F - F.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_loss(F: np.ndarray, y: np.ndarray) -> float:
    p = softmax(F)
    return float(-np.mean(np.log(np.maximum(p[np.arange(len(y)), y], 1e-300))))


def softmax_grad_hess(F: np.ndarray, y: np.ndarray):
    p = softmax(F)
    onehot = np.zeros_like(p)
    onehot[np.arange(len(y)), y] = 1.0
    return p - onehot, p * (1.0 - p)


def gbt_fit(X, y, rounds: int = 100, learning_rate: float = 0.3, max_depth: int = 3, reg_lambda: float = 1.0,
            gamma: float = 0.0, n_classes: int = N_CLASSES, base_score: float = 0.0) -> GbtModel:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) != len(y):
        raise DimensionMismatch("X and y lengths differ")
    if len(np.unique(y)) < 2:
        raise SingleClass("gradient boosting needs at least two classes in the training data")
    if not 0 < learning_rate <= 1 or reg_lambda < 0 or gamma < 0:
        raise ValueError("need 0 < learning_rate <= 1, lambda >= 0, gamma >= 0")
    presorted = presort(X)
    F = np.full((len(X), n_classes), float(base_score))
    trees, losses = [], []
    for _ in range(rounds):
        grad, hess = softmax_grad_hess(F, y)
        per_class = []
        for c in range(n_classes):
            tree, leaf = grow_regression_tree(X, grad[:, c], hess[:, c], max_depth, reg_lambda, gamma, presorted)
            F[:, c] += learning_rate * tree.weight[leaf]
            per_class.append(tree)
        trees.append(tuple(per_class))
        losses.append(log_loss(F, y))
    return GbtModel(tuple(trees), n_classes, float(learning_rate), float(reg_lambda), float(gamma), int(max_depth),
                    float(base_score), X.shape[1], tuple(losses))


def gbt_staged_scores(model: GbtModel, X, stages) -> dict:
    """Raw class scores after each round count in ``stages``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.n_features and X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {X.shape[1]}")
    wanted = sorted(set(int(s) for s in stages))
    F = np.full((len(X), model.n_classes), model.base_score)
    out = {}
    if 0 in wanted:
        out[0] = F.copy()
    for r, per_class in enumerate(model.trees, start=1):
        if r > wanted[-1]:
            break
        for c, tree in enumerate(per_class):
            F[:, c] += model.learning_rate * tree.weight[reg_tree_apply(tree, X)]
        if r in wanted:
            out[r] = F.copy()
    return out


def gbt_scores(model: GbtModel, X, rounds: int | None = None) -> np.ndarray:
    r = model.rounds if rounds is None else min(rounds, model.rounds)
    return gbt_staged_scores(model, X, [r])[r]


def gbt_predict_proba(model: GbtModel, X, rounds: int | None = None) -> np.ndarray:
    return softmax(gbt_scores(model, X, rounds))


def gbt_predict_batch(model: GbtModel, X, rounds: int | None = None) -> np.ndarray:
    # argmax resolves equal scores toward the lowest class code
    return gbt_scores(model, X, rounds).argmax(axis=1)


def gbt_predict(model: GbtModel, x) -> int:
    return int(gbt_predict_batch(model, np.asarray(x, dtype=float)[None, :])[0])


def reg_tree_to_dict(tree: RegTree, node: int = 0) -> dict:
    if tree.feature[node] == LEAF:
        return {"weight": float(tree.weight[node])}
    return {
        "feature": int(tree.feature[node]),
        "threshold": float(tree.threshold[node]),
        "weight": float(tree.weight[node]),
        "left": reg_tree_to_dict(tree, int(tree.left[node])),
        "right": reg_tree_to_dict(tree, int(tree.right[node])),
    }


def reg_tree_from_dict(d: dict) -> RegTree:
    feature, threshold, left, right, weight = [], [], [], [], []
    stack = [(d, None, None)]
    while stack:
        nd, parent, side = stack.pop()
        i = len(feature)
        feature.append(int(nd.get("feature", LEAF)))
        threshold.append(float(nd.get("threshold", 0.0)))
        weight.append(float(nd["weight"]))
        left.append(LEAF)
        right.append(LEAF)
        if parent is not None:
            (left if side == "left" else right)[parent] = i
        if "feature" in nd:
            stack.append((nd["right"], i, "right"))
            stack.append((nd["left"], i, "left"))
    return RegTree(np.array(feature, np.int64), np.array(threshold), np.array(left, np.int64),
                   np.array(right, np.int64), np.array(weight))
