"""CART classification trees grown on Gini impurity."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, EmptyData
from ..seeding import rng_for
from ..vocab import N_CLASSES

LEAF = -1


@dataclass(frozen=True)
class DecisionTree:
    """Flat array representation; node 0 is the root.

    Every node (internal ones too) keeps its training class distribution,
    so a tree can be evaluated as if it had been grown to a smaller depth.
    Samples with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: np.ndarray
    n_features: int
    n_classes: int = N_CLASSES

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def midpoint(a: float, b: float) -> float:
    m = 0.5 * (a + b)
    # adjacent floats: the midpoint can round up to b, which would send b left
    return a if m >= b else m


def best_gini_split(Xn, yn, n_classes, min_samples_leaf=1):
    """Best split of one node over the columns of ``Xn``.

    Returns ``(column, threshold)`` or None when no column offers a valid
    threshold.  Ties go to the lowest column, then the lowest threshold.
    """
    m, f = Xn.shape
    if m < 2:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    onehot = np.eye(n_classes)[yn]
    cum = onehot[order].cumsum(axis=0)  # (m, f, K): class counts up to and including row i
    left = cum[:-1]
    right = cum[-1][None] - left
    n_left = np.arange(1, m, dtype=float)[:, None]
    n_right = m - n_left
    # maximising sum(c^2)/n over both children == maximising the Gini decrease
    score = (left**2).sum(-1) / n_left + (right**2).sum(-1) / n_right
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf).T  # (f, m - 1): feature-major for the tie rule
    col, pos = np.unravel_index(int(np.argmax(score)), score.shape)
    return int(col), midpoint(xs[pos, col], xs[pos + 1, col])


def tree_fit(X, y, max_depth: int | None = None, min_samples_leaf: int = 1, n_classes: int = N_CLASSES,
             features_per_split: int | None = None, seed: int = 0) -> DecisionTree:
    """Grow a CART tree.

    With ``features_per_split`` below the feature count, each node draws its
    candidate features from a generator keyed by ``seed`` and the node's
    position in the tree (heap index), so a shallower tree grown with the
    same seed is an exact truncation of a deeper one.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0 or len(X) != len(y):
        raise EmptyData("tree_fit needs matching, non-empty X and y")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    n, D = X.shape
    subsample = features_per_split is not None and features_per_split < D
    feature, threshold, left, right, value, depth = [], [], [], [], [], []

    def new_node(idx, d):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts = np.bincount(y[idx], minlength=n_classes).astype(float)
        value.append(counts / counts.sum())
        depth.append(d)
        return len(feature) - 1

    root = new_node(np.arange(n), 0)
    queue = deque([(root, np.arange(n), 1)])
    while queue:
        node, idx, heap_id = queue.popleft()
        d = depth[node]
        if (max_depth is not None and d >= max_depth) or len(idx) < 2 * min_samples_leaf:
            continue
        if np.all(y[idx] == y[idx[0]]):
            continue
        if subsample:
            cand = np.sort(rng_for(seed, heap_id).choice(D, features_per_split, replace=False))
        else:
            cand = np.arange(D)
        found = best_gini_split(X[np.ix_(idx, cand)], y[idx], n_classes, min_samples_leaf)
        if found is None:
            continue
        col, thr = found
        f = int(cand[col])
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(li, d + 1)
        right[node] = new_node(ri, d + 1)
        queue.append((left[node], li, 2 * heap_id))
        queue.append((right[node], ri, 2 * heap_id + 1))
    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
        np.array(depth, dtype=np.int64),
        D,
        n_classes,
    )


def tree_apply(tree: DecisionTree, X, max_depth: int | None = None) -> np.ndarray:
    """Index of the node each row of ``X`` ends in (optionally truncated)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != tree.n_features:
        raise DimensionMismatch(f"expected {tree.n_features} features, got {X.shape[1]}")
    node = np.zeros(len(X), dtype=np.int64)
    rows = np.arange(len(X))
    limit = tree.max_depth if max_depth is None else min(max_depth, tree.max_depth)
    for _ in range(limit):
        f = tree.feature[node]
        internal = f >= 0
        if not internal.any():
            break
        go_left = X[rows, np.where(internal, f, 0)] <= tree.threshold[node]
        node = np.where(internal, np.where(go_left, tree.left[node], tree.right[node]), node)
    return node


def tree_predict_proba(tree: DecisionTree, X, max_depth: int | None = None) -> np.ndarray:
    return tree.value[tree_apply(tree, X, max_depth)]


def tree_predict(tree: DecisionTree, X, max_depth: int | None = None) -> np.ndarray:
    return tree_predict_proba(tree, X, max_depth).argmax(axis=1)


def tree_to_dict(tree: DecisionTree, node: int = 0) -> dict:
    d = {"value": tree.value[node].tolist()}
    if tree.feature[node] != LEAF:
        d["feature"] = int(tree.feature[node])
        d["threshold"] = float(tree.threshold[node])
        d["left"] = tree_to_dict(tree, int(tree.left[node]))
        d["right"] = tree_to_dict(tree, int(tree.right[node]))
    return d


def tree_from_dict(d: dict, n_features: int, n_classes: int = N_CLASSES) -> DecisionTree:
    feature, threshold, left, right, value, depth = [], [], [], [], [], []
    # breadth-first so node ids match the order tree_fit assigns them
    queue = deque([(d, 0, None, None)])
    while queue:
        nd, dep, parent, side = queue.popleft()
        i = len(feature)
        feature.append(int(nd.get("feature", LEAF)))
        threshold.append(float(nd.get("threshold", 0.0)))
        left.append(LEAF)
        right.append(LEAF)
        value.append(nd["value"])
        depth.append(dep)
        if parent is not None:
            (left if side == "left" else right)[parent] = i
        if "feature" in nd:
            queue.append((nd["left"], dep + 1, i, "left"))
            queue.append((nd["right"], dep + 1, i, "right"))
    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
        np.array(depth, dtype=np.int64),
        n_features,
        n_classes,
    )
