import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelgap.classifiers import (
    ParamGrid,
    forest_fit,
    forest_predict,
    forest_predict_batch,
    gbt_fit,
    gbt_predict,
    gbt_predict_batch,
    get_family,
    grid_search,
    knn_fit,
    knn_predict,
    knn_predict_batch,
    load_model,
    save_model,
    tree_fit,
    tree_predict,
)
from labelgap.classifiers.gbt import gbt_predict_proba, gbt_scores, softmax_grad_hess
from labelgap.classifiers.search import FAMILIES, sweep_naive
from labelgap.classifiers.tree import gini
from labelgap.errors import DimensionMismatch, EmptyData, InvalidConfig, ParseError, SingleClass
from labelgap.features import Normalizer

from oracles import brute_knn, exhaustive_best_split_1d, knn_fixture, softmax_log_loss, three_class_1d


def _blobs(n_per=12, n_classes=4, d=5, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    centres = rng.normal(scale=3.0, size=(n_classes, d))
    X = np.concatenate([c + spread * rng.normal(size=(n_per, d)) for c in centres])
    y = np.repeat(np.arange(n_classes), n_per)
    return X, y


# -- knn -------------------------------------------------------------------

def test_knn_examples():
    X = np.array([[0.0], [10.0]])
    m = knn_fit(X, [2, 6], k=1)
    assert knn_predict(m, [4.0]) == 2
    assert knn_predict(m, [10.0]) == 6
    tie = knn_fit(np.array([[0.0], [1.0]]), [5, 3], k=2)
    assert knn_predict(tie, [0.5]) == 3


def test_knn_matches_brute_force():
    X, y, Q = knn_fixture()
    for k in (1, 2, 3, 5, 8):
        got = knn_predict_batch(knn_fit(X, y, k), Q)
        assert got.tolist() == [brute_knn(X, y, q, k) for q in Q]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_knn_permutation_invariant_without_ties(seed, k):
    rng = np.random.default_rng(seed)
    X, y, Q = rng.normal(size=(25, 3)), rng.integers(0, 8, 25), rng.normal(size=(10, 3))
    perm = rng.permutation(25)
    a = knn_predict_batch(knn_fit(X, y, k), Q)
    b = knn_predict_batch(knn_fit(X[perm], y[perm], k), Q)
    assert np.array_equal(a, b)


def test_knn_errors():
    with pytest.raises(EmptyData):
        knn_fit(np.zeros((0, 2)), [])
    with pytest.raises(DimensionMismatch):
        knn_predict(knn_fit(np.zeros((3, 2)), [0, 1, 2]), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        knn_fit(np.zeros((3, 2)), [0, 1, 2], k=4)


# -- trees and forests -----------------------------------------------------

def test_gini_values():
    assert gini([4, 0]) == 0.0
    assert gini([2, 2]) == 0.5


def test_tree_pure_is_leaf():
    t = tree_fit(np.random.default_rng(0).normal(size=(10, 3)), [4] * 10)
    assert t.n_nodes == 1
    assert tree_predict(t, np.zeros((2, 3))).tolist() == [4, 4]


def test_tree_1d_split():
    x, y = [1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1]
    assert exhaustive_best_split_1d(x, y, 2) == 2.5
    t = tree_fit(np.array(x)[:, None], y)
    assert t.feature[0] == 0 and t.threshold[0] == 2.5
    assert tree_predict(t, np.array(x)[:, None]).tolist() == y


def test_tree_truncation_matches_shallow_fit():
    X, y = _blobs(spread=2.0, seed=4)
    deep = tree_fit(X, y, max_depth=8, features_per_split=2, seed=9)
    shallow = tree_fit(X, y, max_depth=2, features_per_split=2, seed=9)
    Q = np.random.default_rng(1).normal(scale=3, size=(50, 5))
    assert np.array_equal(tree_predict(deep, Q, max_depth=2), tree_predict(shallow, Q))


def test_forest_single_tree_equals_tree():
    X, y = _blobs(spread=1.5, seed=2)
    f = forest_fit(X, y, n_trees=1, bootstrap=False, features_per_split=X.shape[1], seed=3)
    t = tree_fit(X, y)
    Q = np.random.default_rng(5).normal(scale=3, size=(100, 5))
    assert np.array_equal(forest_predict_batch(f, Q), tree_predict(t, Q))


def test_forest_memorizes_training_points():
    X, y = _blobs(spread=1.5, seed=6)
    f = forest_fit(X, y, n_trees=15, bootstrap=False, seed=1)
    assert np.array_equal(forest_predict_batch(f, X), y)
    assert forest_predict(f, X[0]) == y[0]


def test_forest_deterministic_any_pool():
    from concurrent.futures import ThreadPoolExecutor

    X, y = _blobs(spread=1.5, seed=7)
    Q = np.random.default_rng(0).normal(scale=3, size=(40, 5))
    a = forest_fit(X, y, n_trees=12, max_depth=5, seed=42)
    with ThreadPoolExecutor(4) as pool:
        b = forest_fit(X, y, n_trees=12, max_depth=5, seed=42, pool=pool)
    assert np.array_equal(forest_predict_batch(a, Q), forest_predict_batch(b, Q))
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.threshold, tb.threshold) and np.array_equal(ta.feature, tb.feature)


# -- gradient boosting -----------------------------------------------------

def test_gbt_zero_rounds_uniform():
    X, y = three_class_1d()
    m = gbt_fit(X, y, rounds=0, n_classes=3)
    np.testing.assert_allclose(gbt_predict_proba(m, X), 1 / 3)


def test_softmax_gradient_identity():
    # scores that make p numerically one-hot on the true class
    F = np.array([[0.0, 800.0, 0.0]])
    g, h = softmax_grad_hess(F, np.array([1]))
    assert np.all(g == 0) and np.all(h == 0)


def test_gbt_three_class_fixture():
    X, y = three_class_1d()
    m = gbt_fit(X, y, rounds=10, learning_rate=0.3, n_classes=3)
    assert len(m.train_loss) == 10
    assert m.train_loss[-1] < m.train_loss[0]
    assert all(b <= a for a, b in zip(m.train_loss, m.train_loss[1:]))
    # the recorded loss agrees with a recomputation from the model's own scores
    assert m.train_loss[-1] == pytest.approx(softmax_log_loss(gbt_scores(m, X), y), rel=1e-12)
    assert m.train_loss[0] == pytest.approx(softmax_log_loss(gbt_scores(m, X, rounds=1), y), rel=1e-12)
    assert np.array_equal(gbt_predict_batch(m, X), y)
    assert gbt_predict(m, [10.5]) == 2


def test_gbt_errors():
    X, y = three_class_1d()
    with pytest.raises(SingleClass):
        gbt_fit(X, np.zeros(len(X), dtype=int))
    with pytest.raises(ValueError):
        gbt_fit(X, y, learning_rate=0.0, n_classes=3)


# -- grid search -----------------------------------------------------------

def test_grid_points_order():
    g = ParamGrid({"a": [1, 2], "b": ["x", "y"]})
    assert g.points() == [{"a": 1, "b": "x"}, {"a": 1, "b": "y"}, {"a": 2, "b": "x"}, {"a": 2, "b": "y"}]
    with pytest.raises(InvalidConfig):
        ParamGrid({"a": []})
    with pytest.raises(InvalidConfig):
        get_family("svm")


def test_grid_search_single_point():
    X, y = _blobs()
    r = grid_search("forest", ParamGrid({"n_trees": [5], "max_depth": [3]}), X, y, 3, seed=0)
    assert r.best == {"n_trees": 5, "max_depth": 3} and len(r.scores) == 1


def test_grid_search_tie_goes_to_first():
    X, y = _blobs(spread=0.05)
    r = grid_search("knn", ParamGrid({"k": [1, 3, 5]}), X, y, 3, seed=1)
    assert r.scores == (1.0, 1.0, 1.0) and r.best == {"k": 1}


def test_grid_search_deterministic():
    X, y = _blobs(spread=2.5, seed=3)
    g = ParamGrid({"n_trees": [3, 6], "max_depth": [2, 4]})
    assert grid_search("forest", g, X, y, 3, seed=5) == grid_search("forest", g, X, y, 3, seed=5)


@pytest.mark.parametrize("name,grid", [
    ("knn", {"k": [1, 3, 5, 7]}),
    ("forest", {"n_trees": [3, 7], "max_depth": [2, None, 4]}),
    ("gbt", {"rounds": [2, 5], "learning_rate": [0.1, 0.3], "max_depth": [2, 3]}),
])
def test_sweep_equals_naive(name, grid):
    X, y = _blobs(spread=2.0, seed=8)
    Q = np.random.default_rng(2).normal(scale=3, size=(30, 5))
    fam = FAMILIES[name]
    points = ParamGrid(grid).points()
    fast = fam.sweep(points, X, y, Q, 17)
    slow = sweep_naive(fam, points, X, y, Q, 17)
    for a, b in zip(fast, slow):
        assert np.array_equal(a, b)


# -- persistence -----------------------------------------------------------

@pytest.mark.parametrize("name,params", [
    ("knn", {"k": 3}),
    ("forest", {"n_trees": 4, "max_depth": 5}),
    ("gbt", {"rounds": 4, "learning_rate": 0.3, "max_depth": 2}),
])
def test_model_round_trip(tmp_path, name, params):
    X, y = _blobs(spread=2.0, seed=9)
    fam = FAMILIES[name]
    model = fam.fit(X, y, params, 11)
    norm = Normalizer(np.zeros(5), np.ones(5))
    save_model(tmp_path / "m.json", model, params, 11, norm, {"fold": 0})
    back, rec = load_model(tmp_path / "m.json")
    Q = np.random.default_rng(3).normal(scale=3, size=(60, 5))
    assert np.array_equal(fam.predict(model, Q), fam.predict(back, Q))
    assert rec["family"] == name and rec["params"] == params and rec["seed"] == 11
    assert rec["meta"] == {"fold": 0}
    np.testing.assert_array_equal(rec["normalizer"].maxs, norm.maxs)


def test_model_load_errors(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_model(p)
    p.write_text('{"format": "something-else"}')
    with pytest.raises(ParseError):
        load_model(p)
