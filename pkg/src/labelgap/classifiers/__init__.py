"""From-scratch classifiers: KNN, random forest, gradient-boosted trees."""
from .forest import ForestModel, forest_fit, forest_predict, forest_predict_batch
from .gbt import GbtModel, gbt_fit, gbt_predict, gbt_predict_batch
from .io import load_model, save_model
from .knn import KnnModel, knn_fit, knn_predict, knn_predict_batch
from .search import FAMILIES, Family, ParamGrid, SearchResult, get_family, grid_search
from .tree import DecisionTree, tree_fit, tree_predict

__all__ = [
    "DecisionTree", "tree_fit", "tree_predict",
    "KnnModel", "knn_fit", "knn_predict", "knn_predict_batch",
    "ForestModel", "forest_fit", "forest_predict", "forest_predict_batch",
    "GbtModel", "gbt_fit", "gbt_predict", "gbt_predict_batch",
    "ParamGrid", "Family", "FAMILIES", "SearchResult", "get_family", "grid_search",
    "save_model", "load_model",
]
