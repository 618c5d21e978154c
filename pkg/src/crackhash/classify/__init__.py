"""Crack classifiers over hash feature vectors.

All models share a small fit / predict_proba / predict surface so the
evaluation harness can treat them uniformly. ``predict_proba`` returns the
probability of the cracked class (label 1); labels are ``proba >= 0.5``.
"""
from __future__ import annotations

import numpy as np

from .baselines import GaussianNB, KNeighbors, MajorityClass, Standardizer, knn_predict, train_gnb
from .forest import Forest, ForestParams, derive_seed, splitmix64, train_forest
from .tree import Split, Tree, TreeError, TreeParams, best_split, build_tree, gini

__all__ = [
    "GaussianNB", "KNeighbors", "MajorityClass", "Standardizer", "knn_predict", "train_gnb",
    "Forest", "ForestParams", "derive_seed", "splitmix64", "train_forest",
    "Split", "Tree", "TreeError", "TreeParams", "best_split", "build_tree", "gini",
    "RandomForest", "DecisionTree", "NaiveBayes", "MODEL_KINDS", "make_model",
]


class RandomForest:
    def __init__(self, params: ForestParams = ForestParams(), seed: int = 42, workers: int = 1):
        self.params = params
        self.seed = seed
        self.workers = workers

    def fit(self, X, y) -> "RandomForest":
        self.forest_ = train_forest(X, y, self.params, self.seed, self.workers)
        return self

    def predict_proba(self, X) -> np.ndarray:
        return self.forest_.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return self.forest_.predict(X)


class DecisionTree:
    """Single CART tree searching every feature at every node."""

    def __init__(self, params: TreeParams = TreeParams(), seed: int = 42):
        self.params = params
        self.seed = seed

    def fit(self, X, y) -> "DecisionTree":
        self.tree_ = build_tree(X, y, self.params, derive_seed(self.seed, 0))
        return self

    def predict_proba(self, X) -> np.ndarray:
        return self.tree_.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return self.tree_.predict(X)


class NaiveBayes:
    def __init__(self, standardize: bool = True):
        self.standardize = standardize

    def fit(self, X, y) -> "NaiveBayes":
        self.model_ = train_gnb(X, y, self.standardize)
        return self

    def predict_proba(self, X) -> np.ndarray:
        return self.model_.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return self.model_.predict(X)


MODEL_KINDS = {
    "rf": "Random Forest",
    "dt": "Decision Tree",
    "knn": "KNeighbors",
    "gnb": "Gaussian Naive-Bayes",
    "majority": "Majority class",
}


def make_model(kind: str, params: dict | None = None, seed: int = 42, workers: int = 1):
    """Unfitted model of the given kind. ``params`` holds kind-specific settings."""
    params = dict(params or {})
    if kind == "rf":
        return RandomForest(ForestParams(**params), seed, workers)
    if kind == "dt":
        return DecisionTree(TreeParams(**params), seed)
    if kind == "knn":
        return KNeighbors(**params)
    if kind == "gnb":
        return NaiveBayes(**params)
    if kind == "majority":
        return MajorityClass()
    raise ValueError(f"unknown model kind {kind!r}; choose from {sorted(MODEL_KINDS)}")
