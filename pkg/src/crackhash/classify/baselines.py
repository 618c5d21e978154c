"""Baseline classifiers: Gaussian naive Bayes, k-nearest neighbours, majority class.

Hash features are floats of magnitude up to 2**64, so both baselines work on
features z-scored with the training means and population standard deviations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "Standardizer",
    "GaussianNB",
    "train_gnb",
    "knn_neighbors",
    "knn_predict",
    "KNeighbors",
    "MajorityClass",
]


class BaselineError(ValueError):
    pass


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (X.shape[0],):
        raise BaselineError("labels must be a vector matching the rows of X")
    if np.any((y != 0) & (y != 1)):
        raise BaselineError("labels must be 0 or 1")
    return X, y


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        return cls(mean, np.where(std > 0, std, 1.0))

    @classmethod
    def identity(cls, n_features: int) -> "Standardizer":
        return cls(np.zeros(n_features), np.ones(n_features))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


@dataclass(frozen=True)
class GaussianNB:
    means: np.ndarray      # (2, d)
    variances: np.ndarray  # (2, d)
    priors: np.ndarray     # (2,)
    scaler: Standardizer

    def log_posterior(self, X: np.ndarray) -> np.ndarray:
        """Unnormalized log P(class) + sum_j log N(x_j | mean, var), shape (n, 2)."""
        Z = self.scaler.transform(np.atleast_2d(X))
        out = np.empty((Z.shape[0], 2))
        for c in (0, 1):
            var = self.variances[c]
            ll = -0.5 * np.log(2.0 * np.pi * var) - (Z - self.means[c]) ** 2 / (2.0 * var)
            out[:, c] = np.log(self.priors[c]) + ll.sum(axis=1)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        lp = self.log_posterior(X)
        return np.exp(lp[:, 1] - logsumexp(lp, axis=1))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def train_gnb(X: np.ndarray, y: np.ndarray, standardize: bool = True,
              var_smoothing: float = 1e-9) -> GaussianNB:
    """Per-class maximum-likelihood Gaussians, variances floored at
    ``var_smoothing`` times the largest per-feature variance."""
    X, y = _check_xy(X, y)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise BaselineError("Gaussian NB needs both classes present")
    scaler = Standardizer.fit(X) if standardize else Standardizer.identity(X.shape[1])
    Z = scaler.transform(X)
    floor = var_smoothing * float(Z.var(axis=0).max())
    if floor <= 0:
        floor = var_smoothing
    means = np.stack([Z[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.maximum(np.stack([Z[y == c].var(axis=0) for c in (0, 1)]), floor)
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return GaussianNB(means, variances, priors, scaler)


def knn_neighbors(train: np.ndarray, queries: np.ndarray, k: int, chunk: int = 64) -> np.ndarray:
    """Indices of the k nearest training rows per query, nearest first.

    Equal distances are ordered by lower training index.
    """
    n = train.shape[0]
    if not 1 <= k <= n:
        raise BaselineError(f"k must lie in [1, {n}], got {k}")
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        d2 = ((q[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
        for r in range(d2.shape[0]):
            out[start + r] = np.argsort(d2[r], kind="stable")[:k]
    return out


def knn_predict(X_train: np.ndarray, y_train: np.ndarray, x: np.ndarray, k: int = 5) -> int:
    """Majority label of the k nearest standardized neighbours; vote ties go to class 1."""
    return int(KNeighbors(k).fit(X_train, y_train).predict(np.atleast_2d(x))[0])


class KNeighbors:
    def __init__(self, k: int = 5):
        if k < 1:
            raise BaselineError(f"k must be >= 1, got {k}")
        self.k = k

    def fit(self, X, y) -> "KNeighbors":
        X, y = _check_xy(X, y)
        if self.k > X.shape[0]:
            raise BaselineError(f"k={self.k} exceeds the {X.shape[0]} training samples")
        self.scaler = Standardizer.fit(X)
        self.train_ = self.scaler.transform(X)
        self.labels_ = y
        return self

    def predict_proba(self, X) -> np.ndarray:
        Z = self.scaler.transform(np.atleast_2d(X))
        nn = knn_neighbors(self.train_, Z, self.k)
        return self.labels_[nn].mean(axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


class MajorityClass:
    """Predicts the training class frequency for every sample."""

    def fit(self, X, y) -> "MajorityClass":
        _, y = _check_xy(X, y)
        self.rate_ = float(y.mean())
        return self

    def predict_proba(self, X) -> np.ndarray:
        return np.full(np.atleast_2d(X).shape[0], self.rate_)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)
