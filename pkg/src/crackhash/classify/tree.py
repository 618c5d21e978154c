"""Binary CART trees with Gini impurity.

Split scores are compared as correctly rounded quotients of exact integers,
so splits that tie in exact arithmetic also tie in floating point and the
documented tie-breaking rule (lower feature index, then lower threshold)
decides them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["gini", "Split", "best_split", "Tree", "TreeParams", "build_tree"]


class TreeError(ValueError):
    pass


def gini(counts) -> float:
    """1 - sum(p_i^2) over the class proportions of ``counts``."""
    counts = [int(c) for c in counts]
    total = sum(counts)
    if total <= 0 or any(c < 0 for c in counts):
        raise TreeError(f"gini needs non-negative counts with a positive total, got {counts}")
    return 1.0 - sum(c * c for c in counts) / (total * total)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    impurity: float  # weighted Gini of the two children


def _midpoint(lo: float, hi: float) -> float:
    # one rounding in the sum, halving is exact: the correctly rounded midpoint
    mid = (lo + hi) / 2.0
    if not math.isfinite(mid):
        mid = lo / 2.0 + hi / 2.0
    # samples go left iff x <= threshold, so the threshold must sit in [lo, hi)
    if not lo <= mid < hi:
        mid = lo
    return float(mid)


def best_split(X: np.ndarray, y: np.ndarray, features=None, min_samples_leaf: int = 1) -> Split | None:
    """Exhaustive Gini split search over midpoints of consecutive distinct values.

    Returns None when no candidate strictly lowers the impurity of the node.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    if n < 2:
        return None
    if features is None:
        features = range(X.shape[1])
    n1 = int(y.sum())
    n0 = n - n1
    # maximizing sum over children of (c0^2 + c1^2) / size minimizes weighted Gini
    best_score = (n0 * n0 + n1 * n1) / n
    best = None
    n_left = np.arange(1, n, dtype=np.int64)
    n_right = n - n_left
    size_ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    for f in sorted(int(f) for f in features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = size_ok & (xs[1:] > xs[:-1])
        if not valid.any():
            continue
        a1 = np.cumsum(y[order])[:-1]
        a0 = n_left - a1
        b1 = n1 - a1
        b0 = n_right - b1
        num = (a0 * a0 + a1 * a1) * n_right + (b0 * b0 + b1 * b1) * n_left
        score = num.astype(np.float64) / (n_left * n_right).astype(np.float64)
        score[~valid] = -np.inf
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            den = int(n_left[i] * n_right[i]) * n
            best = (f, _midpoint(float(xs[i]), float(xs[i + 1])), den - int(num[i]), den)
    if best is None:
        return None
    # weighted Gini = 1 - num / (n * n_left * n_right), one exact integer ratio
    return Split(best[0], best[1], best[2] / best[3])


@dataclass(frozen=True)
class TreeParams:
    max_features: int | None = None  # None: all features
    min_samples_leaf: int = 1
    max_depth: int | None = None


@dataclass(eq=False)
class Tree:
    """Fitted tree as flat preorder arrays. ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) class counts reaching each node

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        rows = np.arange(X.shape[0])
        while active.any():
            idx = node[active]
            go_left = X[rows[active], self.feature[idx]] <= self.threshold[idx]
            node[active] = np.where(go_left, self.left[idx], self.right[idx])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Fraction of class-1 training samples in the leaf reached by each row."""
        c = self.counts[self.leaf_index(X)]
        return c[:, 1] / (c[:, 0] + c[:, 1])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def rows(self) -> list[list]:
        """Preorder node list: [feature, threshold, n0, n1]; leaves carry feature -1."""
        out = []
        for i in range(self.n_nodes):
            f = int(self.feature[i])
            thr = float(self.threshold[i]) if f >= 0 else None
            out.append([f, thr, int(self.counts[i, 0]), int(self.counts[i, 1])])
        return out

    @classmethod
    def from_rows(cls, rows) -> "Tree":
        """Rebuild child links from a preorder node list."""
        n = len(rows)
        if n == 0:
            raise TreeError("empty node list")
        feature = np.array([r[0] for r in rows], dtype=np.int64)
        threshold = np.array([r[1] if r[0] >= 0 else 0.0 for r in rows], dtype=np.float64)
        counts = np.array([[r[2], r[3]] for r in rows], dtype=np.int64)
        left = np.full(n, -1, dtype=np.int64)
        right = np.full(n, -1, dtype=np.int64)
        pending = []  # internal nodes still waiting for their right child
        for i in range(1, n):
            parent = i - 1
            if feature[parent] >= 0:
                left[parent] = i
                pending.append(parent)
            else:
                if not pending:
                    raise TreeError("malformed preorder node list")
                right[pending.pop()] = i
        if pending:
            raise TreeError("malformed preorder node list: missing right subtree")
        return cls(feature, threshold, left, right, counts)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return self.rows() == other.rows()


def build_tree(X: np.ndarray, y: np.ndarray, params: TreeParams = TreeParams(), rng_seed=None) -> Tree:
    """Grow a CART tree depth-first, left subtree before right.

    At every node ``max_features`` candidate features are drawn without
    replacement from a generator seeded by ``rng_seed`` (an int or an
    existing ``numpy.random.Generator``), so the tree is a pure function of
    (X, y, params, seed).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise TreeError("build_tree needs at least one sample")
    if y.shape != (X.shape[0],) or np.any((y != 0) & (y != 1)):
        raise TreeError("labels must be a 0/1 vector matching the rows of X")
    d = X.shape[1]
    mf = d if params.max_features is None else params.max_features
    if not 1 <= mf <= d:
        raise TreeError(f"max_features must lie in [1, {d}], got {mf}")
    msl = max(1, params.min_samples_leaf)
    rng = np.random.default_rng(rng_seed)

    feature, threshold, left, right, counts = [], [], [], [], []
    # (sample indices, depth, parent node, is-left-child); LIFO gives preorder
    stack = [(np.arange(X.shape[0]), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        yi = y[idx]
        c1 = int(yi.sum())
        c0 = yi.size - c1
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((c0, c1))

        if c0 == 0 or c1 == 0 or idx.size < 2 * msl:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        cand = range(d) if mf == d else rng.choice(d, size=mf, replace=False)
        split = best_split(X[idx], yi, cand, msl)
        if split is None:
            continue
        feature[node] = split.feature
        threshold[node] = split.threshold
        go_left = X[idx, split.feature] <= split.threshold
        stack.append((idx[~go_left], depth + 1, node, False))
        stack.append((idx[go_left], depth + 1, node, True))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, 2),
    )
