"""Random forest of CART trees with order-independent, seeded training."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .tree import Tree, TreeError, TreeParams, build_tree

__all__ = [
    "ForestParams",
    "Forest",
    "derive_seed",
    "splitmix64",
    "train_forest",
    "FORMAT_NAME",
    "FORMAT_VERSION",
]

FORMAT_NAME = "crackhash-forest"
FORMAT_VERSION = 1

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """SplitMix64 output function (Steele, Lea and Flood) applied to ``state``."""
    z = state & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """The ``index``-th output of a SplitMix64 stream started at ``seed``."""
    return splitmix64((seed + (index + 1) * _GOLDEN) & _MASK)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: int | None = None  # None: floor(sqrt(n_features)), i.e. 3 for 10 features
    min_samples_leaf: int = 1
    max_depth: int | None = None
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise TreeError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_features is not None and self.max_features < 1:
            raise TreeError(f"max_features must be >= 1, got {self.max_features}")
        if self.min_samples_leaf < 1:
            raise TreeError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise TreeError("max_depth must be >= 1")

    def resolved_max_features(self, n_features: int) -> int:
        mf = self.max_features if self.max_features is not None else max(1, math.isqrt(n_features))
        if mf > n_features:
            raise TreeError(f"max_features={mf} exceeds the {n_features} available features")
        return mf

    def tree_params(self, n_features: int) -> TreeParams:
        return TreeParams(self.resolved_max_features(n_features), self.min_samples_leaf, self.max_depth)


@dataclass(eq=False)
class Forest:
    trees: list[Tree]
    params: ForestParams
    train_seed: int
    n_features: int
    meta: dict = field(default_factory=dict)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Mean over trees of the class-1 fraction in the reached leaf."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "params": asdict(self.params),
            "train_seed": self.train_seed,
            "n_features": self.n_features,
            "meta": self.meta,
            "trees": [t.rows() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, doc: dict) -> "Forest":
        if doc.get("format") != FORMAT_NAME:
            raise TreeError(f"not a forest model file (format={doc.get('format')!r})")
        if doc.get("version") != FORMAT_VERSION:
            raise TreeError(f"unsupported forest format version {doc.get('version')}")
        params = ForestParams(**doc["params"])
        trees = [Tree.from_rows(rows) for rows in doc["trees"]]
        if len(trees) != params.n_trees:
            raise TreeError(f"model declares {params.n_trees} trees but stores {len(trees)}")
        return cls(trees, params, int(doc["train_seed"]), int(doc["n_features"]), doc.get("meta", {}))

    @classmethod
    def loads(cls, text: str) -> "Forest":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "Forest":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def __eq__(self, other):
        if not isinstance(other, Forest):
            return NotImplemented
        return self.dumps() == other.dumps()


# worker-process state, set once per pool by _init_worker
_SHARED: dict = {}


def _init_worker(X, y, params, seed):
    _SHARED.update(X=X, y=y, params=params, seed=seed)


def _fit_tree(index: int, X=None, y=None, params=None, seed=None) -> Tree:
    if X is None:
        X, y, params, seed = _SHARED["X"], _SHARED["y"], _SHARED["params"], _SHARED["seed"]
    rng = np.random.default_rng(derive_seed(seed, index))
    if params.bootstrap:
        rows = rng.integers(0, y.size, size=y.size)
        X, y = X[rows], y[rows]
    return build_tree(X, y, params.tree_params(X.shape[1]), rng)


def train_forest(X: np.ndarray, y: np.ndarray, params: ForestParams = ForestParams(),
                 seed: int = 42, workers: int = 1) -> Forest:
    """Fit ``params.n_trees`` trees; tree t depends only on (X, y, params, seed, t)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TreeError("train_forest needs at least two samples")
    if not (np.any(y == 0) and np.any(y == 1)):
        raise TreeError("train_forest needs both classes present")
    params.resolved_max_features(X.shape[1])
    seed = int(seed) & _MASK
    if workers > 1 and params.n_trees > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(X, y, params, seed)) as ex:
            chunk = max(1, params.n_trees // (4 * workers))
            trees = list(ex.map(_fit_tree, range(params.n_trees), chunksize=chunk))
    else:
        trees = [_fit_tree(t, X, y, params, seed) for t in range(params.n_trees)]
    return Forest(trees, params, seed, X.shape[1])
