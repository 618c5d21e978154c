"""Validation protocol: stratified k-fold CV, confusion/metrics, ROC/AUC and
sequential forward feature selection. Cracked (label 1) is the positive class.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .classify import make_model

__all__ = [
    "ConfusionMatrix",
    "Metrics",
    "RocCurve",
    "CVResult",
    "SelectionResult",
    "stratified_kfold",
    "cross_validate",
    "confusion",
    "metrics",
    "roc",
    "mann_whitney_auc",
    "sequential_forward_selection",
]

log = logging.getLogger(__name__)

SELECTION_TOLERANCE = 1e-4


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_matrix(self) -> list[list[int]]:
        """[[tn, fp], [fn, tp]]: rows are true labels, columns predicted."""
        return [[self.tn, self.fp], [self.fn, self.tp]]


@dataclass(frozen=True)
class ClassReport:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    uncracked: ClassReport
    cracked: ClassReport
    macro: ClassReport
    weighted: ClassReport
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def points(self):
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))


@dataclass
class CVResult:
    model: str
    k: int
    seed: int
    fold_accuracies: list[float]
    fold_aucs: list[float | None]
    fold_sizes: list[int]
    rocs: list[RocCurve | None] = field(repr=False, default_factory=list)

    @property
    def mean(self) -> float:
        return math.fsum(self.fold_accuracies) / len(self.fold_accuracies)

    @property
    def std(self) -> float:
        """Population standard deviation of the fold accuracies."""
        m = self.mean
        return math.sqrt(math.fsum((a - m) ** 2 for a in self.fold_accuracies) / len(self.fold_accuracies))

    @property
    def mean_auc(self) -> float | None:
        aucs = [a for a in self.fold_aucs if a is not None]
        return math.fsum(aucs) / len(aucs) if aucs else None

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "k": self.k,
            "seed": self.seed,
            "mean_accuracy": self.mean,
            "std_accuracy": self.std,
            "mean_auc": self.mean_auc,
            "folds": [
                {"fold": i, "size": s, "accuracy": a, "auc": u}
                for i, (s, a, u) in enumerate(zip(self.fold_sizes, self.fold_accuracies, self.fold_aucs))
            ],
        }


def stratified_kfold(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Partition sample indices into ``k`` folds preserving class proportions.

    Each class is shuffled with a generator seeded by ``seed`` and dealt
    round-robin; the second class continues where the first stopped so the
    fold sizes differ by at most one. Indices within a fold are sorted.
    """
    y = np.asarray(y, dtype=np.int64)
    if k < 2:
        raise EvalError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=np.int64)
    offset = 0
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        if idx.size == 0:
            continue
        if idx.size < k:
            raise EvalError(f"class {c} has {idx.size} samples, fewer than k={k}")
        idx = rng.permutation(idx)
        assignment[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return [np.flatnonzero(assignment == f) for f in range(k)]


def confusion(pred, true) -> ConfusionMatrix:
    pred = np.asarray(pred, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if pred.shape != true.shape:
        raise EvalError(f"length mismatch: {pred.size} predictions for {true.size} labels")
    if pred.size == 0:
        raise EvalError("cannot build a confusion matrix from zero samples")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (true == 1))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        tn=int(np.sum((pred == 0) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
    )


def _ratio(num: int, den: int, what: str, warnings: list) -> float:
    if den == 0:
        warnings.append(f"{what} undefined (zero denominator), reported as 0")
        return 0.0
    return num / den


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total <= 0:
        raise EvalError("metrics need at least one sample")
    warnings: list[str] = []
    p1 = _ratio(cm.tp, cm.tp + cm.fp, "precision (cracked)", warnings)
    r1 = _ratio(cm.tp, cm.tp + cm.fn, "recall (cracked)", warnings)
    p0 = _ratio(cm.tn, cm.tn + cm.fn, "precision (uncracked)", warnings)
    r0 = _ratio(cm.tn, cm.tn + cm.fp, "recall (uncracked)", warnings)
    cracked = ClassReport(p1, r1, _f1(p1, r1), cm.tp + cm.fn)
    uncracked = ClassReport(p0, r0, _f1(p0, r0), cm.tn + cm.fp)
    macro = ClassReport((p0 + p1) / 2, (r0 + r1) / 2, (uncracked.f1 + cracked.f1) / 2, cm.total)
    w0, w1 = uncracked.support / cm.total, cracked.support / cm.total
    weighted = ClassReport(w0 * p0 + w1 * p1, w0 * r0 + w1 * r1, w0 * uncracked.f1 + w1 * cracked.f1, cm.total)
    for msg in warnings:
        log.warning(msg)
    return Metrics((cm.tp + cm.tn) / cm.total, uncracked, cracked, macro, weighted, tuple(warnings))


def roc(scores, labels) -> RocCurve:
    """ROC over every distinct score, plus a leading +inf sentinel at (0, 0).

    A sample counts as positive at threshold t when its score is >= t, so
    tied scores enter the curve together. AUC is the trapezoidal area,
    accumulated in integer counts so it is exact up to the final division.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise EvalError("scores and labels differ in length")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise EvalError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lab = labels[order]
    tp = np.cumsum(lab == 1)
    fp = np.cumsum(lab == 0)
    # last position of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    thresholds = np.r_[np.inf, s[ends]]
    tps = np.r_[0, tp[ends]]
    fps = np.r_[0, fp[ends]]
    tpr = tps / n_pos
    fpr = fps / n_neg
    # trapezoids in integer counts, then one division: the area is correctly rounded
    twice_area = int(np.sum(np.diff(fps) * (tps[1:] + tps[:-1])))
    auc = twice_area / (2 * n_pos * n_neg)
    return RocCurve(thresholds, fpr, tpr, auc)


def mann_whitney_auc(scores, labels) -> float:
    """P(score_pos > score_neg) + P(tie) / 2 via the rank-sum statistic."""
    from scipy.stats import rankdata

    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def cross_validate(model_kind: str, params: dict | None, X: np.ndarray, y: np.ndarray,
                   k: int = 10, seed: int = 42, workers: int = 1) -> CVResult:
    """Train on k-1 folds, score accuracy and ROC on the held-out fold.

    Every fold model is seeded with ``seed``; the fold split uses ``seed`` too.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_kfold(y, k, seed)
    accs, aucs, sizes, rocs = [], [], [], []
    for f, test in enumerate(folds):
        train = np.setdiff1d(np.arange(y.size), test, assume_unique=True)
        model = make_model(model_kind, params, seed, workers).fit(X[train], y[train])
        proba = model.predict_proba(X[test])
        pred = (proba >= 0.5).astype(np.int64)
        accs.append(float(np.mean(pred == y[test])))
        sizes.append(int(test.size))
        if 0 < y[test].sum() < test.size:
            curve = roc(proba, y[test])
            rocs.append(curve)
            aucs.append(curve.auc)
        else:
            rocs.append(None)
            aucs.append(None)
        log.info("%s fold %d/%d: accuracy %.4f", model_kind, f + 1, k, accs[-1])
    return CVResult(model_kind, k, seed, accs, aucs, sizes, rocs)


@dataclass
class SelectionResult:
    selected: list[int]
    history: list[dict]  # one entry per step: added feature and mean CV accuracy
    baseline_accuracy: float

    def to_dict(self) -> dict:
        return {"selected": self.selected, "history": self.history, "baseline_accuracy": self.baseline_accuracy}


def sequential_forward_selection(X: np.ndarray, y: np.ndarray, k: int = 10, seed: int = 42,
                                 model_kind: str = "rf", params: dict | None = None,
                                 tolerance: float = SELECTION_TOLERANCE, workers: int = 1,
                                 feature_names=None) -> SelectionResult:
    """Greedy forward selection by mean k-fold CV accuracy.

    The empty subset scores the majority-class predictor on the same folds.
    Each step adds the feature with the best mean accuracy (ties to the lower
    index); selection stops once the best addition gains ``tolerance`` or less.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    d = X.shape[1]
    if d < 1:
        raise EvalError("feature selection needs at least one feature")
    current = cross_validate("majority", None, X[:, :1], y, k, seed).mean
    baseline = current
    selected: list[int] = []
    history: list[dict] = []
    while len(selected) < d:
        best_f, best_acc = None, -math.inf
        for f in range(d):
            if f in selected:
                continue
            cols = selected + [f]
            acc = cross_validate(model_kind, params, X[:, cols], y, k, seed, workers).mean
            if acc > best_acc:
                best_f, best_acc = f, acc
        if best_acc - current <= tolerance:
            break
        selected.append(best_f)
        current = best_acc
        name = feature_names[best_f] if feature_names is not None else None
        history.append({"step": len(selected), "feature": best_f, "name": name, "mean_accuracy": best_acc})
        log.info("selected feature %s (mean accuracy %.4f)", name or best_f, best_acc)
    return SelectionResult(selected, history, baseline)
