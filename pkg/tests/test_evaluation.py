import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from crackhash.evaluation import (
    ConfusionMatrix,
    EvalError,
    confusion,
    cross_validate,
    mann_whitney_auc,
    metrics,
    roc,
    sequential_forward_selection,
    stratified_kfold,
)


def test_kfold_forced_stratification():
    y = np.array([0] * 10 + [1] * 10)
    folds = stratified_kfold(y, 10, seed=1)
    assert len(folds) == 10
    for f in folds:
        assert sorted(y[f].tolist()) == [0, 1]


@settings(max_examples=40, deadline=None)
@given(n0=st.integers(5, 60), n1=st.integers(5, 60), k=st.integers(2, 5), seed=st.integers(0, 10 ** 6))
def test_kfold_partition_and_balance(n0, n1, k, seed):
    y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    y = np.random.default_rng(seed).permutation(y)
    folds = stratified_kfold(y, k, seed)
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(y.size))
    for c, n in ((0, n0), (1, n1)):
        counts = [int(np.sum(y[f] == c)) for f in folds]
        assert max(counts) - min(counts) <= 1
        assert all(abs(cnt - n / k) < 1 for cnt in counts)
    sizes = [f.size for f in folds]
    assert max(sizes) - min(sizes) <= 1


def test_kfold_determinism():
    y = np.array([0, 1] * 25)
    a = stratified_kfold(y, 5, 7)
    b = stratified_kfold(y, 5, 7)
    c = stratified_kfold(y, 5, 8)
    assert all((x == z).all() for x, z in zip(a, b))
    assert any((x != z).any() for x, z in zip(a, c))


def test_kfold_errors():
    with pytest.raises(EvalError):
        stratified_kfold(np.array([0] * 10 + [1] * 3), 5, 0)
    with pytest.raises(EvalError):
        stratified_kfold(np.array([0, 1] * 5), 1, 0)


def test_confusion_examples():
    t = np.array([1] * 5 + [0] * 5)
    assert confusion(t, t) == ConfusionMatrix(tp=5, fp=0, tn=5, fn=0)
    assert confusion(np.ones(10, int), t) == ConfusionMatrix(tp=5, fp=5, tn=0, fn=0)
    assert confusion(1 - t, t) == ConfusionMatrix(tp=0, fp=5, tn=0, fn=5)
    with pytest.raises(EvalError):
        confusion(t[:3], t)


def test_metrics_examples():
    m = metrics(ConfusionMatrix(tp=50, fp=0, tn=50, fn=0))
    assert m.accuracy == 1.0 and m.macro.f1 == 1.0 and m.cracked.precision == 1.0 and not m.warnings
    m = metrics(ConfusionMatrix(tp=0, fp=0, tn=10, fn=10))
    assert m.cracked.recall == 0.0
    assert m.cracked.precision == 0.0
    assert any("precision (cracked)" in w for w in m.warnings)
    assert m.accuracy == 0.5


def test_metrics_per_class_and_averages():
    m = metrics(ConfusionMatrix(tp=8, fp=2, tn=6, fn=4))
    assert m.cracked.precision == 0.8 and m.cracked.recall == 8 / 12
    assert m.uncracked.precision == 0.6 and m.uncracked.recall == 0.75
    f1c = 2 * 0.8 * (8 / 12) / (0.8 + 8 / 12)
    assert m.cracked.f1 == pytest.approx(f1c)
    assert m.macro.precision == pytest.approx(0.7)
    assert m.weighted.recall == pytest.approx(m.accuracy)
    assert (m.cracked.support, m.uncracked.support) == (12, 8)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_metrics_bounds(tp, fp, tn, fn):
    if tp + fp + tn + fn == 0:
        return
    m = metrics(ConfusionMatrix(tp, fp, tn, fn))
    assert m.accuracy == (tp + tn) / (tp + fp + tn + fn)
    for r in (m.cracked, m.uncracked, m.macro, m.weighted):
        for v in (r.precision, r.recall, r.f1):
            assert 0.0 <= v <= 1.0 + 1e-12


def test_roc_examples():
    assert roc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]).auc == 1.0
    flat = roc([0.5] * 6, [1, 0, 1, 0, 1, 0])
    assert flat.auc == 0.5
    assert list(zip(flat.fpr, flat.tpr)) == [(0.0, 0.0), (1.0, 1.0)]
    with pytest.raises(EvalError):
        roc([0.1, 0.2], [1, 1])


def test_roc_eight_samples_against_pair_count():
    scores = [0.9, 0.4, 0.4, 0.7, 0.1, 0.4, 0.8, 0.3]
    labels = [1, 1, 0, 0, 0, 1, 1, 0]
    assert roc(scores, labels).auc == pytest.approx(oracles.pair_count_auc(scores, labels), abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(2, 30))
def test_roc_curve_shape(seed, n):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    scores = rng.integers(0, 5, n) / 4
    c = roc(scores, labels)
    assert (c.fpr[0], c.tpr[0]) == (0.0, 0.0) and (c.fpr[-1], c.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
    assert np.all(np.diff(c.thresholds) < 0)
    assert c.auc == pytest.approx(mann_whitney_auc(scores, labels), abs=1e-12)
    assert c.auc == pytest.approx(oracles.pair_count_auc(scores, labels), abs=1e-12)


def test_cv_constant_labels_with_majority():
    X = np.random.default_rng(0).normal(size=(30, 2))
    r = cross_validate("majority", None, X, np.ones(30, int), k=3, seed=0)
    assert r.fold_accuracies == [1.0, 1.0, 1.0]
    assert r.fold_aucs == [None, None, None]


def test_cv_separable_rf():
    X = np.array([[0.0], [0.1], [5.0], [5.1]])
    y = np.array([0, 0, 1, 1])
    r = cross_validate("rf", {"n_trees": 5}, X, y, k=2, seed=1)
    assert r.mean == 1.0 and r.k == 2


def test_cv_reproducible(rng):
    X = rng.normal(size=(60, 4))
    y = (X[:, 0] + rng.normal(size=60) > 0).astype(int)
    a = cross_validate("rf", {"n_trees": 6}, X, y, 5, 3)
    b = cross_validate("rf", {"n_trees": 6}, X, y, 5, 3, workers=2)
    assert a.to_dict() == b.to_dict()
    assert a.mean == pytest.approx(np.mean(a.fold_accuracies), abs=1e-12)
    assert all(0 <= v <= 1 for v in a.fold_accuracies)
    assert len(a.fold_accuracies) == 5


def test_selection_picks_informative_feature_first():
    rng = np.random.default_rng(0)
    n = 120
    y = np.r_[np.zeros(n // 2, int), np.ones(n // 2, int)]
    X = rng.normal(size=(n, 4))
    X[:, 2] = y * 3 + rng.normal(size=n) * 0.5
    res = sequential_forward_selection(X, y, k=4, seed=1, params={"n_trees": 10})
    assert res.selected[0] == 2
    accs = [h["mean_accuracy"] for h in res.history]
    assert accs == sorted(accs)


def test_selection_on_pure_noise_stops_early():
    rng = np.random.default_rng(7)
    n = 100
    y = np.r_[np.zeros(n // 2, int), np.ones(n // 2, int)]
    X = rng.normal(size=(n, 4))
    res = sequential_forward_selection(X, y, k=5, seed=42, params={"n_trees": 10})
    assert len(res.selected) <= 1
