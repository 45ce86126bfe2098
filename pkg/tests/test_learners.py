import itertools

import numpy as np
import pytest

from evofeat import learners
from evofeat.dataset import Dataset, Task, make_folds
from evofeat.learners import (CrossValidator, LearnerSpec, RFParams, cross_val_error, fit, fit_arrays,
                              macro_f1, mse, predict, r2)


def oracle_macro_f1(pred, truth, n_classes):
    """Confusion counts by explicit enumeration; any 0/0 gives 0."""
    scores = []
    for c in range(n_classes):
        tp = sum(1 for p, t in zip(pred, truth) if p == c and t == c)
        fp = sum(1 for p, t in zip(pred, truth) if p == c and t != c)
        fn = sum(1 for p, t in zip(pred, truth) if p != c and t == c)
        prec = tp / (tp + fp) if tp + fp else None
        rec = tp / (tp + fn) if tp + fn else None
        if prec is None or rec is None or prec + rec == 0:
            scores.append(0.0)
        else:
            scores.append(2 * prec * rec / (prec + rec))
    return sum(scores) / n_classes


def test_macro_f1_examples():
    assert macro_f1([0, 1, 2], [0, 1, 2], 3) == 1.0
    assert macro_f1([0, 1, 0, 1], [0, 0, 1, 1], 2) == 0.5
    # class 2 in truth but never predicted contributes 0
    assert macro_f1([0, 1, 1], [0, 1, 2], 3) == pytest.approx((1 + 2 / 3 + 0) / 3)


def test_macro_f1_matches_oracle(rng):
    for _ in range(200):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 12))
        pred, truth = rng.integers(0, k, n), rng.integers(0, k, n)
        assert abs(macro_f1(pred, truth, k) - oracle_macro_f1(pred, truth, k)) <= 1e-12


def test_macro_f1_errors():
    with pytest.raises(ValueError):
        macro_f1([], [], 2)


def test_mse_r2_examples():
    assert mse([1, 2], [1, 2]) == 0 and r2([1, 2], [1, 2]) == 1
    assert mse([1, 1], [0, 2]) == 1 and r2([1, 1], [0, 2]) == 0
    t = np.array([1.0, 4.0, 2.0, 9.0])
    assert r2(np.full(4, t.mean()), t) == 0.0
    with pytest.raises(ValueError):
        r2([1, 1], [3, 3])
    with pytest.raises(ValueError):
        r2([1], [1])


def test_gnb_separable():
    X = np.array([[0.0], [0.1], [-0.1], [10.0], [10.2], [9.9]])
    y = np.array([0, 0, 0, 1, 1, 1])
    m = fit_arrays(LearnerSpec("gnb"), X, y, Task.CLASSIFICATION, 2)
    np.testing.assert_array_equal(m.predict(X), y)


def test_gnb_tie_goes_to_lowest_class():
    X = np.array([[0.0], [1.0], [0.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    m = fit_arrays(LearnerSpec("gnb"), X, y, Task.CLASSIFICATION, 2)
    assert m.predict(np.array([[0.5]]))[0] == 0


def test_gnb_absent_class_never_predicted():
    X = np.array([[0.0], [1.0], [5.0], [6.0]])
    y = np.array([0, 0, 2, 2])
    m = fit_arrays(LearnerSpec("gnb"), X, y, Task.CLASSIFICATION, 3)
    assert np.exp(m.log_prior[1]) == 0
    assert 1 not in set(m.predict(np.linspace(-5, 10, 40)[:, None]).tolist())


def test_gnb_constant_feature_smoothing():
    X = np.ones((6, 2))
    X[:, 1] = [0, 0, 0, 1, 1, 1]
    y = np.array([0, 0, 0, 1, 1, 1])
    m = fit_arrays(LearnerSpec("gnb"), X, y, Task.CLASSIFICATION, 2)
    assert np.all(m.vars > 0)
    np.testing.assert_array_equal(m.predict(X), y)


def test_ols_exact_recovery():
    X = np.arange(1.0, 6.0)[:, None]
    m = fit_arrays(LearnerSpec("ols"), X, 2 * X[:, 0], Task.REGRESSION)
    assert abs(m.predict(np.array([[3.0]]))[0] - 6.0) < 1e-9
    assert not m.used_ridge


def test_ols_collinear_ridge(rng):
    x = rng.normal(size=30)
    X = np.column_stack([x, x])
    m = fit_arrays(LearnerSpec("ols"), X, 3 * x, Task.REGRESSION)
    assert m.used_ridge and np.all(np.isfinite(m.coef))
    np.testing.assert_allclose(m.predict(X), 3 * x, atol=1e-6)


def test_ols_noiseless_linear(rng):
    X = rng.normal(size=(20, 4))
    y = X @ np.array([1.5, -2.0, 0.25, 4.0]) + 7
    m = fit_arrays(LearnerSpec("ols"), X, y, Task.REGRESSION)
    np.testing.assert_allclose(m.predict(X), y, rtol=1e-8)


def test_predict_column_mismatch(rng):
    X = rng.normal(size=(20, 3))
    for spec, y, task in [(LearnerSpec("ols"), X[:, 0], Task.REGRESSION),
                          (LearnerSpec("cart"), (X[:, 0] > 0).astype(int), Task.CLASSIFICATION)]:
        m = fit_arrays(spec, X, y, task, 2)
        with pytest.raises(ValueError):
            predict(m, X[:, :2])


def test_task_compatibility():
    reg = Dataset(np.ones((3, 1)), [1.0, 2.0, 3.0], Task.REGRESSION)
    clf = Dataset(np.ones((3, 1)), [0, 1, 0], Task.CLASSIFICATION)
    with pytest.raises(ValueError):
        fit(LearnerSpec("gnb"), reg)
    with pytest.raises(ValueError):
        fit(LearnerSpec("ols"), clf)


def test_cart_zero_training_error_on_distinct_rows(rng):
    X = rng.normal(size=(60, 3))
    y = rng.integers(0, 3, 60)
    m = fit_arrays(LearnerSpec("cart"), X, y, Task.CLASSIFICATION, 3)
    np.testing.assert_array_equal(m.predict(X), y)


def test_cart_midpoint_threshold():
    X = np.array([[1.0], [2.0], [4.0], [8.0]])
    y = np.array([0, 0, 1, 1])
    m = fit_arrays(LearnerSpec("cart"), X, y, Task.CLASSIFICATION, 2)
    assert m.threshold[0] == 3.0 and m.feature[0] == 0


def test_cart_tie_prefers_lowest_feature():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    m = fit_arrays(LearnerSpec("cart"), X, y, Task.CLASSIFICATION, 2)
    assert m.feature[0] == 0


def test_cart_regression_min_node(rng):
    X = rng.normal(size=(40, 2))
    y = rng.normal(size=40)
    m = fit_arrays(LearnerSpec("cart"), X, y, Task.REGRESSION)
    reach = np.zeros(len(m.feature), dtype=int)
    for row in X:
        node = 0
        while True:
            reach[node] += 1
            if m.feature[node] < 0:
                break
            node = m.left[node] if row[m.feature[node]] <= m.threshold[node] else m.right[node]
    internal = m.feature >= 0
    # only nodes with more than 5 rows are split; larger leaves cannot exist on distinct rows
    assert np.all(reach[internal] > 5)
    assert np.all(reach[~internal] <= 5)


def test_rf_mtry_rule():
    p = RFParams()
    assert p.resolve_mtry(9, True) == 3 and p.resolve_mtry(10, True) == 3
    assert p.resolve_mtry(9, False) == 3 and p.resolve_mtry(2, False) == 1
    assert p.resolve_min_node(True) == 1 and p.resolve_min_node(False) == 5


def test_rf_deterministic_and_mean(rng):
    X = rng.normal(size=(50, 4))
    y = X[:, 0] + rng.normal(scale=0.1, size=50)
    spec = LearnerSpec("rf", RFParams(n_trees=10), seed=3)
    a = fit_arrays(spec, X, y, Task.REGRESSION)
    b = fit_arrays(spec, X, y, Task.REGRESSION)
    np.testing.assert_array_equal(a.predict(X), b.predict(X))
    np.testing.assert_allclose(a.predict(X), np.mean([t.predict(X) for t in a.trees], axis=0))


def test_rf_majority_vote(rng):
    X = rng.normal(size=(50, 4))
    y = (X[:, 1] > 0).astype(int)
    m = fit_arrays(LearnerSpec("rf", RFParams(n_trees=15), seed=1), X, y, Task.CLASSIFICATION, 2)
    votes = np.stack([t.predict(X) for t in m.trees])
    want = (votes.sum(axis=0) * 2 > len(m.trees)).astype(int)
    np.testing.assert_array_equal(m.predict(X), want)


def test_cv_constant_target_ols():
    ds = Dataset(np.arange(20.0)[:, None], np.full(20, 4.0), Task.REGRESSION)
    assert cross_val_error(LearnerSpec("ols"), ds, make_folds(ds, 5, 0)) == pytest.approx(0.0, abs=1e-20)


def test_cv_is_mean_of_fold_errors(rng):
    X = rng.normal(size=(30, 2))
    y = X[:, 0] * 2 + rng.normal(size=30)
    ds = Dataset(X, y, Task.REGRESSION)
    folds = make_folds(ds, 2, 4)
    errs = []
    for c in range(2):
        tr, va = folds.fold_rows(c)
        m = fit_arrays(LearnerSpec("ols"), X[tr], y[tr], Task.REGRESSION)
        errs.append(mse(m.predict(X[va]), y[va]))
    assert cross_val_error(LearnerSpec("ols"), ds, folds) == pytest.approx(np.mean(errs), rel=1e-14)


def test_cv_separable_gnb(rng):
    X = np.concatenate([rng.normal(-10, 1, size=(40, 2)), rng.normal(10, 1, size=(40, 2))])
    y = np.repeat([0, 1], 40)
    ds = Dataset(X, y, Task.CLASSIFICATION)
    assert cross_val_error(LearnerSpec("gnb"), ds, make_folds(ds, 5, 0)) == 0.0


def test_cv_rejects_foreign_folds(xor_data):
    other = Dataset(np.ones((10, 1)), np.arange(10) % 2, Task.CLASSIFICATION)
    with pytest.raises(ValueError):
        cross_val_error(LearnerSpec("gnb"), xor_data, make_folds(other, 2, 0))
