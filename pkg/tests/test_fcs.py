import math

import numpy as np
import pytest

from evofeat.dataset import Dataset, Task, make_folds, split_train_test
from evofeat.exprtree import Node, Op
from evofeat.fcs import (ConstructionError, FCSConfig, FeatureFitness, baseline_scores,
                         construct_features, evaluate_candidate)
from evofeat.learners import LearnerSpec
from evofeat.search import SearchConfig
from evofeat.semantics import Verdict

F = Op.FEATURE


def small_cfg(alg="gomea-rt", K=2, learner="gnb", budget=150, seed=0, **kw):
    return FCSConfig(K=K, search=SearchConfig(algorithm=alg, population_size=20, eval_budget=budget, h=2),
                     learner=LearnerSpec(learner), seed=seed, **kw)


def _fitness(ds, constructed=(), learner="gnb"):
    folds = make_folds(ds, 5, 0)
    return FeatureFitness(ds, list(constructed), LearnerSpec(learner), folds)


def test_constant_candidate_is_free_max_error(xor_data):
    fit = _fitness(xor_data)
    ev = fit(Node(Op.CONST, 1.5))
    assert (ev.error, ev.verdict, ev.cv_called, fit.cv_calls) == (1.0, Verdict.CONSTANT, False, 0)


def test_regression_max_error_is_inf(linear_data):
    fit = _fitness(linear_data, learner="ols")
    assert fit(Node(Op.CONST, 2.0)).error == math.inf


def test_duplicate_of_constructed_feature(xor_data):
    first = xor_data.original_features[:, 0] * xor_data.original_features[:, 1]
    fit = _fitness(xor_data, [first])
    ev = fit(Node(Op.MUL, 0, [Node(F, 0), Node(F, 1)]))
    assert ev.verdict == Verdict.DUPLICATE and ev.error == 1.0 and fit.cv_calls == 0


def test_original_column_is_valid(xor_data):
    fit = _fitness(xor_data)
    ev = fit(Node(F, 2))
    assert ev.verdict == Verdict.VALID and ev.cv_called and fit.cv_calls == 1


def test_unchanged_reuses_cached_error(xor_data):
    fit = _fitness(xor_data)
    tree = Node(F, 0)
    first = fit(tree)
    again = fit(Node(Op.ADD, 0, [Node(F, 0), Node(Op.CONST, 0.0)]), (first.output, 0.123))
    assert again.verdict == Verdict.UNCHANGED and again.error == 0.123 and fit.cv_calls == 1


def test_product_feature_solves_xor(xor_data):
    ev = evaluate_candidate(Node(Op.MUL, 0, [Node(F, 0), Node(F, 1)]), xor_data, [], LearnerSpec("gnb"),
                            make_folds(xor_data, 5, 0))
    assert ev.error < 0.1


def test_construct_shapes_and_bounds(xor_data):
    res = construct_features(xor_data, small_cfg(K=3))
    assert res.K == 3 and len(res.rounds) == 3
    assert res.train_values.shape == (128, 3) and res.test_values.shape == (32, 3)
    for r in res.rounds:
        assert r.feature_height <= 2 and r.feature_size <= 7
        assert r.evaluations <= 150 and r.valid
        assert 0.0 <= r.test_error <= 1.0


def test_terminal_purity(xor_data):
    res = construct_features(xor_data, small_cfg(K=3))
    for tree in res.features:
        kinds, values = tree.prefix()
        assert np.all(values[kinds == F] < xor_data.n_original)


def test_constructed_features_are_distinct(xor_data):
    res = construct_features(xor_data, small_cfg(K=3))
    cols = res.train_values.T
    for i in range(len(cols)):
        for j in range(i):
            assert not np.array_equal(cols[i], cols[j])


def test_reproducible(xor_data):
    a = construct_features(xor_data, small_cfg(seed=4))
    b = construct_features(xor_data, small_cfg(seed=4))
    assert a.to_dict() == b.to_dict()
    np.testing.assert_array_equal(a.test_values, b.test_values)


def test_split_fixed_and_test_isolated(xor_data):
    """Changing test-set targets must not change anything the search sees."""
    cfg = small_cfg(seed=2)
    split = split_train_test(xor_data, cfg.test_fraction, cfg.seed)
    y = xor_data.target.copy()
    y[split.test_rows] = 1 - y[split.test_rows]
    X = xor_data.features.copy()
    X[split.test_rows] *= 1000.0
    poisoned = Dataset(X, y, Task.CLASSIFICATION)
    a, b = construct_features(xor_data, cfg), construct_features(poisoned, cfg)
    assert [r.expression for r in a.rounds] == [r.expression for r in b.rounds]
    assert [r.train_cv_error for r in a.rounds] == [r.train_cv_error for r in b.rounds]
    np.testing.assert_array_equal(a.train_target, split.train.target)


def test_identity_target_regression():
    r = np.random.default_rng(3)
    X = r.uniform(1, 5, size=(80, 3))
    ds = Dataset(X, X[:, 0].copy(), Task.REGRESSION)
    res = construct_features(ds, small_cfg("rs", K=1, learner="ols", budget=200))
    assert res.rounds[0].train_cv_error < 1e-20
    assert res.rounds[0].test_score == pytest.approx(1.0)


def test_augment_scores_with_originals(xor_data):
    res = construct_features(xor_data, small_cfg(K=1, augment=True))
    assert res.rounds[0].valid
    assert res.config.augment


def test_baseline_matches_manual(xor_data):
    cfg = small_cfg()
    base = baseline_scores(xor_data, cfg)
    assert set(base) >= {"train_cv_error", "test_error", "test_score"}
    assert base["test_score"] == pytest.approx(1 - base["test_error"])


def test_regression_baseline_reports_r2(linear_data):
    base = baseline_scores(linear_data, small_cfg(learner="ols"))
    assert base["test_score"] == pytest.approx(1.0)


def test_incompatible_learner(linear_data):
    with pytest.raises(ValueError):
        construct_features(linear_data, small_cfg(learner="gnb"))


def test_no_valid_candidate_is_flagged():
    X = np.ones((30, 2))
    X[:, 1] = 2.0
    ds = Dataset(X, np.arange(30) % 2, Task.CLASSIFICATION)
    res = construct_features(ds, small_cfg("rs", K=1, budget=5))
    assert not res.rounds[0].valid
    assert res.rounds[0].train_cv_error == 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        FCSConfig(K=0)


def test_construction_error_type():
    assert issubclass(ConstructionError, RuntimeError)
