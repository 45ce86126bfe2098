"""Learners used as the fitness oracle, their metrics, and C-fold cross-validation.

Gaussian naive Bayes (classification), ordinary least squares (regression),
CART and random forest (both).  Errors are ``1 - macro-F1`` or MSE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .dataset import Dataset, FoldAssignment, Task

GNB_VAR_SMOOTHING = 1e-9
OLS_RIDGE = 1e-8
_OLS_MAX_COND = 1e12


class LearnerKind(str, Enum):
    GNB = "gnb"
    OLS = "ols"
    CART = "cart"
    RF = "rf"


class Metric(str, Enum):
    ONE_MINUS_MACRO_F1 = "one_minus_macro_f1"
    MSE = "mse"


@dataclass(frozen=True)
class RFParams:
    n_trees: int = 100
    min_node_size: int | None = None  # None: 1 classification, 5 regression
    mtry: int | None = None  # None: floor(sqrt(p)) classification, max(1, p // 3) regression
    bootstrap: bool = True

    def resolve_mtry(self, p: int, classification: bool) -> int:
        if self.mtry is not None:
            return max(1, min(self.mtry, p))
        return max(1, int(math.isqrt(p))) if classification else max(1, p // 3)

    def resolve_min_node(self, classification: bool) -> int:
        if self.min_node_size is not None:
            return self.min_node_size
        return 1 if classification else 5


@dataclass(frozen=True)
class LearnerSpec:
    kind: LearnerKind
    rf_params: RFParams = field(default_factory=RFParams)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", LearnerKind(self.kind))

    def check_task(self, task: Task):
        task = Task(task)
        if self.kind == LearnerKind.GNB and task != Task.CLASSIFICATION:
            raise ValueError("naive Bayes is for classification only")
        if self.kind == LearnerKind.OLS and task != Task.REGRESSION:
            raise ValueError("least squares is for regression only")


def metric_for(task: Task) -> Metric:
    return Metric.ONE_MINUS_MACRO_F1 if Task(task) == Task.CLASSIFICATION else Metric.MSE


# ----------------------------------------------------------------- models

class GaussianNB:
    def __init__(self, n_classes: int):
        self.n_classes = n_classes

    def fit(self, X, y):
        self.means, self.vars, self.log_prior = kernels.gnb_fit(
            X, np.ascontiguousarray(y, dtype=np.int64), self.n_classes, GNB_VAR_SMOOTHING)
        return self

    def predict(self, X):
        return kernels.gnb_predict(X, self.means, self.vars, self.log_prior)


class LeastSquares:
    """OLS with intercept via centred normal equations.

    A rank-deficient or badly conditioned Gram matrix gets a small ridge term
    (relative to its mean diagonal) instead of failing.
    """

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        G = Xc.T @ Xc
        rhs = Xc.T @ (y - y_mean)
        self.used_ridge = False
        w = None
        if np.all(np.isfinite(G)) and np.linalg.cond(G) < _OLS_MAX_COND:
            try:
                w = np.linalg.solve(G, rhs)
            except np.linalg.LinAlgError:
                w = None
        if w is None or not np.all(np.isfinite(w)):
            self.used_ridge = True
            scale = np.trace(G) / max(len(G), 1) if np.isfinite(np.trace(G)) else 1.0
            lam = OLS_RIDGE * (scale if scale > 0 else 1.0)
            w = np.linalg.solve(G + lam * np.eye(len(G)), rhs)
            if not np.all(np.isfinite(w)):
                w = np.zeros(X.shape[1])
        self.coef = w
        self.intercept = float(y_mean - x_mean @ w)
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != len(self.coef):
            raise ValueError("column count differs from fit")
        return X @ self.coef + self.intercept


class DecisionTree:
    """Axis-aligned CART (Gini or variance), grown until pure or too small."""

    def __init__(self, classification: bool, n_classes: int = 0, min_node_size: int = 1,
                 mtry: int = 0, seed: int = 0):
        self.classification = classification
        self.n_classes = n_classes
        self.min_node_size = min_node_size
        self.mtry = mtry
        self.seed = seed

    def fit(self, X, y, samples=None):
        X = np.asarray(X, dtype=np.float64)
        self.p = X.shape[1]
        if samples is None:
            samples = np.arange(X.shape[0], dtype=np.int64)
        (self.feature, self.threshold, self.left, self.right, self.value) = kernels.build_tree(
            X, np.ascontiguousarray(y, dtype=np.float64), np.ascontiguousarray(samples, dtype=np.int64),
            self.classification, self.n_classes, self.min_node_size, self.mtry,
            self.seed & 0xFFFFFFFFFFFFFFFF)
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.p:
            raise ValueError("column count differs from fit")
        leaves = kernels.tree_apply(X, self.feature, self.threshold, self.left, self.right)
        out = self.value[leaves]
        return out.astype(np.int64) if self.classification else out


class RandomForest:
    def __init__(self, classification: bool, n_classes: int, params: RFParams, seed: int):
        self.classification = classification
        self.n_classes = n_classes
        self.params = params
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        n, p = X.shape
        rng = np.random.default_rng(self.seed)
        mtry = self.params.resolve_mtry(p, self.classification)
        min_node = self.params.resolve_min_node(self.classification)
        self.trees = []
        for _ in range(self.params.n_trees):
            samples = rng.integers(0, n, size=n) if self.params.bootstrap else np.arange(n)
            tree_seed = int(rng.integers(0, 2**63))
            self.trees.append(DecisionTree(self.classification, self.n_classes, min_node, mtry,
                                           tree_seed).fit(X, y, samples))
        return self

    def predict(self, X):
        votes = np.stack([t.predict(X) for t in self.trees])
        if not self.classification:
            return votes.mean(axis=0)
        counts = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        for row in votes:
            counts[np.arange(X.shape[0]), row] += 1
        return np.argmax(counts, axis=1).astype(np.int64)  # ties -> lowest class id


def fit(spec: LearnerSpec, train: Dataset):
    """Train the learner described by ``spec`` on every column of ``train``."""
    spec.check_task(train.task)
    return fit_arrays(spec, train.features, train.target, train.task, train.n_classes)


def fit_arrays(spec: LearnerSpec, X, y, task, n_classes: int = 0):
    if len(y) == 0:
        raise ValueError("cannot fit on an empty training set")
    clf = Task(task) == Task.CLASSIFICATION
    if spec.kind == LearnerKind.GNB:
        return GaussianNB(n_classes).fit(X, y)
    if spec.kind == LearnerKind.OLS:
        return LeastSquares().fit(X, y)
    if spec.kind == LearnerKind.CART:
        p = spec.rf_params
        return DecisionTree(clf, n_classes, p.resolve_min_node(clf), 0, spec.seed).fit(X, y)
    return RandomForest(clf, n_classes, spec.rf_params, spec.seed).fit(X, y)


def predict(model, rows) -> np.ndarray:
    return model.predict(np.asarray(rows, dtype=np.float64))


# ----------------------------------------------------------------- metrics

def macro_f1(pred, truth, n_classes: int) -> float:
    """Unweighted mean of per-class F1 over all ``n_classes`` classes.

    Any 0/0 in precision, recall or F1 makes that class contribute 0.
    """
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if len(pred) == 0 or len(pred) != len(truth):
        raise ValueError("macro_f1 needs equal-length, non-empty inputs")
    tp = np.bincount(truth[pred == truth], minlength=n_classes).astype(np.float64)
    fp = np.bincount(pred, minlength=n_classes) - tp
    fn = np.bincount(truth, minlength=n_classes) - tp
    total = 0.0
    for c in range(n_classes):
        if tp[c] == 0:
            continue  # precision or recall is 0 or 0/0: F1 is 0 either way
        prec = tp[c] / (tp[c] + fp[c])
        rec = tp[c] / (tp[c] + fn[c])
        total += 2.0 * prec * rec / (prec + rec)
    return float(total / n_classes)


def mse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if len(pred) == 0 or len(pred) != len(truth):
        raise ValueError("mse needs equal-length, non-empty inputs")
    d = pred - truth
    return float(np.mean(d * d))


def r2(pred, truth) -> float:
    """``1 - MSE / var(truth)`` with population variance."""
    truth = np.asarray(truth, dtype=np.float64)
    if len(truth) < 2:
        raise ValueError("r2 needs at least two values")
    var = float(np.var(truth))
    if var == 0.0:
        raise ValueError("r2 undefined for constant truth")
    return float(1.0 - mse(pred, truth) / var)


def error_of(pred, truth, task: Task, n_classes: int = 0) -> float:
    if Task(task) == Task.CLASSIFICATION:
        return float(1.0 - macro_f1(pred, truth, n_classes))
    return mse(pred, truth)


def score_of(pred, truth, task: Task, n_classes: int = 0) -> float:
    """Macro-F1 for classification, R^2 for regression."""
    if Task(task) == Task.CLASSIFICATION:
        return float(macro_f1(pred, truth, n_classes))
    return r2(pred, truth)


# ----------------------------------------------------------------- cross-validation

class CrossValidator:
    """C-fold CV error for repeated evaluations over one fixed fold assignment."""

    def __init__(self, spec: LearnerSpec, target, task: Task, n_classes: int, folds: FoldAssignment):
        self.spec = spec
        self.y = np.asarray(target)
        self.task = Task(task)
        self.n_classes = n_classes
        self.splits = [folds.fold_rows(c) for c in range(folds.C)]

    def error(self, X) -> float:
        X = np.asarray(X, dtype=np.float64)
        total = 0.0
        for tr, va in self.splits:
            model = fit_arrays(self.spec, X[tr], self.y[tr], self.task, self.n_classes)
            total += error_of(model.predict(X[va]), self.y[va], self.task, self.n_classes)
        return total / len(self.splits)


def cross_val_error(spec: LearnerSpec, train: Dataset, folds: FoldAssignment) -> float:
    """Mean validation error over the folds, summed in fold order."""
    spec.check_task(train.task)
    if len(folds.fold_of_row) != train.n:
        raise ValueError("fold assignment was built for a different training set")
    return CrossValidator(spec, train.target, train.task, train.n_classes, folds).error(train.features)
