"""Iterative feature construction.

Round ``k`` searches for one tree whose values, together with the ``k-1``
features built so far, minimise the learner's cross-validated error on the
training split.  The winning tree's values are appended to both splits and
the next round starts from a fresh random population.  The test split is only
touched to score each round.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import learners
from .dataset import Dataset, Task, erc_range, make_folds, split_train_test
from .exprtree import PrimitiveSet
from .learners import CrossValidator, LearnerSpec, Metric, metric_for
from .search import Evaluation, SearchConfig, run_search
from .semantics import BETA_HI, BETA_LO, Verdict, check_criteria, eval_tree

_REJECTED = (Verdict.CONSTANT, Verdict.EXTREME, Verdict.DUPLICATE)


class ConstructionError(RuntimeError):
    """Internal consistency failure during feature construction."""


@dataclass(frozen=True)
class FCSConfig:
    K: int = 5
    search: SearchConfig = field(default_factory=SearchConfig)
    learner: LearnerSpec = field(default_factory=lambda: LearnerSpec("gnb"))
    folds_C: int = 5
    test_fraction: float = 0.2
    seed: int = 0
    augment: bool = False
    beta_lo: float = BETA_LO
    beta_hi: float = BETA_HI

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["search"]["algorithm"] = self.search.algorithm.value
        d["learner"]["kind"] = self.learner.kind.value
        return d


def max_error(task: Task) -> float:
    return 1.0 if Task(task) == Task.CLASSIFICATION else math.inf


class FeatureFitness:
    """Fitness of a candidate tree for the current round.

    Rejected candidates (constant, extreme, duplicate of a constructed
    feature) get the maximum error without running the learner; candidates
    whose values equal the cached parent values reuse the cached error.
    """

    def __init__(self, train: Dataset, constructed: list[np.ndarray], learner: LearnerSpec,
                 folds, augment: bool = False, beta_lo: float = BETA_LO, beta_hi: float = BETA_HI):
        self.X = np.ascontiguousarray(train.original_features)
        n = train.n
        self.previous = np.array(constructed, dtype=np.float64).reshape(len(constructed), n)
        cols = [self.X] if augment else []
        if constructed:
            cols.append(self.previous.T)
        self.base = np.column_stack(cols) if cols else np.empty((n, 0))
        self.cv = CrossValidator(learner, train.target, train.task, train.n_classes, folds)
        self.max_error = max_error(train.task)
        self.beta_lo, self.beta_hi = beta_lo, beta_hi
        self.cv_calls = 0

    def values(self, tree) -> np.ndarray:
        return eval_tree(tree, self.X)

    def __call__(self, tree, cached=None) -> Evaluation:
        v = self.values(tree)
        verdict = check_criteria(v, self.previous, self.beta_lo, self.beta_hi,
                                 None if cached is None else cached[0])
        if verdict in _REJECTED:
            return Evaluation(self.max_error, v, verdict, False)
        if verdict == Verdict.UNCHANGED:
            return Evaluation(cached[1], v, verdict, False)
        self.cv_calls += 1
        with np.errstate(all="ignore"):
            err = self.cv.error(np.column_stack([self.base, v]))
        if not math.isfinite(err):
            err = self.max_error
        return Evaluation(err, v, Verdict.VALID, True)


def evaluate_candidate(tree, train_ext: Dataset, previous, learner: LearnerSpec, folds,
                       cached=None, augment: bool = False) -> Evaluation:
    """One-off fitness evaluation of ``tree`` against ``train_ext``."""
    return FeatureFitness(train_ext, list(previous), learner, folds, augment)(tree, cached)


@dataclass
class RoundResult:
    k: int
    train_cv_error: float
    train_full_error: float
    test_error: float
    train_score: float
    test_score: float
    expression: str
    expression_expanded: str
    feature_size: int
    feature_height: int
    evaluations: int
    fitness_calls: int
    valid: bool
    trace: list = field(default_factory=list, repr=False)


@dataclass
class FCSResult:
    config: FCSConfig
    metric: Metric
    features: list
    rounds: list[RoundResult]
    train_values: np.ndarray = field(repr=False)
    test_values: np.ndarray = field(repr=False)
    train_target: np.ndarray = field(repr=False)
    test_target: np.ndarray = field(repr=False)
    train_original: np.ndarray = field(repr=False)
    test_original: np.ndarray = field(repr=False)
    task: Task = Task.CLASSIFICATION
    n_classes: int = 0
    baseline: dict | None = None

    @property
    def K(self) -> int:
        return len(self.features)

    def to_dict(self, include_trace: bool = False) -> dict:
        rounds = []
        for r in self.rounds:
            d = asdict(r)
            if not include_trace:
                d.pop("trace")
            rounds.append(d)
        return {
            "config": self.config.to_dict(),
            "metric": self.metric.value,
            "task": self.task.value,
            "rounds": rounds,
            "baseline": self.baseline,
        }


def _design(original: np.ndarray, constructed: np.ndarray, augment: bool) -> np.ndarray:
    return np.column_stack([original, constructed]) if augment else constructed


def _fit_and_score(spec, X_tr, y_tr, X_te, y_te, task, n_classes):
    model = learners.fit_arrays(spec, X_tr, y_tr, task, n_classes)
    with np.errstate(all="ignore"):
        p_tr = model.predict(X_tr)
        p_te = model.predict(X_te)
        return (learners.error_of(p_tr, y_tr, task, n_classes),
                learners.error_of(p_te, y_te, task, n_classes),
                learners.score_of(p_tr, y_tr, task, n_classes),
                learners.score_of(p_te, y_te, task, n_classes))


def construct_features(ds: Dataset, config: FCSConfig, progress=None) -> FCSResult:
    """Run ``config.K`` construction rounds on one fixed train/test split."""
    config.learner.check_task(ds.task)
    split = split_train_test(ds, config.test_fraction, config.seed)
    tr, te = split.train, split.test
    folds = make_folds(tr, config.folds_C, config.seed)
    lo, hi = erc_range(tr)
    primitives = PrimitiveSet(tr.n_original, lo, hi)
    round_seeds = np.random.SeedSequence(config.seed).spawn(config.K)
    X_tr, X_te = np.ascontiguousarray(tr.original_features), np.ascontiguousarray(te.original_features)

    trees, rounds, v_train, v_test = [], [], [], []
    for k in range(1, config.K + 1):
        fitness = FeatureFitness(tr, v_train, config.learner, folds, config.augment,
                                 config.beta_lo, config.beta_hi)
        res = run_search(replace(config.search, seed=config.seed), fitness, primitives,
                         np.random.default_rng(round_seeds[k - 1]))
        tree = res.best_tree
        vt = eval_tree(tree, X_tr)
        if res.found_valid:
            verdict = check_criteria(vt, v_train, config.beta_lo, config.beta_hi)
            if verdict != Verdict.VALID:
                raise ConstructionError(f"round {k}: accepted feature is {verdict.name}")
        trees.append(tree)
        v_train.append(vt)
        with np.errstate(all="ignore"):
            v_test.append(eval_tree(tree, X_te))
        C_tr, C_te = np.column_stack(v_train), np.column_stack(v_test)
        scores = _fit_and_score(config.learner, _design(X_tr, C_tr, config.augment), tr.target,
                                _design(X_te, C_te, config.augment), te.target, ds.task, ds.n_classes)
        rounds.append(RoundResult(
            k, res.best_error, *scores,
            tree.to_infix(), tree.to_infix(expand_protected=True), tree.size(), tree.height(),
            res.evaluations, res.fitness_calls, res.found_valid, res.trace,
        ))
        if progress is not None:
            progress(rounds[-1])

    return FCSResult(
        config, metric_for(ds.task), trees, rounds,
        np.column_stack(v_train), np.column_stack(v_test), tr.target, te.target,
        X_tr, X_te, ds.task, ds.n_classes,
    )


def baseline_scores(ds: Dataset, config: FCSConfig) -> dict:
    """The learner on the original features, same split and folds as a run."""
    config.learner.check_task(ds.task)
    split = split_train_test(ds, config.test_fraction, config.seed)
    tr, te = split.train, split.test
    folds = make_folds(tr, config.folds_C, config.seed)
    cv = CrossValidator(config.learner, tr.target, tr.task, tr.n_classes, folds)
    with np.errstate(all="ignore"):
        cv_err = cv.error(tr.original_features)
    train_err, test_err, train_score, test_score = _fit_and_score(
        config.learner, tr.original_features, tr.target, te.original_features, te.target,
        ds.task, ds.n_classes)
    return {
        "train_cv_error": cv_err,
        "train_full_error": train_err,
        "test_error": test_err,
        "train_score": train_score,
        "test_score": test_score,
    }
