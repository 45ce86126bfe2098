"""Configuration, budget accounting and best-so-far tracking shared by all searches."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ..semantics import Verdict


class Algorithm(str, Enum):
    RS = "rs"
    SGP = "sgp"
    SGPB = "sgpb"
    GOMEA_RT = "gomea-rt"
    GOMEA_LT = "gomea-lt"


@dataclass(frozen=True)
class SearchConfig:
    algorithm: Algorithm = Algorithm.GOMEA_RT
    population_size: int = 100
    eval_budget: int = 10_000
    h: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    tournament_size: int = 7
    elitism: int = 1
    max_height: int = 17
    sgp_init_heights: tuple[int, int] = (2, 6)
    uniqueness_tries: int = 100
    count_skipped_evals: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not math.isclose(self.crossover_rate + self.mutation_rate, 1.0):
            raise ValueError("crossover_rate + mutation_rate must equal 1")
        if self.algorithm != Algorithm.RS and self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.eval_budget < 1:
            raise ValueError("eval_budget must be positive")

    @property
    def height_limit(self) -> int:
        """Height cap applied during variation."""
        return self.max_height if self.algorithm == Algorithm.SGP else self.h


@dataclass
class Evaluation:
    """Outcome of one fitness call.  ``cv_called`` says whether the learner ran."""

    error: float
    output: Optional[np.ndarray]
    verdict: Verdict
    cv_called: bool


# fitness(tree, cached) -> Evaluation, where cached is (output, error) or None
FitnessFn = Callable[[object, Optional[tuple]], Evaluation]


class EvalBudget:
    """Counts learner cross-validations.

    Calls that skip the learner are free unless ``count_skipped`` is set.  To
    guarantee termination on degenerate landscapes, at most ``free_limit``
    free calls are allowed before the budget reports exhaustion.
    """

    def __init__(self, limit: int, count_skipped: bool = False, free_limit: int | None = None):
        self.limit = limit
        self.used = 0
        self.free_calls = 0
        self.count_skipped = count_skipped
        self.free_limit = free_limit if free_limit is not None else 50 * limit + 10_000

    @property
    def exhausted(self) -> bool:
        return self.used >= self.limit or self.free_calls >= self.free_limit

    def charge(self, ev: Evaluation):
        if ev.cv_called or self.count_skipped:
            self.used += 1
        else:
            self.free_calls += 1
        assert self.used <= self.limit


@dataclass
class Individual:
    tree: object
    error: float = math.inf
    output: Optional[np.ndarray] = None

    @property
    def cache(self):
        return None if self.output is None else (self.output, self.error)


@dataclass
class SearchResult:
    best_tree: object
    best_error: float
    best_output: Optional[np.ndarray]
    trace: list = field(default_factory=list)
    evaluations: int = 0
    fitness_calls: int = 0
    found_valid: bool = False


class Evaluator:
    """Budget-gated fitness calls that also track the best tree seen."""

    def __init__(self, fitness: FitnessFn, budget: EvalBudget):
        self.fitness = fitness
        self.budget = budget
        self.best: Individual | None = None
        self.best_valid = False
        self.trace: list[tuple[int, float]] = []
        self.calls = 0

    @property
    def exhausted(self) -> bool:
        return self.budget.exhausted

    def __call__(self, tree, cached=None) -> Evaluation | None:
        """Evaluate ``tree``; returns None without calling when out of budget."""
        if self.budget.exhausted:
            return None
        ev = self.fitness(tree, cached)
        self.calls += 1
        self.budget.charge(ev)
        valid = ev.verdict in (Verdict.VALID, Verdict.UNCHANGED)
        if self.best is None or ev.error < self.best.error or (valid and not self.best_valid):
            self.best = Individual(tree.copy(), ev.error, ev.output)
            self.best_valid = valid
            self.trace.append((self.budget.used, ev.error))
        return ev

    def evaluate_individual(self, ind: Individual) -> bool:
        ev = self(ind.tree, None)
        if ev is None:
            return False
        ind.error, ind.output = ev.error, ev.output
        return True

    def result(self) -> SearchResult:
        best = self.best
        return SearchResult(
            best.tree if best else None,
            best.error if best else math.inf,
            best.output if best else None,
            self.trace,
            self.budget.used,
            self.calls,
            self.best_valid,
        )
