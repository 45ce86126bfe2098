"""Search algorithms that each return one best feature tree per round."""
from __future__ import annotations

import numpy as np

from ..exprtree import PrimitiveSet
from .base import (Algorithm, EvalBudget, Evaluation, Evaluator, FitnessFn, Individual,
                   SearchConfig, SearchResult)
from .gomea import FOS, build_linkage_tree, build_random_tree, gom_variation, run_gomea
from .sgp import (run_random_search, run_sgp, subtree_crossover, subtree_mutation,
                  tournament_select)

__all__ = [
    "Algorithm", "EvalBudget", "Evaluation", "Evaluator", "FitnessFn", "FOS", "Individual",
    "SearchConfig", "SearchResult", "build_linkage_tree", "build_random_tree", "gom_variation",
    "run_search", "subtree_crossover", "subtree_mutation", "tournament_select",
]

_RUNNERS = {
    Algorithm.RS: run_random_search,
    Algorithm.SGP: run_sgp,
    Algorithm.SGPB: run_sgp,
    Algorithm.GOMEA_RT: run_gomea,
    Algorithm.GOMEA_LT: run_gomea,
}


def run_search(config: SearchConfig, fitness: FitnessFn, primitives: PrimitiveSet,
               rng=None) -> SearchResult:
    """Run one search to budget exhaustion and return the lowest-error tree seen.

    ``fitness(tree, cached)`` must return an :class:`Evaluation`; ``cached`` is
    the parent's ``(output, error)`` or None.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    budget = EvalBudget(config.eval_budget, config.count_skipped_evals)
    evaluate = Evaluator(fitness, budget)
    _RUNNERS[config.algorithm](config, evaluate, primitives, rng)
    return evaluate.result()
