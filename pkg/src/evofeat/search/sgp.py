"""Standard tree GP (unbounded or height-bounded) and random search."""
from __future__ import annotations

import numpy as np

from ..exprtree import FULL, GROW, Node, PrimitiveSet, init_population, sample_tree
from .base import Algorithm, Evaluator, Individual, SearchConfig


def tournament_select(population: list[Individual], rng, size: int = 7) -> Individual:
    """Best of ``size`` uniform draws with replacement; ties broken at random."""
    picks = rng.integers(len(population), size=size)
    errors = np.array([population[i].error for i in picks])
    winners = picks[errors == errors.min()] if not np.all(np.isnan(errors)) else picks
    return population[int(winners[rng.integers(len(winners))])]


def _pick_by_depth(tree: Node, rng):
    """Choose a depth uniformly among occupied depths, then a node at it."""
    by_depth: dict[int, list] = {}
    for nd, parent, ci, d in tree.walk():
        by_depth.setdefault(d, []).append((nd, parent, ci))
    depth = int(rng.integers(len(by_depth)))
    nodes = by_depth[depth]
    nd, parent, ci = nodes[int(rng.integers(len(nodes)))]
    return nd, parent, ci, depth


def _graft(tree: Node, parent: Node | None, ci: int, sub: Node) -> Node:
    if parent is None:
        return sub
    parent.children[ci] = sub
    return tree


def subtree_crossover(a: Node, b: Node, rng, max_height: int) -> Node:
    """Copy of ``a`` with a depth-uniform subtree swapped in from ``b``.

    Returns an unchanged copy of ``a`` when the child would exceed ``max_height``.
    """
    child = a.copy()
    _, parent, ci, depth = _pick_by_depth(child, rng)
    donor, _, _, _ = _pick_by_depth(b, rng)
    if depth + donor.height() > max_height:
        return a.copy()
    return _graft(child, parent, ci, donor.copy())


def subtree_mutation(a: Node, rng, primitives: PrimitiveSet, max_height: int,
                     subtree_height: int) -> Node:
    """Replace a depth-uniform node of a copy of ``a`` with a fresh GROW subtree."""
    child = a.copy()
    _, parent, ci, depth = _pick_by_depth(child, rng)
    h = max(0, min(subtree_height, max_height - depth))
    return _graft(child, parent, ci, sample_tree(GROW, 0, h, rng, primitives))


def run_sgp(config: SearchConfig, evaluate: Evaluator, primitives: PrimitiveSet, rng) -> None:
    bounded = config.algorithm == Algorithm.SGPB
    if bounded:
        scheme, mut_h = ("RHH", min(2, config.h), config.h), config.h
    else:
        lo, hi = config.sgp_init_heights
        scheme, mut_h = ("RHH", lo, hi), hi
    limit = config.height_limit
    trees = init_population(config.population_size, scheme, rng, primitives, config.uniqueness_tries)
    pop = [Individual(t) for t in trees]
    for ind in pop:
        if not evaluate.evaluate_individual(ind):
            return
    while not evaluate.exhausted:
        order = sorted(range(len(pop)), key=lambda i: pop[i].error)
        offspring = [pop[i] for i in order[: config.elitism]]
        while len(offspring) < config.population_size:
            if rng.random() < config.crossover_rate:
                pa = tournament_select(pop, rng, config.tournament_size)
                pb = tournament_select(pop, rng, config.tournament_size)
                tree = subtree_crossover(pa.tree, pb.tree, rng, limit)
            else:
                pa = tournament_select(pop, rng, config.tournament_size)
                tree = subtree_mutation(pa.tree, rng, primitives, limit, mut_h)
            ev = evaluate(tree, pa.cache)
            if ev is None:
                return
            offspring.append(Individual(tree, ev.error, ev.output))
        pop = offspring


def run_random_search(config: SearchConfig, evaluate: Evaluator, primitives: PrimitiveSet, rng) -> None:
    """Sample ramped half-and-half trees of height 2..h until the budget runs out."""
    levels = list(range(min(2, config.h), config.h + 1))
    i = 0
    while not evaluate.exhausted:
        h = levels[(i // 2) % len(levels)]
        method = GROW if i % 2 == 0 else FULL
        tree = sample_tree(method, 0, h, rng, primitives)
        evaluate(tree, None)
        i += 1
