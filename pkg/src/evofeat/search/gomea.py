"""GP-GOMEA: gene-pool optimal mixing over fixed-height tree templates.

Variation copies donor nodes at the positions of one FOS subset at a time and
keeps the change only if the error does not get worse.  The FOS is either a
linkage tree built from mutual information between template positions or a
random tree with the same shape.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exprtree import ExprTree, Op, PrimitiveSet, init_population
from .base import Algorithm, Evaluator, Individual, SearchConfig


@dataclass(frozen=True)
class FOS:
    """Family of subsets of template positions."""

    subsets: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)


def _merge_hierarchy(n: int, pick_pair) -> FOS:
    """Agglomerate singletons pairwise; ``pick_pair(clusters)`` returns indices.

    Every cluster formed is kept except the final one covering all positions.
    """
    clusters = [(i,) for i in range(n)]
    subsets = list(clusters)
    while len(clusters) > 1:
        a, b = pick_pair(clusters)
        merged = tuple(sorted(clusters[a] + clusters[b]))
        clusters = [c for k, c in enumerate(clusters) if k not in (a, b)] + [merged]
        subsets.append(merged)
    if n > 1:
        subsets.pop()
    return FOS(tuple(subsets))


def _symbols(population: list[ExprTree]) -> np.ndarray:
    """Population x position matrix of node symbols; all constants share one."""
    kinds = np.stack([t.kinds for t in population])
    values = np.stack([t.values for t in population])
    sym = kinds.copy()
    feat = kinds == Op.FEATURE
    sym[feat] = len(Op) + values[feat].astype(np.int64)
    return sym


def _entropy(labels: np.ndarray) -> float:
    counts = np.bincount(np.unique(labels, return_inverse=True)[1].ravel())
    prob = counts[counts > 0] / len(labels)
    return float(-(prob * np.log(prob)).sum())


def mutual_information(population: list[ExprTree]) -> np.ndarray:
    """Plug-in pairwise mutual information between template positions."""
    sym = _symbols(population)
    n = sym.shape[1]
    base = int(sym.max()) + 1
    h1 = np.array([_entropy(sym[:, i]) for i in range(n)])
    mi = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            joint = _entropy(sym[:, i] * base + sym[:, j])
            mi[i, j] = mi[j, i] = h1[i] + h1[j] - joint
    return mi


def build_linkage_tree(population: list[ExprTree], rng=None) -> FOS:
    """UPGMA clustering of positions by mutual information (higher merges first).

    Ties go to the first pair in an order shuffled by ``rng`` (fixed when rng
    is None), so the result is deterministic given the seed.
    """
    if len(population) < 2:
        raise ValueError("linkage learning needs at least two individuals")
    mi = mutual_information(population)
    n = mi.shape[0]
    rank = rng.permutation(n) if rng is not None else np.arange(n)

    def closest(clusters):
        best, best_pair = -np.inf, (0, 1)
        order = sorted(range(len(clusters)), key=lambda k: min(rank[i] for i in clusters[k]))
        for x in range(len(order)):
            for y in range(x + 1, len(order)):
                a, b = order[x], order[y]
                sim = mi[np.ix_(clusters[a], clusters[b])].mean()
                if sim > best + 1e-12:
                    best, best_pair = sim, (a, b)
        return best_pair

    return _merge_hierarchy(n, closest)


def build_random_tree(n_positions: int, rng) -> FOS:
    """Linkage-tree-shaped FOS with uniformly random merges."""
    if n_positions < 1:
        raise ValueError("need at least one position")

    def random_pair(clusters):
        a, b = rng.choice(len(clusters), size=2, replace=False)
        return int(a), int(b)

    return _merge_hierarchy(n_positions, random_pair)


def gom_variation(target: Individual, population: list[Individual], fos: FOS,
                  evaluate: Evaluator, rng, target_index: int | None = None,
                  on_step=None) -> Individual:
    """One gene-pool optimal mixing pass over ``target``.

    Returns a new individual; ``target`` is not modified.  ``on_step`` (for
    tests) receives ``(before, after, subset)`` after every subset.
    """
    cur = Individual(target.tree.copy(), target.error, target.output)
    donors = [k for k in range(len(population)) if k != target_index] or list(range(len(population)))
    for s in rng.permutation(len(fos)):
        subset = list(fos.subsets[s])
        donor = population[donors[int(rng.integers(len(donors)))]].tree
        before = cur.tree
        if (np.array_equal(before.kinds[subset], donor.kinds[subset])
                and np.array_equal(before.values[subset], donor.values[subset])):
            if on_step is not None:
                on_step(before, before, subset)
            continue
        trial = before.copy()
        trial.kinds[subset] = donor.kinds[subset]
        trial.values[subset] = donor.values[subset]
        ev = evaluate(trial, cur.cache)
        if ev is None:
            break
        if ev.error <= cur.error:
            cur = Individual(trial, ev.error, ev.output)
        if on_step is not None:
            on_step(before, cur.tree, subset)
    return cur


def run_gomea(config: SearchConfig, evaluate: Evaluator, primitives: PrimitiveSet, rng) -> None:
    nodes = init_population(config.population_size, ("HH", config.h), rng, primitives,
                            config.uniqueness_tries, grow_min_height=1)
    pop = [Individual(ExprTree.from_node(nd, config.h, rng, primitives)) for nd in nodes]
    for ind in pop:
        if not evaluate.evaluate_individual(ind):
            return
    n_positions = pop[0].tree.n_positions
    while not evaluate.exhausted:
        if config.algorithm == Algorithm.GOMEA_LT:
            fos = build_linkage_tree([ind.tree for ind in pop], rng)
        else:
            fos = build_random_tree(n_positions, rng)
        calls = evaluate.calls
        pop = [gom_variation(ind, pop, fos, evaluate, rng, i) for i, ind in enumerate(pop)]
        if evaluate.calls == calls:
            return  # converged: every donor agrees with every target, nothing left to mix
