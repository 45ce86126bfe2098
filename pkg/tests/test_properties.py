import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from evofeat.dataset import Dataset, Task, make_folds, split_train_test
from evofeat.exprtree import (GROW, ExprTree, Node, Op, PrimitiveSet, prefix_to_infix, sample_tree,
                              template_size, to_infix)
from evofeat.learners import macro_f1, r2
from evofeat.semantics import eval_tree

seeds = st.integers(0, 2**32 - 1)


@st.composite
def labels(draw):
    k = draw(st.integers(1, 5))
    n = draw(st.integers(1, 30))
    lab = st.lists(st.integers(0, k - 1), min_size=n, max_size=n)
    return np.array(draw(lab)), np.array(draw(lab)), k


@given(labels(), seeds)
def test_macro_f1_bounded_and_relabel_invariant(case, seed):
    pred, truth, k = case
    f = macro_f1(pred, truth, k)
    assert 0.0 <= f <= 1.0
    perm = np.random.default_rng(seed).permutation(k)
    assert abs(macro_f1(perm[pred], perm[truth], k) - f) < 1e-12
    order = np.random.default_rng(seed).permutation(len(pred))
    assert abs(macro_f1(pred[order], truth[order], k) - f) < 1e-12


@given(labels())
def test_macro_f1_perfect_when_all_present(case):
    _, truth, k = case
    assume(len(np.unique(truth)) == k)
    assert macro_f1(truth, truth, k) == 1.0


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(arrays(np.float64, st.integers(2, 30), elements=finite), seeds)
def test_r2_at_most_one(truth, seed):
    assume(np.var(truth) > 1e-6)
    pred = truth + np.random.default_rng(seed).normal(size=len(truth))
    assert r2(pred, truth) <= 1.0
    assert r2(truth, truth) == 1.0


@settings(max_examples=60)
@given(seeds, st.integers(0, 4), st.integers(1, 6))
def test_template_bounds_and_expressed_prefix_closure(seed, h, p):
    rng = np.random.default_rng(seed)
    prims = PrimitiveSet(p, -1.0, 1.0)
    t = ExprTree.from_node(sample_tree(GROW, 0, h, rng, prims), h, rng, prims)
    assert t.height() <= h and t.size() <= template_size(h)
    expressed = set(t.expressed_positions())
    assert 0 in expressed
    for i in expressed - {0}:
        assert (i - 1) // 2 in expressed


@settings(max_examples=60)
@given(seeds, st.integers(1, 3))
def test_introns_are_inert(seed, h):
    rng = np.random.default_rng(seed)
    prims = PrimitiveSet(3, -2.0, 2.0)
    X = rng.normal(size=(15, 3))
    t = ExprTree.from_node(sample_tree(GROW, 0, h, rng, prims), h, rng, prims)
    before = eval_tree(t, X)
    introns = sorted(set(range(t.n_positions)) - set(t.expressed_positions()))
    mutated = t.copy()
    for i in introns:
        mutated.kinds[i] = Op.CONST
        mutated.values[i] = rng.normal()
    np.testing.assert_array_equal(eval_tree(mutated, X), before)
    assert to_infix(mutated) == to_infix(t)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v != 0), min_size=2,
                max_size=2, unique=True))
def test_infix_distinguishes_constants(pair):
    a, b = pair
    assume(f"{a:.6g}" != f"{b:.6g}")
    assert to_infix(Node(Op.CONST, a)) != to_infix(Node(Op.CONST, b))


@settings(max_examples=40)
@given(seeds)
def test_infix_injective_on_structure(seed):
    rng = np.random.default_rng(seed)
    prims = PrimitiveSet(3, -1.0, 1.0)
    seen = {}
    for _ in range(30):
        nd = sample_tree(GROW, 0, 2, rng, prims)
        kinds, values = nd.prefix()
        key = (tuple(kinds.tolist()), tuple(f"{v:.6g}" if k == Op.CONST else v
                                          for k, v in zip(kinds.tolist(), values.tolist())))
        text = prefix_to_infix(kinds, values)
        assert seen.setdefault(text, key) == key


@settings(max_examples=50)
@given(st.integers(10, 80), st.floats(0.05, 0.6), seeds)
def test_split_partitions_rows(n, fraction, seed):
    assume(1 <= round(fraction * n) < n)
    ds = Dataset(np.arange(n, dtype=float)[:, None], np.arange(n, dtype=float), Task.REGRESSION)
    s = split_train_test(ds, fraction, seed)
    rows = np.concatenate([s.train_rows, s.test_rows])
    np.testing.assert_array_equal(np.sort(rows), np.arange(n))
    np.testing.assert_array_equal(s.test.features[:, 0], s.test_rows)
    again = split_train_test(ds, fraction, seed)
    np.testing.assert_array_equal(again.test_rows, s.test_rows)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 3), min_size=12, max_size=60), st.integers(2, 6), seeds)
def test_folds_are_stratified_and_balanced(y, C, seed):
    y = np.array(y)
    assume(C <= len(y))
    ds = Dataset(np.zeros((len(y), 1)), y, Task.CLASSIFICATION)
    folds = make_folds(ds, C, seed)
    sizes = np.bincount(folds.fold_of_row, minlength=C)
    assert sizes.max() - sizes.min() <= 1
    for c in range(ds.n_classes):
        per = np.bincount(folds.fold_of_row[ds.target == c], minlength=C)
        assert per.max() - per.min() <= 1
