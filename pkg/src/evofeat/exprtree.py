"""Expression-tree genotypes for constructed features.

Two representations share one primitive set:

* :class:`ExprTree` is a fixed-height template laid out as a complete binary
  heap (children of position ``i`` are ``2i+1`` and ``2i+2``).  Positions not
  reached from the root are introns.  Used by GP-GOMEA.
* :class:`Node` is an ordinary recursive tree of unbounded shape, used by
  standard GP, its bounded variant and random search.

Both flatten to a prefix (kinds, values) pair, which is what gets evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Op(IntEnum):
    ADD = 0
    MUL = 1
    SUB = 2
    AQ_DIV = 3
    SQUARE = 4
    SQRT_P = 5
    LOG_P = 6
    EXP = 7
    FEATURE = 8
    CONST = 9


ARITY = np.array([2, 2, 2, 2, 1, 1, 1, 1, 0, 0], dtype=np.int64)
FUNCTIONS = (Op.ADD, Op.MUL, Op.SUB, Op.AQ_DIV, Op.SQUARE, Op.SQRT_P, Op.LOG_P, Op.EXP)
_FUNC_CODES = np.array([int(f) for f in FUNCTIONS], dtype=np.int64)

GROW = "grow"
FULL = "full"
DYN_MAX_HEIGHT = 17


@dataclass(frozen=True)
class PrimitiveSet:
    """Function set plus terminals: ``n_features`` original columns and one ERC.

    Terminal choice is uniform over the features and the ERC; an ERC draws a
    fresh constant uniformly from ``[erc_lo, erc_hi]``.
    """

    n_features: int
    erc_lo: float
    erc_hi: float
    function_prob: float = 0.5

    def random_function(self, rng) -> int:
        return int(_FUNC_CODES[rng.integers(len(_FUNC_CODES))])

    def random_terminal(self, rng) -> tuple[int, float]:
        j = int(rng.integers(self.n_features + 1))
        if j < self.n_features:
            return int(Op.FEATURE), float(j)
        return int(Op.CONST), float(rng.uniform(self.erc_lo, self.erc_hi))

    def random_primitive(self, rng, allow_function: bool = True) -> tuple[int, float]:
        if allow_function and rng.random() < self.function_prob:
            return self.random_function(rng), 0.0
        return self.random_terminal(rng)


# ----------------------------------------------------------------- prefix helpers

def prefix_height(kinds) -> int:
    """Height (edges) of the tree encoded by a prefix kind sequence."""
    best = 0
    depths = [0]
    for k in kinds:
        d = depths.pop()
        best = max(best, d)
        depths.extend([d + 1] * int(ARITY[k]))
    return best


def _const_text(v: float) -> str:
    s = f"{v:.6g}"
    return f"({s})" if s.startswith("-") else s


def prefix_to_infix(kinds, values, expand_protected: bool = False, names=None) -> str:
    """Parenthesised infix text; features print as ``x1..xp`` unless ``names`` given."""
    pos = 0

    def walk() -> tuple[str, bool]:
        # returns (text, is_atom)
        nonlocal pos
        k = int(kinds[pos])
        v = values[pos]
        pos += 1
        if k == Op.FEATURE:
            j = int(v)
            return (names[j] if names is not None else f"x{j + 1}"), True
        if k == Op.CONST:
            return _const_text(v), True
        if ARITY[k] == 1:
            a, a_atom = walk()
            if k == Op.SQUARE:
                return f"{a if a_atom else '(' + a + ')'}^2", False
            if k == Op.SQRT_P:
                return (f"sqrt(|{a}|)" if expand_protected else f"sqrt({a})"), True
            if k == Op.LOG_P:
                return (f"log(|{a}|)" if expand_protected else f"logp({a})"), True
            return f"exp({a})", True
        a, a_atom = walk()
        b, b_atom = walk()
        a = a if a_atom else f"({a})"
        b_w = b if b_atom else f"({b})"
        if k == Op.ADD:
            return f"{a} + {b_w}", False
        if k == Op.SUB:
            return f"{a} - {b_w}", False
        if k == Op.MUL:
            return f"{a} * {b_w}", False
        if expand_protected:
            sq = f"{b_w}^2"
            return f"{a} / sqrt(1 + {sq})", False
        return f"{a} div {b_w}", False

    text, _ = walk()
    return text


# ----------------------------------------------------------------- dynamic trees

class Node:
    """Recursive expression node; ``value`` is the column index or constant."""

    __slots__ = ("kind", "value", "children")

    def __init__(self, kind: int, value: float = 0.0, children=None):
        self.kind = int(kind)
        self.value = float(value)
        self.children = list(children) if children else []

    def copy(self) -> Node:
        return Node(self.kind, self.value, [c.copy() for c in self.children])

    def prefix(self) -> tuple[np.ndarray, np.ndarray]:
        kinds, values = [], []
        stack = [self]
        while stack:
            nd = stack.pop()
            kinds.append(nd.kind)
            values.append(nd.value)
            stack.extend(reversed(nd.children))
        return np.array(kinds, dtype=np.int64), np.array(values, dtype=np.float64)

    def walk(self, depth: int = 0):
        """Preorder ``(node, parent, child_index, depth)`` tuples."""
        stack = [(self, None, -1, depth)]
        while stack:
            nd, parent, ci, d = stack.pop()
            yield nd, parent, ci, d
            for i in range(len(nd.children) - 1, -1, -1):
                stack.append((nd.children[i], nd, i, d + 1))

    def height(self) -> int:
        return max(d for _, _, _, d in self.walk())

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def key(self) -> tuple:
        kinds, values = self.prefix()
        return tuple(zip(kinds.tolist(), values.tolist()))

    def to_infix(self, expand_protected: bool = False, names=None) -> str:
        return prefix_to_infix(*self.prefix(), expand_protected=expand_protected, names=names)

    def __repr__(self):
        return f"Node({self.to_infix()!r})"


def sample_tree(method: str, min_height: int, max_height: int, rng, primitives: PrimitiveSet) -> Node:
    """Grow or full random tree.

    FULL puts functions at every depth below ``max_height``; GROW forces
    functions above ``min_height`` and chooses freely (``function_prob``)
    between ``min_height`` and ``max_height``.  Terminals sit at ``max_height``.
    """
    if not 0 <= min_height <= max_height:
        raise ValueError("need 0 <= min_height <= max_height")

    def build(depth: int) -> Node:
        if depth >= max_height:
            return Node(*primitives.random_terminal(rng))
        if method == FULL or depth < min_height:
            k = primitives.random_function(rng)
        else:
            k, v = primitives.random_primitive(rng)
            if ARITY[k] == 0:
                return Node(k, v)
        return Node(k, 0.0, [build(depth + 1) for _ in range(ARITY[k])])

    if method not in (GROW, FULL):
        raise ValueError(f"unknown init method {method!r}")
    return build(0)


def init_population(size: int, scheme, rng, primitives: PrimitiveSet,
                    uniqueness_tries: int = 100, grow_min_height: int = 0) -> list[Node]:
    """Half-and-half (``("HH", h)``) or ramped half-and-half (``("RHH", lo, hi)``).

    Even slots use GROW and odd slots FULL.  A tree whose expressed node
    sequence already occurs is re-sampled up to ``uniqueness_tries`` times and
    then accepted as is.
    """
    if size < 1:
        raise ValueError("population size must be positive")
    if scheme[0] == "HH":
        heights = [scheme[1]] * size
    elif scheme[0] == "RHH":
        lo, hi = scheme[1], scheme[2]
        levels = list(range(lo, hi + 1))
        heights = [levels[(i // 2) % len(levels)] for i in range(size)]
    else:
        raise ValueError(f"unknown init scheme {scheme!r}")
    seen: set = set()
    pop = []
    for i in range(size):
        method = GROW if i % 2 == 0 else FULL
        h = heights[i]
        min_h = min(grow_min_height, h) if method == GROW else 0
        tree = sample_tree(method, min_h, h, rng, primitives)
        for _ in range(uniqueness_tries):
            if tree.key() not in seen:
                break
            tree = sample_tree(method, min_h, h, rng, primitives)
        seen.add(tree.key())
        pop.append(tree)
    return pop


# ----------------------------------------------------------------- template trees

def template_size(h: int) -> int:
    return 2 ** (h + 1) - 1


def position_depth(i: int) -> int:
    return int(np.floor(np.log2(i + 1)))


class ExprTree:
    """Fixed-height binary template over ``2**(h+1) - 1`` positions.

    Unary primitives use only the left child slot; the right slot stays an
    intron so that positions remain homologous across the population.
    Positions at depth ``h`` always hold terminals.
    """

    __slots__ = ("kinds", "values", "h")

    def __init__(self, kinds, values, h: int):
        self.kinds = np.asarray(kinds, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self.h = h
        if len(self.kinds) != template_size(h) or len(self.values) != len(self.kinds):
            raise ValueError("template arrays have the wrong length")

    @classmethod
    def from_node(cls, node: Node, h: int, rng, primitives: PrimitiveSet) -> ExprTree:
        """Embed ``node`` (height <= h) and fill every other position at random."""
        n = template_size(h)
        first_leaf = template_size(h - 1) if h > 0 else 0
        kinds = np.empty(n, dtype=np.int64)
        values = np.zeros(n, dtype=np.float64)
        for i in range(n):
            k, v = primitives.random_primitive(rng, allow_function=i < first_leaf)
            kinds[i], values[i] = k, v
        stack = [(node, 0)]
        while stack:
            nd, i = stack.pop()
            if i >= n:
                raise ValueError(f"tree of height {node.height()} does not fit template height {h}")
            kinds[i], values[i] = nd.kind, nd.value
            for ci, child in enumerate(nd.children):
                stack.append((child, 2 * i + 1 + ci))
        return cls(kinds, values, h)

    def copy(self) -> ExprTree:
        return ExprTree(self.kinds.copy(), self.values.copy(), self.h)

    @property
    def n_positions(self) -> int:
        return len(self.kinds)

    def expressed_positions(self) -> list[int]:
        """Preorder positions reachable from the root via arity-many children."""
        out = []
        stack = [0]
        while stack:
            i = stack.pop()
            out.append(i)
            a = ARITY[self.kinds[i]]
            if a == 2:
                stack.append(2 * i + 2)
            if a >= 1:
                stack.append(2 * i + 1)
        return out

    def prefix(self) -> tuple[np.ndarray, np.ndarray]:
        pos = self.expressed_positions()
        return self.kinds[pos], self.values[pos]

    def height(self) -> int:
        return max(position_depth(i) for i in self.expressed_positions())

    def size(self) -> int:
        return len(self.expressed_positions())

    def key(self) -> tuple:
        kinds, values = self.prefix()
        return tuple(zip(kinds.tolist(), values.tolist()))

    def to_node(self) -> Node:
        def build(i: int) -> Node:
            k = int(self.kinds[i])
            children = [build(2 * i + 1 + c) for c in range(ARITY[k])]
            return Node(k, self.values[i], children)

        return build(0)

    def to_infix(self, expand_protected: bool = False, names=None) -> str:
        return prefix_to_infix(*self.prefix(), expand_protected=expand_protected, names=names)

    def __repr__(self):
        return f"ExprTree(h={self.h}, {self.to_infix()!r})"


def height(tree) -> int:
    return tree.height()


def size(tree) -> int:
    return tree.size()


def expressed_positions(tree: ExprTree) -> list[int]:
    return tree.expressed_positions()


def to_infix(tree, expand_protected: bool = False, names=None) -> str:
    return tree.to_infix(expand_protected=expand_protected, names=names)
