"""Tree evaluation with protected primitives and the evaluation-skip checks."""
from __future__ import annotations

import math
from enum import IntEnum

import numpy as np

from . import kernels
from .exprtree import ARITY, Op

BETA_LO = 1e-10
BETA_HI = 1e10


class Verdict(IntEnum):
    VALID = 0
    CONSTANT = 1
    EXTREME = 2
    DUPLICATE = 3
    UNCHANGED = 4


def apply_primitive(kind, a: float, b: float | None = None) -> float:
    """Scalar semantics of one primitive (total on finite inputs)."""
    kind = Op(kind)
    if ARITY[kind] == 2 and b is None:
        raise ValueError(f"{kind.name} takes two operands")
    if kind == Op.ADD:
        return a + b
    if kind == Op.MUL:
        return a * b
    if kind == Op.SUB:
        return a - b
    if kind == Op.AQ_DIV:
        return a / math.sqrt(1.0 + b * b)
    if kind == Op.SQUARE:
        return a * a
    if kind == Op.SQRT_P:
        return math.sqrt(abs(a))
    if kind == Op.LOG_P:
        return 0.0 if a == 0 else math.log(abs(a))
    if kind == Op.EXP:
        try:
            return math.exp(a)
        except OverflowError:
            return math.inf
    raise ValueError(f"{kind.name} is a terminal")


def eval_tree(tree, X) -> np.ndarray:
    """Feature values of ``tree`` on each row of ``X`` (original columns first).

    Accepts an :class:`~evofeat.exprtree.ExprTree`, a
    :class:`~evofeat.exprtree.Node`, or a ``Dataset``-like object with a
    ``original_features`` attribute in place of ``X``.
    """
    if hasattr(X, "original_features"):
        X = X.original_features
    kinds, values = tree.prefix()
    feat = kinds == Op.FEATURE
    if feat.any() and (values[feat].max() >= X.shape[1] or values[feat].min() < 0):
        raise IndexError(f"feature index out of range for {X.shape[1]} columns")
    return kernels.eval_prefix(kinds, values, X)


def check_criteria(v, previous=None, beta_lo: float = BETA_LO, beta_hi: float = BETA_HI,
                   cached=None) -> Verdict:
    """Apply, in order: not constant, no extreme values, not a duplicate of a
    previously constructed feature, changed since the cached evaluation.

    ``previous`` is a sequence (or k x n matrix) of earlier constructed
    feature vectors.  Duplicates use exact equality.  Zeros never count as
    extreme; other magnitudes outside ``[beta_lo, beta_hi]`` and non-finite
    values do.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    if previous is None or len(previous) == 0:
        prev = np.empty((0, len(v)))
    else:
        prev = np.ascontiguousarray(np.atleast_2d(np.asarray(previous, dtype=np.float64)))
    if cached is not None:
        cached = np.ascontiguousarray(cached, dtype=np.float64)
    return Verdict(kernels.criteria_verdict(v, prev, beta_lo, beta_hi, cached))


class OutputCache:
    """Last accepted output (and error) per individual slot."""

    def __init__(self):
        self._outputs: dict = {}

    def get(self, slot):
        return self._outputs.get(slot)

    def put(self, slot, output: np.ndarray, error: float):
        self._outputs[slot] = (output, error)

    def __len__(self):
        return len(self._outputs)
