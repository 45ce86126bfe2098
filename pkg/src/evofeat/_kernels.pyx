# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: tree evaluation, evaluation-skip checks, Gaussian NB,
CART construction and traversal.

Every function here has a behaviourally identical counterpart in
``_kernels_py``; ``evofeat.kernels`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs, isfinite, INFINITY, M_PI
from libc.stdlib cimport qsort, malloc, free
from libc.stdint cimport uint64_t

cnp.import_array()

# Opcodes, kept in sync with evofeat.exprtree.Op
cdef enum:
    OP_ADD = 0
    OP_MUL = 1
    OP_SUB = 2
    OP_AQ = 3
    OP_SQUARE = 4
    OP_SQRT = 5
    OP_LOG = 6
    OP_EXP = 7
    OP_FEATURE = 8
    OP_CONST = 9

# Verdict codes, kept in sync with evofeat.semantics.Verdict
cdef enum:
    V_VALID = 0
    V_CONSTANT = 1
    V_EXTREME = 2
    V_DUPLICATE = 3
    V_UNCHANGED = 4


def eval_prefix(const long[::1] kinds, const double[::1] values, const double[:, :] X):
    """Evaluate a prefix-ordered expression on every row of ``X``."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = kinds.shape[0]
    cdef Py_ssize_t row, i, top
    cdef double a, b
    cdef long k
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    if m == 0:
        raise ValueError("empty expression")
    cdef double* stack = <double*> malloc(m * sizeof(double))
    try:
        for row in range(n):
            top = 0
            for i in range(m - 1, -1, -1):
                k = kinds[i]
                if k == OP_FEATURE:
                    stack[top] = X[row, <Py_ssize_t> values[i]]
                    top += 1
                elif k == OP_CONST:
                    stack[top] = values[i]
                    top += 1
                elif k <= OP_AQ:
                    a = stack[top - 1]
                    b = stack[top - 2]
                    top -= 1
                    if k == OP_ADD:
                        stack[top - 1] = a + b
                    elif k == OP_MUL:
                        stack[top - 1] = a * b
                    elif k == OP_SUB:
                        stack[top - 1] = a - b
                    else:
                        stack[top - 1] = a / sqrt(1.0 + b * b)
                else:
                    a = stack[top - 1]
                    if k == OP_SQUARE:
                        stack[top - 1] = a * a
                    elif k == OP_SQRT:
                        stack[top - 1] = sqrt(fabs(a))
                    elif k == OP_LOG:
                        stack[top - 1] = 0.0 if a == 0.0 else log(fabs(a))
                    else:
                        stack[top - 1] = exp(a)
            res[row] = stack[0]
    finally:
        free(stack)
    return out


def criteria_verdict(const double[::1] v, const double[:, ::1] previous,
                     double beta_lo, double beta_hi, cached):
    """Ordered evaluation-skip checks; returns a verdict code."""
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i, j
    cdef double x, ax
    cdef bint same
    cdef const double[::1] c
    if n == 0:
        raise ValueError("empty feature vector")
    if previous.shape[0] > 0 and previous.shape[1] != n:
        raise ValueError("previous feature length mismatch")
    same = True
    for j in range(1, n):
        if v[j] != v[0]:
            same = False
            break
    if same:
        return V_CONSTANT
    for j in range(n):
        x = v[j]
        if not isfinite(x):
            return V_EXTREME
        ax = fabs(x)
        if ax > beta_hi or (ax != 0.0 and ax < beta_lo):
            return V_EXTREME
    for i in range(previous.shape[0]):
        same = True
        for j in range(n):
            if v[j] != previous[i, j]:
                same = False
                break
        if same:
            return V_DUPLICATE
    if cached is not None:
        c = cached
        if c.shape[0] != n:
            raise ValueError("cached feature length mismatch")
        for j in range(n):
            if v[j] != c[j]:
                return V_VALID
        return V_UNCHANGED
    return V_VALID


def gnb_fit(const double[:, :] X, const long[::1] y, Py_ssize_t n_classes, double var_smoothing):
    """Per-class means, smoothed variances and log priors."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double d, eps, tot, mu
    means_a = np.zeros((n_classes, p), dtype=np.float64)
    vars_a = np.zeros((n_classes, p), dtype=np.float64)
    counts_a = np.zeros(n_classes, dtype=np.float64)
    cdef double[:, ::1] means = means_a
    cdef double[:, ::1] var = vars_a
    cdef double[::1] counts = counts_a
    for i in range(n):
        c = y[i]
        counts[c] += 1.0
        for j in range(p):
            means[c, j] += X[i, j]
    for c in range(n_classes):
        if counts[c] > 0:
            for j in range(p):
                means[c, j] /= counts[c]
    for i in range(n):
        c = y[i]
        for j in range(p):
            d = X[i, j] - means[c, j]
            var[c, j] += d * d
    for c in range(n_classes):
        if counts[c] > 0:
            for j in range(p):
                var[c, j] /= counts[c]
    # smoothing floor from the largest overall feature variance
    eps = 0.0
    for j in range(p):
        mu = 0.0
        for i in range(n):
            mu += X[i, j]
        mu /= n
        tot = 0.0
        for i in range(n):
            d = X[i, j] - mu
            tot += d * d
        tot /= n
        if tot > eps:
            eps = tot
    eps *= var_smoothing
    if eps == 0.0:
        eps = var_smoothing
    log_prior_a = np.empty(n_classes, dtype=np.float64)
    cdef double[::1] log_prior = log_prior_a
    for c in range(n_classes):
        for j in range(p):
            if counts[c] > 0:
                var[c, j] += eps
            else:
                var[c, j] = 1.0
        log_prior[c] = log(counts[c] / n) if counts[c] > 0 else -INFINITY
    return means_a, vars_a, log_prior_a


def gnb_predict(const double[:, :] X, const double[:, ::1] means,
                const double[:, ::1] var, const double[::1] log_prior):
    """Arg-max joint log likelihood; ties resolve to the lowest class id."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t n_classes = means.shape[0]
    cdef Py_ssize_t i, j, c, best_c
    cdef double best, s, d
    if means.shape[1] != p:
        raise ValueError("column count differs from fit")
    norm_a = np.zeros(n_classes, dtype=np.float64)
    cdef double[::1] norm = norm_a
    for c in range(n_classes):
        for j in range(p):
            norm[c] += log(2.0 * M_PI * var[c, j])
        norm[c] *= -0.5
    out = np.empty(n, dtype=np.int64)
    cdef long[::1] pred = out
    for i in range(n):
        best = -INFINITY
        best_c = 0
        for c in range(n_classes):
            if log_prior[c] == -INFINITY:
                continue
            s = 0.0
            for j in range(p):
                d = X[i, j] - means[c, j]
                s += d * d / var[c, j]
            s = log_prior[c] + norm[c] - 0.5 * s
            if s > best:
                best = s
                best_c = c
        pred[i] = best_c
    return out


# ---------------------------------------------------------------- CART

cdef struct Pair:
    double v
    Py_ssize_t i

cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double x = (<Pair*> a).v
    cdef double y = (<Pair*> b).v
    if x < y:
        return -1
    if x > y:
        return 1
    return (<Pair*> a).i > (<Pair*> b).i


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t> 0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t> 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t> 0x94D049BB133111EB
    return z ^ (z >> 31)


def build_tree(const double[:, :] X, const double[::1] y, const long[::1] samples,
               bint classification, Py_ssize_t n_classes, Py_ssize_t min_node_size,
               Py_ssize_t mtry, uint64_t seed):
    """Grow one CART tree on ``samples`` (row ids, repeats allowed).

    Returns (feature, threshold, left, right, value) node arrays; leaves have
    feature == -1.
    """
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t cap = 2 * n + 1
    if mtry <= 0 or mtry > p:
        mtry = p
    feat_a = np.full(cap, -1, dtype=np.int64)
    thr_a = np.zeros(cap, dtype=np.float64)
    left_a = np.full(cap, -1, dtype=np.int64)
    right_a = np.full(cap, -1, dtype=np.int64)
    val_a = np.zeros(cap, dtype=np.float64)
    cdef long[::1] feat = feat_a
    cdef double[::1] thr = thr_a
    cdef long[::1] left = left_a
    cdef long[::1] right = right_a
    cdef double[::1] val = val_a

    idx_a = np.array(samples, dtype=np.int64)
    cdef long[::1] idx = idx_a
    # explicit stack of (node, start, stop)
    stack_a = np.empty((cap, 3), dtype=np.int64)
    cdef long[:, ::1] stack = stack_a
    cands_a = np.arange(p, dtype=np.int64)
    cdef long[::1] cands = cands_a
    chosen_a = np.empty(p, dtype=np.int64)
    cdef long[::1] chosen = chosen_a
    cnt_tot_a = np.zeros(max(n_classes, 1), dtype=np.float64)
    cnt_l_a = np.zeros(max(n_classes, 1), dtype=np.float64)
    cdef double[::1] cnt_tot = cnt_tot_a
    cdef double[::1] cnt_l = cnt_l_a
    cdef Pair* pairs = <Pair*> malloc(max(n, 1) * sizeof(Pair))
    cdef long* scratch = <long*> malloc(max(n, 1) * sizeof(long))
    cdef uint64_t state = seed
    cdef Py_ssize_t sp = 0, n_nodes = 1
    cdef Py_ssize_t node, start, stop, m, i, j, f, c, r, t, best_f, cut, nl, nr
    cdef double best_score, score, sl, sr, tot, mid, lo, hi, best_thr, pure_v
    cdef bint pure
    cdef long tmp
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    sp = 1
    try:
        while sp > 0:
            sp -= 1
            node = stack[sp, 0]
            start = stack[sp, 1]
            stop = stack[sp, 2]
            m = stop - start
            # leaf value
            if classification:
                for c in range(n_classes):
                    cnt_tot[c] = 0.0
                for i in range(start, stop):
                    cnt_tot[<Py_ssize_t> y[idx[i]]] += 1.0
                best_f = 0
                for c in range(1, n_classes):
                    if cnt_tot[c] > cnt_tot[best_f]:
                        best_f = c
                val[node] = best_f
                pure = cnt_tot[best_f] == m
            else:
                tot = 0.0
                for i in range(start, stop):
                    tot += y[idx[i]]
                val[node] = tot / m
                pure = True
                pure_v = y[idx[start]]
                for i in range(start + 1, stop):
                    if y[idx[i]] != pure_v:
                        pure = False
                        break
            if pure or m <= min_node_size:
                continue
            # candidate features: partial Fisher-Yates over 0..p-1
            for j in range(p):
                cands[j] = j
            for j in range(mtry):
                r = j + <Py_ssize_t> (_splitmix(&state) % <uint64_t> (p - j))
                tmp = cands[j]
                cands[j] = cands[r]
                cands[r] = tmp
                chosen[j] = cands[j]
            # ascending feature order for deterministic tie-breaking
            for j in range(1, mtry):
                tmp = chosen[j]
                i = j - 1
                while i >= 0 and chosen[i] > tmp:
                    chosen[i + 1] = chosen[i]
                    i -= 1
                chosen[i + 1] = tmp
            best_f = -1
            best_score = -INFINITY
            best_thr = 0.0
            for j in range(mtry):
                f = chosen[j]
                for i in range(m):
                    pairs[i].v = X[idx[start + i], f]
                    pairs[i].i = idx[start + i]
                qsort(pairs, m, sizeof(Pair), _cmp_pair)
                if pairs[0].v == pairs[m - 1].v:
                    continue
                if classification:
                    for c in range(n_classes):
                        cnt_l[c] = 0.0
                else:
                    sl = 0.0
                for i in range(m - 1):
                    if classification:
                        cnt_l[<Py_ssize_t> y[pairs[i].i]] += 1.0
                    else:
                        sl += y[pairs[i].i]
                    if pairs[i].v == pairs[i + 1].v:
                        continue
                    nl = i + 1
                    nr = m - nl
                    if classification:
                        score = 0.0
                        sr = 0.0
                        for c in range(n_classes):
                            score += cnt_l[c] * cnt_l[c] / nl
                            sr = cnt_tot[c] - cnt_l[c]
                            score += sr * sr / nr
                    else:
                        sr = tot - sl
                        score = sl * sl / nl + sr * sr / nr
                    if score > best_score:
                        best_score = score
                        best_f = f
                        lo = pairs[i].v
                        hi = pairs[i + 1].v
                        mid = lo + (hi - lo) / 2.0
                        if not (mid < hi):
                            mid = lo
                        best_thr = mid
            if best_f < 0:
                continue
            # partition idx[start:stop] by x <= thr, stable
            nl = 0
            cut = 0
            for i in range(start, stop):
                if X[idx[i], best_f] <= best_thr:
                    idx[start + nl] = idx[i]
                    nl += 1
                else:
                    scratch[cut] = idx[i]
                    cut += 1
            for i in range(cut):
                idx[start + nl + i] = scratch[i]
            feat[node] = best_f
            thr[node] = best_thr
            left[node] = n_nodes
            right[node] = n_nodes + 1
            # push right first so the left subtree is processed first
            stack[sp, 0] = n_nodes + 1
            stack[sp, 1] = start + nl
            stack[sp, 2] = stop
            sp += 1
            stack[sp, 0] = n_nodes
            stack[sp, 1] = start
            stack[sp, 2] = start + nl
            sp += 1
            n_nodes += 2
    finally:
        free(pairs)
        free(scratch)
    return (feat_a[:n_nodes].copy(), thr_a[:n_nodes].copy(), left_a[:n_nodes].copy(),
            right_a[:n_nodes].copy(), val_a[:n_nodes].copy())


def tree_apply(const double[:, :] X, const long[::1] feature, const double[::1] threshold,
               const long[::1] left, const long[::1] right):
    """Leaf node id reached by each row."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i, node
    out = np.empty(n, dtype=np.int64)
    cdef long[::1] leaf = out
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        leaf[i] = node
    return out
