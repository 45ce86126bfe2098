"""Pure-Python/numpy counterparts of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built, or when ``EVOFEAT_PURE_PYTHON`` is set.
Results match the compiled versions up to floating-point summation order.
"""
import numpy as np

OP_ADD, OP_MUL, OP_SUB, OP_AQ, OP_SQUARE, OP_SQRT, OP_LOG, OP_EXP, OP_FEATURE, OP_CONST = range(10)
V_VALID, V_CONSTANT, V_EXTREME, V_DUPLICATE, V_UNCHANGED = range(5)

_MASK64 = (1 << 64) - 1


def eval_prefix(kinds, values, X):
    kinds = np.asarray(kinds)
    values = np.asarray(values, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if len(kinds) == 0:
        raise ValueError("empty expression")
    n = X.shape[0]
    stack = []
    with np.errstate(all="ignore"):
        for i in range(len(kinds) - 1, -1, -1):
            k = kinds[i]
            if k == OP_FEATURE:
                stack.append(X[:, int(values[i])].astype(np.float64, copy=True))
            elif k == OP_CONST:
                stack.append(np.full(n, values[i]))
            elif k <= OP_AQ:
                a = stack.pop()
                b = stack.pop()
                if k == OP_ADD:
                    stack.append(a + b)
                elif k == OP_MUL:
                    stack.append(a * b)
                elif k == OP_SUB:
                    stack.append(a - b)
                else:
                    stack.append(a / np.sqrt(1.0 + b * b))
            else:
                a = stack.pop()
                if k == OP_SQUARE:
                    stack.append(a * a)
                elif k == OP_SQRT:
                    stack.append(np.sqrt(np.abs(a)))
                elif k == OP_LOG:
                    out = np.zeros_like(a)
                    nz = a != 0.0
                    out[nz] = np.log(np.abs(a[nz]))
                    stack.append(out)
                else:
                    stack.append(np.exp(a))
    return stack[0]


def criteria_verdict(v, previous, beta_lo, beta_hi, cached):
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    if n == 0:
        raise ValueError("empty feature vector")
    previous = np.asarray(previous, dtype=np.float64)
    if previous.shape[0] > 0 and previous.shape[1] != n:
        raise ValueError("previous feature length mismatch")
    if np.all(v == v[0]):
        return V_CONSTANT
    if not np.all(np.isfinite(v)):
        return V_EXTREME
    av = np.abs(v)
    if np.any(av > beta_hi) or np.any((av != 0.0) & (av < beta_lo)):
        return V_EXTREME
    for row in previous:
        if np.array_equal(v, row):
            return V_DUPLICATE
    if cached is not None:
        cached = np.asarray(cached, dtype=np.float64)
        if cached.shape[0] != n:
            raise ValueError("cached feature length mismatch")
        return V_UNCHANGED if np.array_equal(v, cached) else V_VALID
    return V_VALID


def gnb_fit(X, y, n_classes, var_smoothing):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n, p = X.shape
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    means = np.zeros((n_classes, p))
    var = np.zeros((n_classes, p))
    for c in range(n_classes):
        if counts[c] > 0:
            rows = X[y == c]
            means[c] = rows.mean(axis=0)
            var[c] = ((rows - means[c]) ** 2).mean(axis=0)
    eps = var_smoothing * float(X.var(axis=0).max()) if p else 0.0
    if eps == 0.0:
        eps = var_smoothing
    present = counts > 0
    var[present] += eps
    var[~present] = 1.0
    with np.errstate(divide="ignore"):
        log_prior = np.where(present, np.log(counts / n), -np.inf)
    return means, var, log_prior


def gnb_predict(X, means, var, log_prior):
    X = np.asarray(X, dtype=np.float64)
    if means.shape[1] != X.shape[1]:
        raise ValueError("column count differs from fit")
    norm = -0.5 * np.log(2.0 * np.pi * var).sum(axis=1)
    diff = X[:, None, :] - means[None, :, :]
    jll = log_prior[None, :] + norm[None, :] - 0.5 * (diff * diff / var[None, :, :]).sum(axis=2)
    jll[:, log_prior == -np.inf] = -np.inf
    return np.argmax(jll, axis=1).astype(np.int64)


def _splitmix(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def build_tree(X, y, samples, classification, n_classes, min_node_size, mtry, seed):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    idx = np.array(samples, dtype=np.int64)
    n = len(idx)
    p = X.shape[1]
    if mtry <= 0 or mtry > p:
        mtry = p
    feat, thr, left, right, val = [-1], [0.0], [-1], [-1], [0.0]
    state = seed & _MASK64
    stack = [(0, 0, n)]
    while stack:
        node, start, stop = stack.pop()
        rows = idx[start:stop]
        m = stop - start
        ys = y[rows]
        if classification:
            cnt_tot = np.bincount(ys.astype(np.int64), minlength=n_classes).astype(np.float64)
            majority = int(np.argmax(cnt_tot))
            val[node] = float(majority)
            pure = cnt_tot[majority] == m
        else:
            tot = 0.0
            for v in ys:
                tot += v
            val[node] = tot / m
            pure = bool(np.all(ys == ys[0]))
        if pure or m <= min_node_size:
            continue
        cands = list(range(p))
        chosen = []
        for j in range(mtry):
            state, z = _splitmix(state)
            r = j + z % (p - j)
            cands[j], cands[r] = cands[r], cands[j]
            chosen.append(cands[j])
        chosen.sort()
        best_f, best_score, best_thr = -1, -np.inf, 0.0
        for f in chosen:
            xs = X[rows, f]
            order = np.lexsort((rows, xs))
            sv = xs[order]
            if sv[0] == sv[-1]:
                continue
            sy = ys[order]
            distinct = np.nonzero(sv[:-1] != sv[1:])[0]
            nl = (distinct + 1).astype(np.float64)
            nr = m - nl
            if classification:
                onehot = np.zeros((m, n_classes))
                onehot[np.arange(m), sy.astype(np.int64)] = 1.0
                cl = np.cumsum(onehot, axis=0)[distinct]
                cr = cnt_tot[None, :] - cl
                scores = np.zeros(len(distinct))
                for c in range(n_classes):
                    scores += cl[:, c] * cl[:, c] / nl
                    scores += cr[:, c] * cr[:, c] / nr
            else:
                sl = np.cumsum(sy)[distinct]
                sr = tot - sl
                scores = sl * sl / nl + sr * sr / nr
            i = int(np.argmax(scores))
            if scores[i] > best_score:
                best_score = float(scores[i])
                best_f = f
                lo = sv[distinct[i]]
                hi = sv[distinct[i] + 1]
                mid = lo + (hi - lo) / 2.0
                best_thr = mid if mid < hi else lo
        if best_f < 0:
            continue
        goes_left = X[rows, best_f] <= best_thr
        nl = int(goes_left.sum())
        idx[start:stop] = np.concatenate([rows[goes_left], rows[~goes_left]])
        left_id, right_id = len(feat), len(feat) + 1
        feat[node], thr[node], left[node], right[node] = best_f, best_thr, left_id, right_id
        for _ in range(2):
            feat.append(-1)
            thr.append(0.0)
            left.append(-1)
            right.append(-1)
            val.append(0.0)
        stack.append((right_id, start + nl, stop))
        stack.append((left_id, start, start + nl))
    return (np.array(feat, dtype=np.int64), np.array(thr), np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64), np.array(val))


def tree_apply(X, feature, threshold, left, right):
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    while np.any(active):
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, feature[cur]] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        active = feature[node] >= 0
    return node
