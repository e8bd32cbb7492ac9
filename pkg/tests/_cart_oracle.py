"""Reference CART regression tree: exhaustive greedy splits in plain Python.

Deliberately dumb and slow. Mirrors the documented split conventions
(midpoint thresholds between consecutive distinct sorted values, variance
reduction objective, ties to the lowest feature index then lowest threshold,
x <= threshold routed left) so its training-set predictions can be compared
exactly against the package's single-tree forest with bootstrap off and all
features considered at every node.
"""

from __future__ import annotations

import numpy as np


class OracleNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = 0.0


def _split_candidates(xs: list[float]):
    """(threshold, left_count) for every boundary between distinct values of
    the sorted feature column."""
    out = []
    for k in range(len(xs) - 1):
        a, b = xs[k], xs[k + 1]
        if a < b:
            thr = a + (b - a) / 2
            if thr >= b:
                thr = a
            out.append((thr, k + 1))
    return out


def _sse_after(ys: list[float], left_count: int) -> float:
    # running sums accumulated left to right, same association order as a
    # sequential cumsum, so equal inputs give bit-equal objective values
    s1 = 0.0
    s2 = 0.0
    for v in ys[:left_count]:
        s1 += v
        s2 += v * v
    t1, t2 = s1, s2
    for v in ys[left_count:]:
        t1 += v
        t2 += v * v
    nl = float(left_count)
    nr = float(len(ys) - left_count)
    return (s2 - s1 * s1 / nl) + ((t2 - s2) - (t1 - s1) * (t1 - s1) / nr)


def build_oracle_tree(X, y) -> OracleNode:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    def grow(rows: list[int]) -> OracleNode:
        node = OracleNode()
        targets = [y[r] for r in rows]
        if len(rows) < 2 or all(t == targets[0] for t in targets):
            node.value = float(np.mean(np.array(targets)))
            return node

        best = None  # (sse, feature, threshold, left_count, order)
        for f in range(X.shape[1]):
            order = sorted(range(len(rows)), key=lambda i: X[rows[i], f])
            xs = [X[rows[i], f] for i in order]
            ys = [y[rows[i]] for i in order]
            for thr, lc in _split_candidates(xs):
                sse = _sse_after(ys, lc)
                if best is None or sse < best[0]:
                    best = (sse, f, thr, lc, order)
        if best is None:
            node.value = float(np.mean(np.array(targets)))
            return node

        _, f, thr, _, _ = best
        lrows = [r for r in rows if X[r, f] <= thr]
        rrows = [r for r in rows if X[r, f] > thr]
        node.feature = f
        node.threshold = thr
        node.left = grow(lrows)
        node.right = grow(rrows)
        return node

    return grow(list(range(len(y))))


def oracle_predict_one(node: OracleNode, x) -> float:
    while node.feature >= 0:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.value


def oracle_predict(node: OracleNode, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([oracle_predict_one(node, row) for row in X])
