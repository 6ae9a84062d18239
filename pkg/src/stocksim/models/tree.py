"""Weighted CART trees (variance or Gini impurity).

The builder is a numba kernel working on flat node arrays; ``TreeNode`` is
only materialized on request for inspection and dumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from stocksim.errors import InsufficientDataError

MSE = 0
GINI = 1


@numba.njit(cache=True)
def _impurity(W, WY, WYY, criterion):
    if W <= 0.0:
        return 0.0
    if criterion == MSE:
        v = WYY - WY * WY / W
        return v if v > 0.0 else 0.0
    return 2.0 * WY * (W - WY) / W


@numba.njit(cache=True)
def _build(X, y, w, criterion, max_depth, min_leaf, max_features, seed, presorted):
    n, p = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    weight = np.zeros(cap)

    idx = np.arange(n)
    buf = np.empty(n, dtype=np.int64)
    vals = np.empty(n)
    rs = np.empty(n, dtype=np.int64)
    where = np.zeros(n, dtype=np.int64)
    # big nodes filter the global column order; small ones sort locally
    big = max(n // 16, 32)
    np.random.seed(seed)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, n, 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        m = end - start
        W = 0.0
        WY = 0.0
        WYY = 0.0
        for r in range(start, end):
            i = idx[r]
            W += w[i]
            WY += w[i] * y[i]
            WYY += w[i] * y[i] * y[i]
        value[node] = WY / W if W > 0.0 else 0.0
        weight[node] = W
        parent = _impurity(W, WY, WYY, criterion)
        # impurities come from differences of sums of size ~WYY, so gains that
        # differ by less than this are ties decided by the tie-break rule
        tol = 1e-12 * (abs(parent) + abs(WYY) + 1e-300)
        if m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth) or parent <= 1e-14 * W:
            continue

        if max_features < p:
            order = np.random.permutation(p)
        else:
            order = np.arange(p)

        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        evaluated = 0
        for oi in range(p):
            if evaluated >= max_features:
                break
            f = order[oi]
            if m >= big:
                cnt = 0
                for q in range(n):
                    i = presorted[f, q]
                    if where[i] == node:
                        rs[cnt] = i
                        cnt += 1
            else:
                for r in range(m):
                    vals[r] = X[idx[start + r], f]
                srt = np.argsort(vals[:m], kind="mergesort")
                for r in range(m):
                    rs[r] = idx[start + srt[r]]
            if X[rs[0], f] == X[rs[m - 1], f]:
                continue
            evaluated += 1
            lw = 0.0
            lwy = 0.0
            lwyy = 0.0
            for r in range(m - 1):
                i = rs[r]
                lw += w[i]
                lwy += w[i] * y[i]
                lwyy += w[i] * y[i] * y[i]
                v0 = X[i, f]
                v1 = X[rs[r + 1], f]
                if v0 == v1:
                    continue
                nl = r + 1
                if nl < min_leaf or m - nl < min_leaf:
                    continue
                rw = W - lw
                if lw <= 0.0 or rw <= 0.0:
                    continue
                child = _impurity(lw, lwy, lwyy, criterion) + _impurity(rw, WY - lwy, WYY - lwyy, criterion)
                gain = parent - child
                thr = 0.5 * (v0 + v1)
                if thr >= v1:
                    thr = v0
                if gain > best_gain + tol:
                    best_gain, best_f, best_thr = gain, f, thr
                elif best_f >= 0 and gain >= best_gain - tol:
                    if f < best_f or (f == best_f and thr < best_thr):
                        best_gain, best_f, best_thr = gain, f, thr
        if best_f < 0 or best_gain <= tol:
            continue

        # stable partition of idx[start:end]
        nl = 0
        for r in range(start, end):
            if X[idx[r], best_f] <= best_thr:
                buf[nl] = idx[r]
                nl += 1
        k = nl
        for r in range(start, end):
            if X[idx[r], best_f] > best_thr:
                buf[k] = idx[r]
                k += 1
        li, ri = n_nodes, n_nodes + 1
        for r in range(m):
            idx[start + r] = buf[r]
            where[buf[r]] = li if r < nl else ri

        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = li
        right[node] = ri
        st_node[top], st_start[top], st_end[top], st_depth[top] = ri, start + nl, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = li, start, start + nl, depth + 1
        top += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes], weight[:n_nodes])


@numba.njit(cache=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@dataclass(frozen=True)
class TreeNode:
    feature: int
    threshold: float
    left: "TreeNode | None"
    right: "TreeNode | None"
    value: float

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat array form of a fitted tree. ``value`` is the leaf mean target
    (regression) or the share of class 1 (classification)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _apply(self.feature, self.threshold, self.left, self.right, X)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def with_values(self, value: np.ndarray) -> "Tree":
        return Tree(self.feature, self.threshold, self.left, self.right, value, self.weight)

    def root(self) -> TreeNode:
        def node(i):
            if self.feature[i] < 0:
                return TreeNode(-1, float("nan"), None, None, float(self.value[i]))
            return TreeNode(int(self.feature[i]), float(self.threshold[i]),
                            node(self.left[i]), node(self.right[i]), float(self.value[i]))
        return node(0)

    def same_structure(self, other: "Tree") -> bool:
        return (
            np.array_equal(self.feature, other.feature)
            and np.array_equal(self.threshold, other.threshold)
            and np.array_equal(self.left, other.left)
            and np.array_equal(self.right, other.right)
        )

    def dump(self) -> str:
        """One node per line: ``id feature threshold left right value``."""
        lines = []
        for i in range(self.n_nodes):
            lines.append(
                f"{i} {self.feature[i]} {float(self.threshold[i])!r} {self.left[i]} "
                f"{self.right[i]} {float(self.value[i])!r}"
            )
        return "\n".join(lines)


def presort(X) -> np.ndarray:
    """Row order of every column, shape ``(n_features, n_rows)``."""
    X = np.asarray(X, dtype=np.float64)
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))


def fit_tree(
    X,
    y,
    weights=None,
    classifier: bool = False,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    seed: int = 0,
    presorted=None,
) -> Tree:
    """Greedy binary tree minimizing weighted variance or weighted Gini.

    Classification targets must be 0/1. Ties between equally good splits go
    to the lowest feature index, then the lowest threshold. ``min_samples_leaf``
    counts rows, not weight.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InsufficientDataError("cannot fit a tree on an empty matrix")
    if len(y) != X.shape[0]:
        raise ValueError("X and y lengths differ")
    w = np.ones(len(y)) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be non-negative and not all zero")
    p = X.shape[1]
    mf = p if max_features is None else max(1, min(int(max_features), p))
    if presorted is None:
        presorted = presort(X)
    parts = _build(X, y, w, GINI if classifier else MSE,
                   -1 if max_depth is None else int(max_depth),
                   max(1, int(min_samples_leaf)), mf, int(seed) % (2**32), presorted)
    return Tree(*parts)
