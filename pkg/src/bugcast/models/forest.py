"""Random forest regression: bootstrap samples, per-split feature subsets, variance splits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import InsufficientDataError
from .spec import RfParams


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _predict_tree(self.feature, self.threshold, self.left, self.right, self.value, np.atleast_2d(X))


@dataclass(frozen=True)
class Forest:
    trees: tuple
    target_min: float
    target_max: float

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        preds = np.stack([t.predict(X) for t in self.trees])
        out = preds.mean(axis=0)
        same = preds.min(axis=0) == preds.max(axis=0)
        out[same] = preds[0, same]
        return np.clip(out, self.target_min, self.target_max)


@numba.njit(cache=True, nogil=True)
def _build(X, y, sample, n_cand, min_leaf, keys):
    cap = 2 * len(sample) + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)

    idx = sample.copy()
    st_node = np.empty(cap, np.int64)
    st_lo = np.empty(cap, np.int64)
    st_hi = np.empty(cap, np.int64)
    top = 0
    st_node[0], st_lo[0], st_hi[0] = 0, 0, len(idx)
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node, lo, hi = st_node[top], st_lo[top], st_hi[top]
        m = hi - lo
        ys = y[idx[lo:hi]]
        y0 = ys[0]
        constant = True
        for v in ys:
            if v != y0:
                constant = False
                break
        value[node] = y0 if constant else ys.mean()
        if constant or m < 2 * min_leaf:
            continue

        total = ys.sum()
        total2 = (ys * ys).sum()
        parent_sse = total2 - total * total / m
        best_sse = parent_sse
        best_f = -1
        best_thr = 0.0
        order = np.argsort(keys[node % keys.shape[0]])
        for c in range(n_cand):
            f = order[c]
            xs = X[idx[lo:hi], f]
            o = np.argsort(xs, kind="mergesort")
            xs_s = xs[o]
            ys_s = ys[o]
            s = 0.0
            s2 = 0.0
            for i in range(m - min_leaf):
                s += ys_s[i]
                s2 += ys_s[i] * ys_s[i]
                nl = i + 1
                if nl < min_leaf or xs_s[i] == xs_s[i + 1]:
                    continue
                nr = m - nl
                sr = total - s
                sse = (s2 - s * s / nl) + ((total2 - s2) - sr * sr / nr)
                if sse < best_sse - 1e-9 * (1.0 + abs(best_sse)):
                    best_sse = sse
                    best_f = f
                    best_thr = 0.5 * (xs_s[i] + xs_s[i + 1])
        if best_f < 0:
            continue

        # stable partition of idx[lo:hi] by the chosen split
        seg = idx[lo:hi].copy()
        a = lo
        for j in seg:
            if X[j, best_f] <= best_thr:
                idx[a] = j
                a += 1
        b = a
        for j in seg:
            if X[j, best_f] > best_thr:
                idx[b] = j
                b += 1
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        st_node[top], st_lo[top], st_hi[top] = n_nodes + 1, a, hi
        top += 1
        st_node[top], st_lo[top], st_hi[top] = n_nodes, lo, a
        top += 1
        n_nodes += 2
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@numba.njit(cache=True, nogil=True)
def _predict_tree(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


def tree_build(X, y, params: RfParams, rng: np.random.Generator) -> Tree:
    """Grow one regression tree on a bootstrap resample of (X, y)."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n, n_feat = X.shape
    sample = rng.integers(0, n, size=n)
    # one row of random sort keys per potential node picks that node's candidate features
    keys = rng.random((2 * n + 1, n_feat))
    parts = _build(X, y, sample.astype(np.int64), params.n_candidates(n_feat), params.min_samples_leaf, keys)
    return Tree(*parts)


def rf_fit(lagmat, params: RfParams, seed: int = 0) -> Forest:
    """Fit ``params.n_trees`` trees; tree i draws from a generator seeded with seed + i."""
    X = np.asarray(lagmat.features, dtype=float)
    y = np.asarray(lagmat.targets, dtype=float)
    if len(y) == 0 or len(y) < 2 * params.min_samples_leaf:
        raise InsufficientDataError(
            f"random forest needs at least {2 * params.min_samples_leaf} training rows, got {len(y)}"
        )

    def grow(i):
        return tree_build(X, y, params, np.random.default_rng(seed + i))

    if params.n_jobs > 1:
        with ThreadPoolExecutor(params.n_jobs) as pool:
            trees = tuple(pool.map(grow, range(params.n_trees)))
    else:
        trees = tuple(grow(i) for i in range(params.n_trees))
    return Forest(trees, float(y.min()), float(y.max()))
