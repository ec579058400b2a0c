"""CART decision tree (Gini, max depth 5) and a 10-tree random forest.

Trees are stored as flat arrays (feature, threshold, left, right, leaf
probabilities) so they serialize directly and predict vectorized. Split
search scans midpoints between consecutive distinct sorted values; ties
resolve to the lowest feature index then lowest threshold, so fitting is
deterministic for a fixed seed.
"""
from __future__ import annotations

import numpy as np

from .base import ClassifierKind, register, register_proba

MAX_DEPTH = 5
N_TREES = 10


def _best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray,
                features: np.ndarray):
    """(feature, threshold, gain) of the lowest weighted-Gini split, or None."""
    n = len(rows)
    y_node = y[rows]
    total_i = int(y_node.sum())
    parent = 1.0 - (total_i / n) ** 2 - ((n - total_i) / n) ** 2
    best = None
    for f in features:
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y_node[order]
        cum_i = np.cumsum(sy)[:-1]
        left_n = np.arange(1, n)
        valid = sv[1:] != sv[:-1]
        if not valid.any():
            continue
        left_h = left_n - cum_i
        right_i = total_i - cum_i
        right_n = n - left_n
        right_h = right_n - right_i
        gini_l = 1.0 - (cum_i / left_n) ** 2 - (left_h / left_n) ** 2
        gini_r = 1.0 - (right_i / right_n) ** 2 - (right_h / right_n) ** 2
        weighted = (left_n * gini_l + right_n * gini_r) / n
        weighted[~valid] = np.inf
        t = int(np.argmin(weighted))
        if weighted[t] < parent - 1e-12 and (best is None or weighted[t] < best[2] - 1e-12):
            best = (int(f), float((sv[t] + sv[t + 1]) / 2.0), float(weighted[t]))
    return best


def build_tree(X: np.ndarray, y: np.ndarray, max_depth: int = MAX_DEPTH,
               rng: np.random.Generator | None = None,
               feature_subsample: int | None = None) -> dict:
    """Array-form CART tree. ``feature_subsample`` draws that many features
    per split (random forest mode)."""
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf(rows) -> int:
        idx = len(feature)
        counts = np.bincount(y[rows], minlength=2).astype(np.float64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return idx

    def grow(rows: np.ndarray, depth: int) -> int:
        y_node = y[rows]
        if depth >= max_depth or len(rows) < 2 or len(np.unique(y_node)) == 1:
            return leaf(rows)
        if feature_subsample is not None:
            pool = rng.choice(X.shape[1], size=min(feature_subsample, X.shape[1]),
                              replace=False)
            pool = np.sort(pool)
        else:
            pool = np.arange(X.shape[1])
        split = _best_split(X, y, rows, pool)
        if split is None:
            return leaf(rows)
        f, thr, _ = split
        idx = len(feature)
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        value.append(np.bincount(y_node, minlength=2) / len(rows))
        go_left = rows[X[rows, f] <= thr]
        go_right = rows[X[rows, f] > thr]
        left[idx] = grow(go_left, depth + 1)
        right[idx] = grow(go_right, depth + 1)
        return idx

    grow(np.arange(len(y)), 0)
    return {
        "feature": np.array(feature, dtype=np.int32),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int32),
        "right": np.array(right, dtype=np.int32),
        "value": np.stack(value),
    }


def tree_proba(tree_feature, tree_threshold, tree_left, tree_right, tree_value,
               X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int64)
    for _ in range(MAX_DEPTH + 1):
        internal = tree_feature[node] >= 0
        if not internal.any():
            break
        rows = np.flatnonzero(internal)
        f = tree_feature[node[rows]]
        goes_left = X[rows, f] <= tree_threshold[node[rows]]
        node[rows] = np.where(goes_left, tree_left[node[rows]], tree_right[node[rows]])
    return tree_value[node]


def tree_depth(tree: dict) -> int:
    """Longest root-to-leaf path in splits."""
    def walk(idx: int) -> int:
        if tree["feature"][idx] < 0:
            return 0
        return 1 + max(walk(tree["left"][idx]), walk(tree["right"][idx]))
    return walk(0)


@register(ClassifierKind.DECISION_TREE)
def fit_tree(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    tree = build_tree(X, y)
    return {f"tree_{k}": v for k, v in tree.items()}


@register_proba(ClassifierKind.DECISION_TREE)
def proba_tree(params: dict, X: np.ndarray) -> np.ndarray:
    return tree_proba(params["tree_feature"], params["tree_threshold"],
                      params["tree_left"], params["tree_right"],
                      params["tree_value"], X)


@register(ClassifierKind.RANDOM_FOREST)
def fit_forest(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    n, d = X.shape
    subsample = max(1, int(round(np.sqrt(d))))
    params: dict = {"n_trees": N_TREES}
    for t, ss in enumerate(np.random.SeedSequence(seed).spawn(N_TREES)):
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size=n)
        # bootstrap may drop a class entirely; fall back to the full sample
        if len(np.unique(y[rows])) < 2:
            rows = np.arange(n)
        tree = build_tree(X[rows], y[rows], rng=rng, feature_subsample=subsample)
        for k, v in tree.items():
            params[f"t{t}_{k}"] = v
    return params


@register_proba(ClassifierKind.RANDOM_FOREST)
def proba_forest(params: dict, X: np.ndarray) -> np.ndarray:
    acc = np.zeros((len(X), 2))
    n_trees = int(params["n_trees"])
    for t in range(n_trees):
        acc += tree_proba(params[f"t{t}_feature"], params[f"t{t}_threshold"],
                          params[f"t{t}_left"], params[f"t{t}_right"],
                          params[f"t{t}_value"], X)
    return acc / n_trees
