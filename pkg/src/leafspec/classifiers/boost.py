"""AdaBoost with 50 depth-1 stumps and SAMME stage weighting."""
from __future__ import annotations

import numpy as np

from .base import ClassifierKind, register, register_proba

N_STAGES = 50
EPS = 1e-10


def _best_stump(X: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Weighted-error-minimizing (error, feature, threshold, left_class);
    the right side predicts the opposite class."""
    best = (np.inf, 0, 0.0, 0)
    w_class_i = w * (y == 1)
    total_i = float(w_class_i.sum())
    total_all = float(w.sum())
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        sv = X[order, f]
        valid = sv[1:] != sv[:-1]
        if not valid.any():
            continue
        left_i = np.cumsum(w_class_i[order])[:-1]
        left_h = np.cumsum(w[order])[:-1] - left_i
        # left predicted I: misweight = H on the left + I on the right
        err_left_i = left_h + (total_i - left_i)
        err_left_h = total_all - err_left_i
        for errs, left_cls in ((err_left_i, 1), (err_left_h, 0)):
            e = np.where(valid, errs, np.inf)
            t = int(np.argmin(e))
            if e[t] < best[0] - 1e-15:
                best = (float(e[t]), f, float((sv[t] + sv[t + 1]) / 2.0), left_cls)
    return best


def _stump_predict(X: np.ndarray, feature: int, threshold: float,
                   left_class: int) -> np.ndarray:
    goes_left = X[:, int(feature)] <= threshold
    return np.where(goes_left, int(left_class), 1 - int(left_class))


@register(ClassifierKind.ADA_BOOST)
def fit_ada(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    n = len(y)
    w = np.full(n, 1.0 / n)
    features, thresholds, left_classes, alphas = [], [], [], []
    for _ in range(N_STAGES):
        err, f, thr, left_cls = _best_stump(X, y, w)
        pred = _stump_predict(X, f, thr, left_cls)
        miss = pred != y
        err = float(w[miss].sum())
        if err >= 0.5:
            break
        alpha = np.log((1.0 - err + EPS) / (err + EPS))
        features.append(f)
        thresholds.append(thr)
        left_classes.append(left_cls)
        alphas.append(alpha)
        if err <= EPS:
            break  # perfect stump dominates; further stages add nothing
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    return {"features": np.array(features, dtype=np.int32),
            "thresholds": np.array(thresholds),
            "left_classes": np.array(left_classes, dtype=np.int32),
            "alphas": np.array(alphas)}


@register_proba(ClassifierKind.ADA_BOOST)
def proba_ada(params: dict, X: np.ndarray) -> np.ndarray:
    alphas = params["alphas"]
    if len(alphas) == 0:
        return np.full((len(X), 2), 0.5)
    scores = np.zeros((len(X), 2))
    for f, thr, left_cls, alpha in zip(params["features"], params["thresholds"],
                                       params["left_classes"], alphas):
        pred = _stump_predict(X, f, thr, left_cls)
        scores[np.arange(len(X)), pred] += alpha
    return scores / alphas.sum()
