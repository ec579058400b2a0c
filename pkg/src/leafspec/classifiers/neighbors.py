"""k-nearest-neighbors (k=3, Euclidean)."""
from __future__ import annotations

import numpy as np

from .base import ClassifierKind, register, register_proba

DEFAULT_K = 3


@register(ClassifierKind.NEAREST_NEIGHBORS)
def fit_knn(X: np.ndarray, y: np.ndarray, seed: int, k: int = DEFAULT_K) -> dict:
    return {"k": min(k, len(X)), "train_x": X.copy(), "train_y": y.copy()}


@register_proba(ClassifierKind.NEAREST_NEIGHBORS)
def proba_knn(params: dict, X: np.ndarray) -> np.ndarray:
    train_x, train_y = params["train_x"], params["train_y"]
    k = int(params["k"])
    d2 = (np.sum(X ** 2, axis=1)[:, None]
          + np.sum(train_x ** 2, axis=1)[None, :]
          - 2.0 * X @ train_x.T)
    # stable sort: distance ties resolve to the earliest training row
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    votes_i = train_y[nearest].mean(axis=1)
    return np.stack([1.0 - votes_i, votes_i], axis=1)
