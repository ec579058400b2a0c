"""Gaussian process classifier, implemented as GP regression on 0/1 labels.

RBF kernel with length scale 1.0 and jitter 1e-6; the posterior mean is
clipped to [0, 1] and thresholded at 0.5. This mirrors how the technique
behaves when applied naively to wide feature vectors (it tends to predict
the prior), which is exactly the regime the pipeline documents.
"""
from __future__ import annotations

import numpy as np

from .base import ClassifierKind, register, register_proba

LENGTH_SCALE = 1.0
JITTER = 1e-6


def _rbf(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d2 = (np.sum(a ** 2, axis=1)[:, None]
          + np.sum(b ** 2, axis=1)[None, :]
          - 2.0 * a @ b.T)
    return np.exp(-np.maximum(d2, 0.0) / (2.0 * LENGTH_SCALE ** 2))


@register(ClassifierKind.GAUSSIAN_PROCESS)
def fit_gp(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    K = _rbf(X, X) + JITTER * np.eye(len(X))
    alpha = np.linalg.solve(K, y.astype(np.float64))
    return {"train_x": X.copy(), "alpha": alpha, "prior": float(y.mean())}


@register_proba(ClassifierKind.GAUSSIAN_PROCESS)
def proba_gp(params: dict, X: np.ndarray) -> np.ndarray:
    mu = _rbf(X, params["train_x"]) @ params["alpha"]
    p_i = np.clip(mu, 0.0, 1.0)
    return np.stack([1.0 - p_i, p_i], axis=1)
