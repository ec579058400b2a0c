"""Gaussian naive Bayes and quadratic discriminant analysis."""
from __future__ import annotations

import warnings

import numpy as np

from .base import ClassifierKind, SingularCovariance, register, register_proba

NB_VAR_FLOOR_RATIO = 1e-9
QDA_RIDGE = 1e-6


def _log_softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    return np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)


@register(ClassifierKind.NAIVE_BAYES)
def fit_nb(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    means, variances, priors = [], [], []
    floor = NB_VAR_FLOOR_RATIO * max(float(X.var(axis=0).max()), 1e-30)
    for cls in (0, 1):
        rows = X[y == cls]
        means.append(rows.mean(axis=0))
        variances.append(rows.var(axis=0) + floor)
        priors.append(len(rows) / len(X))
    return {"means": np.stack(means), "variances": np.stack(variances),
            "log_priors": np.log(np.array(priors))}


@register_proba(ClassifierKind.NAIVE_BAYES)
def proba_nb(params: dict, X: np.ndarray) -> np.ndarray:
    scores = np.empty((len(X), 2))
    for cls in (0, 1):
        mu = params["means"][cls]
        var = params["variances"][cls]
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * var) + (X - mu) ** 2 / var, axis=1)
        scores[:, cls] = ll + params["log_priors"][cls]
    return _log_softmax_rows(scores)


@register(ClassifierKind.QDA)
def fit_qda(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    means, covs, priors = [], [], []
    for cls in (0, 1):
        rows = X[y == cls]
        mu = rows.mean(axis=0)
        centered = rows - mu
        cov = centered.T @ centered / len(rows)
        eigs = np.linalg.eigvalsh(cov)
        if eigs.min() < 1e-12:
            warnings.warn(
                f"class {cls} covariance is singular (min eig {eigs.min():.2e}); "
                f"ridge {QDA_RIDGE} applied", SingularCovariance)
        cov = cov + QDA_RIDGE * np.eye(X.shape[1])
        means.append(mu)
        covs.append(cov)
        priors.append(len(rows) / len(X))
    return {"means": np.stack(means), "covariances": np.stack(covs),
            "log_priors": np.log(np.array(priors))}


@register_proba(ClassifierKind.QDA)
def proba_qda(params: dict, X: np.ndarray) -> np.ndarray:
    scores = np.empty((len(X), 2))
    for cls in (0, 1):
        mu = params["means"][cls]
        cov = params["covariances"][cls]
        sign, logdet = np.linalg.slogdet(cov)
        solved = np.linalg.solve(cov, (X - mu).T).T
        maha = np.sum((X - mu) * solved, axis=1)
        scores[:, cls] = -0.5 * (logdet + maha) + params["log_priors"][cls]
    return _log_softmax_rows(scores)
