"""Support vector machines: linear (dual coordinate descent, C=0.025) and
RBF (SMO with maximal-violating-pair selection, gamma=2, C=1).

Both expose probabilities through Platt scaling fitted on the training
margins, and ``predict`` everywhere is the argmax of those probabilities,
so the reported label always agrees with the probability output.
"""
from __future__ import annotations

import numpy as np

from .base import ClassifierKind, register, register_proba

LINEAR_C = 0.025
LINEAR_TOL = 1e-4
LINEAR_MAX_EPOCHS = 1000

RBF_C = 1.0
RBF_GAMMA = 2.0
RBF_TOL = 1e-3
RBF_MAX_UPDATES = 20000


def platt_fit(decision: np.ndarray, y: np.ndarray,
              max_iter: int = 100) -> tuple[float, float]:
    """Sigmoid parameters (A, B) with P(I | f) = 1 / (1 + exp(A f + B)),
    fitted by Newton steps with backtracking on regularized targets."""
    prior1 = float(np.sum(y == 1))
    prior0 = float(len(y) - prior1)
    t = np.where(y == 1, (prior1 + 1.0) / (prior1 + 2.0), 1.0 / (prior0 + 2.0))
    A, B = 0.0, np.log((prior0 + 1.0) / (prior1 + 1.0))

    def objective(a: float, b: float) -> float:
        fapb = decision * a + b
        pos = fapb >= 0
        vals = np.where(pos,
                        t * fapb + np.log1p(np.exp(-np.abs(fapb))),
                        (t - 1.0) * fapb + np.log1p(np.exp(-np.abs(fapb))))
        return float(vals.sum())

    fval = objective(A, B)
    sigma = 1e-12
    for _ in range(max_iter):
        fapb = decision * A + B
        p = np.where(fapb >= 0,
                     np.exp(-np.clip(fapb, 0, 700)) / (1.0 + np.exp(-np.clip(fapb, 0, 700))),
                     1.0 / (1.0 + np.exp(np.clip(fapb, -700, 0))))
        q = 1.0 - p
        d2 = p * q
        h11 = float(np.sum(decision ** 2 * d2)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h21 = float(np.sum(decision * d2))
        d1 = t - p
        g1 = float(np.sum(decision * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        stepsize = 1.0
        while stepsize >= 1e-10:
            new_a, new_b = A + stepsize * dA, B + stepsize * dB
            new_f = objective(new_a, new_b)
            if new_f < fval + 1e-4 * stepsize * gd:
                A, B, fval = new_a, new_b, new_f
                break
            stepsize /= 2.0
        else:
            break
    return A, B


def platt_proba(decision: np.ndarray, a: float, b: float) -> np.ndarray:
    fapb = np.clip(decision * a + b, -700, 700)
    p_i = 1.0 / (1.0 + np.exp(fapb))
    return np.stack([1.0 - p_i, p_i], axis=1)


@register(ClassifierKind.LINEAR_SVM)
def fit_linear_svm(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    """L1-loss dual coordinate descent with the bias folded in as a
    regularized constant feature."""
    n = len(y)
    xt = np.hstack([X, np.ones((n, 1))])
    y_pm = (2 * y - 1).astype(np.float64)
    q_diag = np.sum(xt ** 2, axis=1)
    alpha = np.zeros(n)
    w = np.zeros(xt.shape[1])
    rng = np.random.default_rng(seed)
    for _ in range(LINEAR_MAX_EPOCHS):
        worst = 0.0
        for i in rng.permutation(n):
            g = y_pm[i] * (w @ xt[i]) - 1.0
            if alpha[i] <= 0:
                pg = min(g, 0.0)
            elif alpha[i] >= LINEAR_C:
                pg = max(g, 0.0)
            else:
                pg = g
            worst = max(worst, abs(pg))
            if abs(pg) > 1e-12:
                new_alpha = min(max(alpha[i] - g / q_diag[i], 0.0), LINEAR_C)
                w += (new_alpha - alpha[i]) * y_pm[i] * xt[i]
                alpha[i] = new_alpha
        if worst < LINEAR_TOL:
            break
    decision = xt @ w
    a, b = platt_fit(decision, y)
    return {"weights": w, "platt_a": a, "platt_b": b}


@register_proba(ClassifierKind.LINEAR_SVM)
def proba_linear_svm(params: dict, X: np.ndarray) -> np.ndarray:
    w = params["weights"]
    decision = X @ w[:-1] + w[-1]
    return platt_proba(decision, params["platt_a"], params["platt_b"])


def _rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    d2 = (np.sum(a ** 2, axis=1)[:, None]
          + np.sum(b ** 2, axis=1)[None, :]
          - 2.0 * a @ b.T)
    return np.exp(-gamma * np.maximum(d2, 0.0))


@register(ClassifierKind.RBF_SVM)
def fit_rbf_svm(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    """SMO: repeatedly take the maximal violating pair until the duality
    gap measure m - M drops below tolerance."""
    n = len(y)
    y_pm = (2 * y - 1).astype(np.float64)
    K = _rbf_kernel(X, X, RBF_GAMMA)
    alpha = np.zeros(n)
    f = np.zeros(n)  # decision values without bias
    for _ in range(RBF_MAX_UPDATES):
        neg_e = y_pm - f
        up = ((y_pm > 0) & (alpha < RBF_C)) | ((y_pm < 0) & (alpha > 0))
        low = ((y_pm > 0) & (alpha > 0)) | ((y_pm < 0) & (alpha < RBF_C))
        i = int(np.flatnonzero(up)[np.argmax(neg_e[up])])
        j = int(np.flatnonzero(low)[np.argmin(neg_e[low])])
        if neg_e[i] - neg_e[j] <= RBF_TOL:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        eta = max(eta, 1e-12)
        e_i, e_j = f[i] - y_pm[i], f[j] - y_pm[j]
        if y_pm[i] != y_pm[j]:
            lo_b = max(0.0, alpha[j] - alpha[i])
            hi_b = min(RBF_C, RBF_C + alpha[j] - alpha[i])
        else:
            lo_b = max(0.0, alpha[i] + alpha[j] - RBF_C)
            hi_b = min(RBF_C, alpha[i] + alpha[j])
        new_j = np.clip(alpha[j] + y_pm[j] * (e_i - e_j) / eta, lo_b, hi_b)
        new_i = alpha[i] + y_pm[i] * y_pm[j] * (alpha[j] - new_j)
        f += ((new_i - alpha[i]) * y_pm[i] * K[:, i]
              + (new_j - alpha[j]) * y_pm[j] * K[:, j])
        alpha[i], alpha[j] = new_i, new_j

    neg_e = y_pm - f
    up = ((y_pm > 0) & (alpha < RBF_C)) | ((y_pm < 0) & (alpha > 0))
    low = ((y_pm > 0) & (alpha > 0)) | ((y_pm < 0) & (alpha < RBF_C))
    bias = 0.5 * (neg_e[up].max() + neg_e[low].min()) if up.any() and low.any() else 0.0

    support = alpha > 1e-12
    decision = f + bias
    a, b = platt_fit(decision, y)
    return {"support_x": X[support].copy(),
            "dual_coef": (alpha * y_pm)[support],
            "bias": float(bias), "gamma": RBF_GAMMA,
            "platt_a": a, "platt_b": b}


@register_proba(ClassifierKind.RBF_SVM)
def proba_rbf_svm(params: dict, X: np.ndarray) -> np.ndarray:
    if len(params["support_x"]) == 0:
        decision = np.full(len(X), params["bias"])
    else:
        K = _rbf_kernel(X, params["support_x"], float(params["gamma"]))
        decision = K @ params["dual_coef"] + params["bias"]
    return platt_proba(decision, params["platt_a"], params["platt_b"])
