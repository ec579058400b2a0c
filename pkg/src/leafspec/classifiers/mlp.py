"""Single-hidden-layer neural net: 100 ReLU units, softmax head, Adam,
L2 penalty alpha=1 scaled by sample count, at most 200 epochs."""
from __future__ import annotations

import numpy as np

from .base import ClassifierKind, register, register_proba

HIDDEN = 100
ALPHA = 1.0
LR = 1e-3
MAX_EPOCHS = 200
TOL = 1e-4
NO_IMPROVE_LIMIT = 10


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


@register(ClassifierKind.NEURAL_NET)
def fit_mlp(X: np.ndarray, y: np.ndarray, seed: int) -> dict:
    n, d = X.shape
    rng = np.random.default_rng(seed)
    w1 = _glorot(rng, d, HIDDEN)
    b1 = np.zeros(HIDDEN)
    w2 = _glorot(rng, HIDDEN, 2)
    b2 = np.zeros(2)
    onehot = np.eye(2)[y]

    adam_m = [np.zeros_like(p) for p in (w1, b1, w2, b2)]
    adam_v = [np.zeros_like(p) for p in (w1, b1, w2, b2)]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    batch = min(200, n)
    best_loss, since_best = np.inf, 0
    for _ in range(MAX_EPOCHS):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            sel = order[start:start + batch]
            xb, tb = X[sel], onehot[sel]
            z1 = xb @ w1.T + b1
            a1 = np.maximum(z1, 0.0)
            logits = a1 @ w2.T + b2
            shifted = logits - logits.max(axis=1, keepdims=True)
            probs = np.exp(shifted)
            probs /= probs.sum(axis=1, keepdims=True)
            ce = -np.mean(np.sum(tb * np.log(np.clip(probs, 1e-12, None)), axis=1))
            penalty = ALPHA * 0.5 * (np.sum(w1 ** 2) + np.sum(w2 ** 2)) / n
            epoch_loss += (ce + penalty) * len(sel)

            dlogits = (probs - tb) / len(sel)
            gw2 = dlogits.T @ a1 + ALPHA * w2 / n
            gb2 = dlogits.sum(axis=0)
            da1 = dlogits @ w2
            dz1 = da1 * (z1 > 0)
            gw1 = dz1.T @ xb + ALPHA * w1 / n
            gb1 = dz1.sum(axis=0)

            step += 1
            for i, (p, g) in enumerate(zip((w1, b1, w2, b2), (gw1, gb1, gw2, gb2))):
                adam_m[i] = beta1 * adam_m[i] + (1 - beta1) * g
                adam_v[i] = beta2 * adam_v[i] + (1 - beta2) * g * g
                m_hat = adam_m[i] / (1 - beta1 ** step)
                v_hat = adam_v[i] / (1 - beta2 ** step)
                p -= LR * m_hat / (np.sqrt(v_hat) + eps)

        epoch_loss /= n
        if epoch_loss < best_loss - TOL:
            best_loss, since_best = epoch_loss, 0
        else:
            since_best += 1
            if since_best >= NO_IMPROVE_LIMIT:
                break
    return {"w1": w1, "b1": b1, "w2": w2, "b2": b2}


@register_proba(ClassifierKind.NEURAL_NET)
def proba_mlp(params: dict, X: np.ndarray) -> np.ndarray:
    a1 = np.maximum(X @ params["w1"].T + params["b1"], 0.0)
    logits = a1 @ params["w2"].T + params["b2"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    return probs / probs.sum(axis=1, keepdims=True)
