"""Compact CNN feature extractor, implemented directly on numpy.

Architecture: one valid 3x3 convolution with 32 filters and ReLU, 2x2
max-pool (stride 2, floor), flatten, a 64-unit ReLU fully connected layer,
and a 2-way softmax head. For a 125x100x5 input the shape chain is
conv -> 123x98x32, pool -> 61x49x32, flatten -> 95,648, FC -> 64 -> 2.

Training is Adam on cross-entropy with a seeded stratified validation
split and early stopping; the weights restored at the end are those of the
best-validation-loss epoch. The 64 post-ReLU FC activations double as the
feature vector consumed by the classical classifiers.

Everything is deterministic given the seed: one PCG64 generator drives
initialization, the split, and every shuffle, and reductions run in fixed
order, so the training trajectory is bit-reproducible in-process.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data import (DegenerateDataset, LabeledSample, N_CLASSES,
                   require_both_classes, stack_samples)

N_FILTERS = 32
KERNEL = 3
FC_UNITS = 64

MODEL_MAGIC = b"CNN1"
MODEL_VERSION = 1

PARAM_ORDER = ("conv_w", "conv_b", "fc1_w", "fc1_b", "out_w", "out_b")


class ShapeMismatch(ValueError):
    """Sample dimensions do not match the model's input shape."""


class NonFiniteLoss(RuntimeError):
    """Training diverged to NaN/inf loss."""


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 50
    batch_size: int = 16
    patience: int = 5
    val_fraction: float = 0.2
    seed: int = 0
    # when set, the train/val split is drawn from this seed instead of the
    # main stream, letting callers hold the split fixed while varying
    # initialization (common random numbers across GA fitness evaluations)
    split_seed: Optional[int] = None

    def __post_init__(self):
        if self.learning_rate <= 0 or self.max_epochs <= 0 or self.batch_size <= 0:
            raise ValueError("learning_rate, max_epochs and batch_size must be positive")
        if self.patience <= 0:
            raise ValueError("patience must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must be in (0,1), got {self.val_fraction}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1

    @property
    def best(self) -> EpochStats:
        return self.epochs[self.best_epoch]


@dataclass
class CnnModel:
    """Weights plus the input shape they were built for (C, H, W).

    ``norm_mean``/``norm_std`` standardize each input channel before the
    convolution; they are fitted from the training split and frozen, never
    touched by the optimizer.
    """

    input_shape: tuple[int, int, int]
    params: dict[str, np.ndarray]
    norm_mean: np.ndarray = None
    norm_std: np.ndarray = None
    rng_seed: int = 0

    def __post_init__(self):
        c = self.input_shape[0]
        dtype = self.params["conv_w"].dtype
        if self.norm_mean is None:
            self.norm_mean = np.zeros(c, dtype=dtype)
        if self.norm_std is None:
            self.norm_std = np.ones(c, dtype=dtype)

    @property
    def conv_out_shape(self) -> tuple[int, int]:
        _, h, w = self.input_shape
        return h - KERNEL + 1, w - KERNEL + 1

    @property
    def pool_out_shape(self) -> tuple[int, int]:
        oh, ow = self.conv_out_shape
        return oh // 2, ow // 2

    @property
    def flat_features(self) -> int:
        ph, pw = self.pool_out_shape
        return ph * pw * N_FILTERS


def flat_feature_count(input_shape: tuple[int, int, int]) -> int:
    _, h, w = input_shape
    return ((h - KERNEL + 1) // 2) * ((w - KERNEL + 1) // 2) * N_FILTERS


def init_model(input_shape: tuple[int, int, int], seed: int = 0,
               dtype=np.float32) -> CnnModel:
    """He-initialized weights, zero biases, all seeded."""
    c, h, w = input_shape
    if h < KERNEL or w < KERNEL or (h - KERNEL + 1) < 2 or (w - KERNEL + 1) < 2:
        raise ShapeMismatch(f"input {input_shape} too small for conv+pool")
    rng = np.random.default_rng(seed)
    fan_conv = c * KERNEL * KERNEL
    flat = flat_feature_count(input_shape)
    # small positive bias keeps ReLU units alive through the first large
    # Adam steps; an all-dead layer cannot recover
    params = {
        "conv_w": rng.normal(0.0, np.sqrt(2.0 / fan_conv),
                             (N_FILTERS, c, KERNEL, KERNEL)).astype(dtype),
        "conv_b": np.full(N_FILTERS, 0.05, dtype=dtype),
        "fc1_w": rng.normal(0.0, np.sqrt(2.0 / flat), (FC_UNITS, flat)).astype(dtype),
        "fc1_b": np.full(FC_UNITS, 0.05, dtype=dtype),
        # near-zero head start: logits begin at the prior, which avoids the
        # violent first steps that can push the softmax head into a collapsed
        # equal-rows saddle
        "out_w": rng.normal(0.0, 0.01, (N_CLASSES, FC_UNITS)).astype(dtype),
        "out_b": np.zeros(N_CLASSES, dtype=dtype),
    }
    return CnnModel(input_shape=(c, h, w), params=params, rng_seed=seed)


def _im2col(x: np.ndarray) -> np.ndarray:
    """(N, C, H, W) -> (N, OH*OW, C*9) patches in kernel-flattening order."""
    n = x.shape[0]
    win = sliding_window_view(x, (KERNEL, KERNEL), axis=(2, 3))  # (N,C,OH,OW,3,3)
    win = win.transpose(0, 2, 3, 1, 4, 5)                        # (N,OH,OW,C,3,3)
    oh, ow = win.shape[1], win.shape[2]
    return np.ascontiguousarray(win).reshape(n, oh * ow, -1)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(model: CnnModel, x: np.ndarray, need_cache: bool):
    """Shared forward pass; cache holds what backprop needs."""
    p = model.params
    n = x.shape[0]
    oh, ow = model.conv_out_shape
    ph, pw = model.pool_out_shape

    x = (x - model.norm_mean[:, None, None]) / model.norm_std[:, None, None]
    cols = _im2col(x)
    kmat = p["conv_w"].reshape(N_FILTERS, -1)
    conv_pre = cols @ kmat.T + p["conv_b"]
    conv_act = np.maximum(conv_pre, 0.0)

    maps = conv_act.reshape(n, oh, ow, N_FILTERS)
    windows = maps[:, :ph * 2, :pw * 2, :].reshape(n, ph, 2, pw, 2, N_FILTERS)
    windows = windows.transpose(0, 1, 3, 5, 2, 4).reshape(n, ph, pw, N_FILTERS, 4)
    argmax = windows.argmax(axis=-1)
    pooled = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]

    flat = pooled.reshape(n, -1)
    z1 = flat @ p["fc1_w"].T + p["fc1_b"]
    a1 = np.maximum(z1, 0.0)
    logits = a1 @ p["out_w"].T + p["out_b"]
    probs = _softmax(logits)

    cache = None
    if need_cache:
        cache = {"cols": cols, "conv_pre": conv_pre, "argmax": argmax,
                 "flat": flat, "z1": z1, "a1": a1}
    return probs, a1, cache


def _backward_batch(model: CnnModel, probs: np.ndarray, labels: np.ndarray,
                    cache: dict) -> dict[str, np.ndarray]:
    """Gradients of mean cross-entropy over the batch w.r.t. every parameter."""
    p = model.params
    n = probs.shape[0]
    oh, ow = model.conv_out_shape
    ph, pw = model.pool_out_shape

    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    a1 = cache["a1"]
    grads = {
        "out_w": dlogits.T @ a1,
        "out_b": dlogits.sum(axis=0),
    }
    da1 = dlogits @ p["out_w"]
    dz1 = da1 * (cache["z1"] > 0)
    grads["fc1_w"] = dz1.T @ cache["flat"]
    grads["fc1_b"] = dz1.sum(axis=0)

    dflat = dz1 @ p["fc1_w"]
    dpool = dflat.reshape(n, ph, pw, N_FILTERS)

    dwindows = np.zeros((n, ph, pw, N_FILTERS, 4), dtype=dpool.dtype)
    np.put_along_axis(dwindows, cache["argmax"][..., None], dpool[..., None], axis=-1)
    dmaps_core = dwindows.reshape(n, ph, pw, N_FILTERS, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    dmaps = np.zeros((n, oh, ow, N_FILTERS), dtype=dpool.dtype)
    dmaps[:, :ph * 2, :pw * 2, :] = dmaps_core.reshape(n, ph * 2, pw * 2, N_FILTERS)

    dconv = dmaps.reshape(n, oh * ow, N_FILTERS) * (cache["conv_pre"] > 0)
    cols = cache["cols"]
    dkmat = dconv.reshape(-1, N_FILTERS).T @ cols.reshape(-1, cols.shape[-1])
    grads["conv_w"] = dkmat.reshape(p["conv_w"].shape)
    grads["conv_b"] = dconv.sum(axis=(0, 1))
    return grads


def _check_input(model: CnnModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != model.input_shape:
        raise ShapeMismatch(f"sample shape {x.shape} != model input {model.input_shape}")
    return x.astype(model.params["conv_w"].dtype, copy=False)


def forward(model: CnnModel, sample: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Class probabilities and 64-d post-ReLU features for one (C, H, W) sample."""
    x = _check_input(model, sample)[None]
    probs, feats, _ = _forward_batch(model, x, need_cache=False)
    return probs[0], feats[0]


def extract_features(model: CnnModel, samples: Sequence, batch: int = 32) -> np.ndarray:
    """(n, 64) feature matrix; rows follow input order, entries are >= 0."""
    if samples and isinstance(samples[0], LabeledSample):
        X, _ = stack_samples(samples)
    else:
        X = np.stack([np.asarray(s) for s in samples])
    if X.shape[1:] != model.input_shape:
        raise ShapeMismatch(f"samples shape {X.shape[1:]} != model input {model.input_shape}")
    X = X.astype(model.params["conv_w"].dtype, copy=False)
    rows = []
    for start in range(0, X.shape[0], batch):
        _, feats, _ = _forward_batch(model, X[start:start + batch], need_cache=False)
        rows.append(feats)
    return np.concatenate(rows, axis=0)


def _cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = np.clip(probs[np.arange(len(labels)), labels], 1e-300, None)
    return float(-np.mean(np.log(picked)))


def _evaluate(model: CnnModel, X: np.ndarray, y: np.ndarray,
              batch: int = 64) -> tuple[float, float]:
    losses, hits, total = 0.0, 0, len(y)
    for start in range(0, total, batch):
        xb, yb = X[start:start + batch], y[start:start + batch]
        probs, _, _ = _forward_batch(model, xb, need_cache=False)
        losses += _cross_entropy(probs, yb) * len(yb)
        hits += int(np.sum(probs.argmax(axis=1) == yb))
    return losses / total, hits / total


def stratified_split(labels: np.ndarray, val_fraction: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffle, first slice to validation. At least one of each
    class lands on both sides."""
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(len(members))]
        n_val = int(round(len(members) * val_fraction))
        n_val = min(max(n_val, 1), len(members) - 1)
        val_idx.append(members[:n_val])
        train_idx.append(members[n_val:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def train(data: Sequence[LabeledSample], cfg: TrainConfig,
          X: Optional[np.ndarray] = None,
          y: Optional[np.ndarray] = None) -> tuple[CnnModel, TrainHistory]:
    """Train from He init with Adam (b1=0.9, b2=0.999, eps=1e-8) and early
    stopping on validation loss; returns the best-epoch weights.

    ``X``/``y`` may be passed directly (pre-stacked) in place of ``data``.
    """
    if X is None or y is None:
        X, y = stack_samples(data)
    X = X.astype(np.float32, copy=False)
    require_both_classes(y, min_per_class=2)

    rng = np.random.default_rng(cfg.seed)
    model = init_model(X.shape[1:], seed=int(rng.integers(2 ** 31)))
    split_rng = rng if cfg.split_seed is None else np.random.default_rng(cfg.split_seed)
    train_idx, val_idx = stratified_split(y, cfg.val_fraction, split_rng)
    x_val, y_val = X[val_idx], y[val_idx]

    # channel standardization fitted on the training split only
    x_train_view = X[train_idx]
    model.norm_mean = x_train_view.mean(axis=(0, 2, 3)).astype(np.float32)
    model.norm_std = np.maximum(x_train_view.std(axis=(0, 2, 3)), 1e-6).astype(np.float32)

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(vv) for k, vv in model.params.items()}
    step = 0

    history = TrainHistory()
    best_loss = np.inf
    best_params = None
    bad_epochs = 0

    for epoch in range(cfg.max_epochs):
        order = train_idx[rng.permutation(len(train_idx))]
        loss_sum, hit_sum = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            sel = order[start:start + cfg.batch_size]
            xb, yb = X[sel], y[sel]
            probs, _, cache = _forward_batch(model, xb, need_cache=True)
            batch_loss = _cross_entropy(probs, yb)
            if not np.isfinite(batch_loss):
                raise NonFiniteLoss(
                    f"loss {batch_loss} at epoch {epoch}, batch starting {start} "
                    f"(lr={cfg.learning_rate}, seed={cfg.seed})")
            loss_sum += batch_loss * len(yb)
            hit_sum += int(np.sum(probs.argmax(axis=1) == yb))
            grads = _backward_batch(model, probs, yb, cache)
            step += 1
            for key, grad in grads.items():
                m[key] = beta1 * m[key] + (1 - beta1) * grad
                v[key] = beta2 * v[key] + (1 - beta2) * grad * grad
                m_hat = m[key] / (1 - beta1 ** step)
                v_hat = v[key] / (1 - beta2 ** step)
                model.params[key] -= (cfg.learning_rate * m_hat /
                                      (np.sqrt(v_hat) + eps)).astype(model.params[key].dtype)

        val_loss, val_acc = _evaluate(model, x_val, y_val)
        if not np.isfinite(val_loss):
            raise NonFiniteLoss(f"validation loss {val_loss} at epoch {epoch}")
        history.epochs.append(EpochStats(
            epoch=epoch,
            train_loss=loss_sum / len(order),
            train_acc=hit_sum / len(order),
            val_loss=val_loss,
            val_acc=val_acc,
        ))
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = {k: p.copy() for k, p in model.params.items()}
            history.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break

    if best_params is not None:
        model.params = best_params
    return model, history


def gradient_check(model: CnnModel, sample: np.ndarray, label: int,
                   step: float = 1e-5, n_checks: int = 30,
                   seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients
    on a random parameter subset; runs in double precision.

    Relative error uses max(|analytic|, |numeric|, 1e-6) as denominator so
    a zero-gradient configuration degrades to an absolute comparison.
    """
    dbl = CnnModel(
        input_shape=model.input_shape,
        params={k: p.astype(np.float64) for k, p in model.params.items()},
        rng_seed=model.rng_seed,
    )
    x = np.asarray(sample, dtype=np.float64)[None]
    labels = np.array([label])

    probs, _, cache = _forward_batch(dbl, x, need_cache=True)
    analytic = _backward_batch(dbl, probs, labels, cache)

    def loss_at() -> float:
        p, _, _ = _forward_batch(dbl, x, need_cache=False)
        return _cross_entropy(p, labels)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_checks):
        key = PARAM_ORDER[rng.integers(len(PARAM_ORDER))]
        flat = dbl.params[key].reshape(-1)
        idx = int(rng.integers(flat.size))
        original = flat[idx]
        flat[idx] = original + step
        up = loss_at()
        flat[idx] = original - step
        down = loss_at()
        flat[idx] = original
        numeric = (up - down) / (2 * step)
        exact = analytic[key].reshape(-1)[idx]
        denom = max(abs(exact), abs(numeric), 1e-6)
        worst = max(worst, abs(exact - numeric) / denom)
    return worst


def save_cnn(model: CnnModel) -> bytes:
    """Versioned binary blob: magic, shape header, little-endian f32 weights."""
    c, h, w = model.input_shape
    head = MODEL_MAGIC + struct.pack(
        "<IIIIIIIq", MODEL_VERSION, c, h, w, N_FILTERS, FC_UNITS, N_CLASSES,
        model.rng_seed)
    blobs = [np.ascontiguousarray(model.params[k], dtype="<f4").tobytes()
             for k in PARAM_ORDER]
    blobs.append(np.ascontiguousarray(model.norm_mean, dtype="<f4").tobytes())
    blobs.append(np.ascontiguousarray(model.norm_std, dtype="<f4").tobytes())
    return head + b"".join(blobs)


def load_cnn(buf: bytes) -> CnnModel:
    if buf[:4] != MODEL_MAGIC:
        raise ValueError("not a CNN1 model blob")
    version, c, h, w, nf, fc, nc, seed = struct.unpack_from("<IIIIIIIq", buf, 4)
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported CNN blob version {version}")
    if nf != N_FILTERS or fc != FC_UNITS or nc != N_CLASSES:
        raise ValueError("CNN blob layer sizes do not match this implementation")
    shape = (c, h, w)
    flat = flat_feature_count(shape)
    sizes = {
        "conv_w": (N_FILTERS, c, KERNEL, KERNEL),
        "conv_b": (N_FILTERS,),
        "fc1_w": (FC_UNITS, flat),
        "fc1_b": (FC_UNITS,),
        "out_w": (N_CLASSES, FC_UNITS),
        "out_b": (N_CLASSES,),
    }
    offset = 4 + struct.calcsize("<IIIIIIIq")
    params = {}
    for key in PARAM_ORDER:
        count = int(np.prod(sizes[key]))
        arr = np.frombuffer(buf, dtype="<f4", count=count, offset=offset)
        params[key] = arr.astype(np.float32).reshape(sizes[key])
        offset += 4 * count
    norm_mean = np.frombuffer(buf, dtype="<f4", count=c, offset=offset).astype(np.float32)
    offset += 4 * c
    norm_std = np.frombuffer(buf, dtype="<f4", count=c, offset=offset).astype(np.float32)
    offset += 4 * c
    if offset != len(buf):
        raise ValueError(f"CNN blob length {len(buf)} != expected {offset}")
    return CnnModel(input_shape=shape, params=params, rng_seed=seed,
                    norm_mean=norm_mean, norm_std=norm_std)
