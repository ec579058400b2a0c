"""Common surface for the ten classical classifiers.

Every kind trains through ``fit`` into a ``TrainedClassifier`` whose
parameters are plain numpy arrays / scalars, predicts through
``predict_proba`` (rows sum to 1), and defines ``predict`` as the argmax
of the probabilities so the two can never disagree; ties resolve to H
because argmax returns the first maximum.
"""
from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..data import DegenerateDataset, require_both_classes


class ClassifierKind(enum.Enum):
    NEAREST_NEIGHBORS = "NearestNeighbors"
    LINEAR_SVM = "LinearSVM"
    RBF_SVM = "RbfSVM"
    GAUSSIAN_PROCESS = "GaussianProcess"
    DECISION_TREE = "DecisionTree"
    RANDOM_FOREST = "RandomForest"
    NEURAL_NET = "NeuralNet"
    ADA_BOOST = "AdaBoost"
    NAIVE_BAYES = "NaiveBayes"
    QDA = "QDA"


ALL_KINDS = tuple(ClassifierKind)


class WidthMismatch(ValueError):
    """Query feature width differs from the training width."""


class SingularCovariance(UserWarning):
    """A class covariance collapsed; ridge regularization was applied."""


@dataclass
class TrainedClassifier:
    kind: ClassifierKind
    n_features: int
    params: dict
    train_seed: int = 0


_FITTERS: dict[ClassifierKind, Callable] = {}
_SCORERS: dict[ClassifierKind, Callable] = {}


def register(kind: ClassifierKind):
    def wrap(fn):
        _FITTERS[kind] = fn
        return fn
    return wrap


def register_proba(kind: ClassifierKind):
    def wrap(fn):
        _SCORERS[kind] = fn
        return fn
    return wrap


def _validate_features(X: np.ndarray, name: str = "features") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contain non-finite entries")
    return X


def fit(kind: ClassifierKind, X: np.ndarray, y: np.ndarray,
        seed: int = 0) -> TrainedClassifier:
    """Train one classifier kind on an (n, d) feature matrix with 0/1 labels."""
    X = _validate_features(X)
    y = np.asarray(y, dtype=np.int64)
    if len(X) != len(y):
        raise ValueError(f"{len(X)} feature rows vs {len(y)} labels")
    if len(X) < 2:
        raise DegenerateDataset("need at least 2 training samples")
    require_both_classes(y)
    params = _FITTERS[kind](X, y, seed)
    return TrainedClassifier(kind=kind, n_features=X.shape[1], params=params,
                             train_seed=seed)


def predict_proba(model: TrainedClassifier, X: np.ndarray) -> np.ndarray:
    """(m, 2) row-stochastic class probabilities in (H, I) order."""
    X = _validate_features(X, "query features")
    if X.shape[1] != model.n_features:
        raise WidthMismatch(f"query width {X.shape[1]} != training width {model.n_features}")
    if X.shape[0] == 0:
        return np.zeros((0, 2))
    probs = _SCORERS[model.kind](model.params, X)
    return probs / probs.sum(axis=1, keepdims=True)


def predict(model: TrainedClassifier, X: np.ndarray) -> np.ndarray:
    """Hard labels; argmax of predict_proba, ties to H."""
    probs = predict_proba(model, X)
    if len(probs) == 0:
        return np.zeros(0, dtype=np.int64)
    return probs.argmax(axis=1).astype(np.int64)


# --- serialization: magic, JSON header, raw little-endian arrays ---

MODEL_MAGIC = b"CLF1"


def save_classifier(model: TrainedClassifier) -> bytes:
    scalars, arrays = {}, []
    for name in sorted(model.params):
        value = model.params[name]
        if isinstance(value, np.ndarray):
            arrays.append(name)
        else:
            scalars[name] = value
    header = {
        "kind": model.kind.value,
        "n_features": model.n_features,
        "train_seed": model.train_seed,
        "scalars": scalars,
        "arrays": [
            {"name": n,
             "dtype": model.params[n].dtype.str.replace(">", "<"),
             "shape": list(model.params[n].shape)}
            for n in arrays
        ],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    parts = [MODEL_MAGIC, struct.pack("<I", len(head)), head]
    for n in arrays:
        arr = model.params[n]
        parts.append(np.ascontiguousarray(arr, dtype=arr.dtype.str.replace(">", "<")).tobytes())
    return b"".join(parts)


def load_classifier(buf: bytes) -> TrainedClassifier:
    if buf[:4] != MODEL_MAGIC:
        raise ValueError("not a CLF1 classifier blob")
    (head_len,) = struct.unpack_from("<I", buf, 4)
    header = json.loads(buf[8:8 + head_len].decode())
    params: dict = dict(header["scalars"])
    offset = 8 + head_len
    for meta in header["arrays"]:
        dtype = np.dtype(meta["dtype"])
        count = int(np.prod(meta["shape"])) if meta["shape"] else 1
        arr = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
        params[meta["name"]] = arr.reshape(meta["shape"]).copy()
        offset += dtype.itemsize * count
    if offset != len(buf):
        raise ValueError(f"classifier blob length {len(buf)} != expected {offset}")
    return TrainedClassifier(kind=ClassifierKind(header["kind"]),
                             n_features=int(header["n_features"]),
                             params=params,
                             train_seed=int(header["train_seed"]))
