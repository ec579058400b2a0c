"""Stratified k-fold evaluation harness.

Per fold: train the CNN on the fold's training samples (restricted to the
selected bands), extract 64-d features for train and test, fit every
requested classifier kind on the train features, and score the test fold.
Metrics are accuracy, MSE on 0/1 hard labels (identically 1 - accuracy),
and per-class precision/recall/F1; aggregates report mean/min/max across
folds. Reports export to JSON (canonical) and CSV (one row per fold, kind
and class).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import classifiers as clf
from . import cnn
from .bandga import Chromosome, derive_seed, slice_bands
from .data import LABEL_NAMES, LabeledSample, stack_samples


class TooFewPerClass(ValueError):
    """A class has fewer members than the requested fold count."""


class LengthMismatch(ValueError):
    """Label and prediction vectors differ in length."""


class EmptyMatrix(ValueError):
    """Metrics requested on a confusion matrix with no observations."""


@dataclass
class FoldSplit:
    k: int
    seed: int
    train_indices: list[np.ndarray]
    test_indices: list[np.ndarray]


@dataclass
class ConfusionMatrix:
    """2x2 counts over (true H/I) x (predicted H/I)."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2, 2) or (counts < 0).any():
            raise ValueError(f"confusion counts must be 2x2 non-negative, got {counts}")
        self.counts = counts

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        """Rows divided by true-class totals (rows of zeros stay zero)."""
        sums = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        safe = np.where(sums == 0, 1.0, sums)
        return self.counts / safe


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class FoldReport:
    fold: int
    kind: str
    accuracy: float
    mse: float
    per_class: dict[str, ClassMetrics]
    confusion: ConfusionMatrix


@dataclass
class CvConfig:
    k: int = 5
    seed: int = 0
    cnn_train: cnn.TrainConfig = field(default_factory=cnn.TrainConfig)


@dataclass
class CvReport:
    folds: list[FoldReport]
    aggregates: dict[str, dict[str, dict[str, float]]]
    bands: tuple[int, ...]
    seed: int


def stratified_kfold(labels: Sequence[int], k: int, seed: int = 0) -> FoldSplit:
    """Shuffle within class by seed, deal round-robin into k test folds."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise TooFewPerClass(f"class {cls} has {len(members)} members for k={k}")
        members = members[rng.permutation(len(members))]
        for i, m in enumerate(members):
            folds[i % k].append(int(m))
    test = [np.array(sorted(f)) for f in folds]
    everything = set(range(len(labels)))
    train = [np.array(sorted(everything - set(f))) for f in test]
    return FoldSplit(k=k, seed=seed, train_indices=train, test_indices=test)


def confusion(true_labels: Sequence[int], predicted: Sequence[int]) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels)
    predicted = np.asarray(predicted)
    if len(true_labels) != len(predicted):
        raise LengthMismatch(f"{len(true_labels)} labels vs {len(predicted)} predictions")
    counts = np.zeros((2, 2), dtype=np.int64)
    for t, p in zip(true_labels, predicted):
        counts[t, p] += 1
    return ConfusionMatrix(counts=counts)


def metrics(cm: ConfusionMatrix) -> tuple[float, float, dict[str, ClassMetrics]]:
    """(accuracy, mse, per-class precision/recall/F1).

    MSE uses the 0/1 hard-label encoding, so it equals 1 - accuracy exactly.
    Zero denominators yield 0 by convention.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix holds no observations")
    correct = int(np.trace(cm.counts))
    accuracy = correct / cm.total
    mse = (cm.total - correct) / cm.total
    per_class = {}
    for idx, name in enumerate(LABEL_NAMES):
        tp = int(cm.counts[idx, idx])
        fp = int(cm.counts[1 - idx, idx])
        fn = int(cm.counts[idx, 1 - idx])
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per_class[name] = ClassMetrics(precision=precision, recall=recall, f1=f1)
    return accuracy, mse, per_class


def run_cv(dataset: Sequence[LabeledSample], bands: Chromosome | Sequence[int],
           kinds: Sequence[clf.ClassifierKind], cfg: CvConfig,
           X: Optional[np.ndarray] = None,
           y: Optional[np.ndarray] = None) -> CvReport:
    """Full cross-validated evaluation of every classifier kind."""
    if X is None or y is None:
        X, y = stack_samples(dataset)
    genes = tuple(bands.genes if isinstance(bands, Chromosome) else bands)
    Xb = slice_bands(X, genes)
    split = stratified_kfold(y, cfg.k, cfg.seed)

    reports: list[FoldReport] = []
    for fold in range(cfg.k):
        tr = split.train_indices[fold]
        te = split.test_indices[fold]
        fold_cfg = cnn.TrainConfig(
            learning_rate=cfg.cnn_train.learning_rate,
            max_epochs=cfg.cnn_train.max_epochs,
            batch_size=cfg.cnn_train.batch_size,
            patience=cfg.cnn_train.patience,
            val_fraction=cfg.cnn_train.val_fraction,
            seed=derive_seed(cfg.seed, genes) + fold,
        )
        model, _ = cnn.train(None, fold_cfg, X=Xb[tr], y=y[tr])
        feats_train = cnn.extract_features(model, list(Xb[tr]))
        feats_test = cnn.extract_features(model, list(Xb[te]))
        for kind in kinds:
            trained = clf.fit(kind, feats_train, y[tr],
                              seed=derive_seed(cfg.seed, genes) + 31 * fold)
            predicted = clf.predict(trained, feats_test)
            cm = confusion(y[te], predicted)
            accuracy, mse, per_class = metrics(cm)
            reports.append(FoldReport(fold=fold, kind=kind.value,
                                      accuracy=accuracy, mse=mse,
                                      per_class=per_class, confusion=cm))

    aggregates: dict[str, dict[str, dict[str, float]]] = {}
    for kind in kinds:
        rows = [r for r in reports if r.kind == kind.value]
        aggregates[kind.value] = {
            "accuracy": _summary([r.accuracy for r in rows]),
            "mse": _summary([r.mse for r in rows]),
        }
        for name in LABEL_NAMES:
            aggregates[kind.value][f"f1_{name}"] = _summary(
                [r.per_class[name].f1 for r in rows])
    return CvReport(folds=reports, aggregates=aggregates, bands=genes,
                    seed=cfg.seed)


def _summary(values: list[float]) -> dict[str, float]:
    return {"mean": float(np.mean(values)), "min": float(np.min(values)),
            "max": float(np.max(values))}


def report_to_json(report: CvReport) -> str:
    doc = {
        "bands": list(report.bands),
        "seed": report.seed,
        "aggregates": report.aggregates,
        "folds": [
            {
                "fold": r.fold,
                "kind": r.kind,
                "accuracy": r.accuracy,
                "mse": r.mse,
                "confusion": r.confusion.counts.tolist(),
                "confusion_normalized": r.confusion.normalized().tolist(),
                "per_class": {
                    name: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                    for name, m in r.per_class.items()
                },
            }
            for r in report.folds
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def report_to_csv(report: CvReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["fold", "kind", "class", "accuracy", "mse",
                     "precision", "recall", "f1"])
    for r in report.folds:
        for name, m in r.per_class.items():
            writer.writerow([r.fold, r.kind, name,
                             f"{r.accuracy:.6f}", f"{r.mse:.6f}",
                             f"{m.precision:.6f}", f"{m.recall:.6f}",
                             f"{m.f1:.6f}"])
    return out.getvalue()
