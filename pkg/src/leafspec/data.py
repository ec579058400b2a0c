"""Shared dataset types: class labels and labeled cube samples.

Class order is fixed everywhere: index 0 = H (healthy), index 1 = I
(infected). Ties in any argmax resolve to H.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import HyperCube

LABEL_H = 0
LABEL_I = 1
LABEL_NAMES = ("H", "I")
N_CLASSES = 2


class DegenerateDataset(ValueError):
    """A class is absent or too small for the requested operation."""


@dataclass
class LabeledSample:
    """One cube (full or band-sliced) with its H/I label."""

    cube: HyperCube
    label: int

    def __post_init__(self):
        if self.label not in (LABEL_H, LABEL_I):
            raise ValueError(f"label must be {LABEL_H} (H) or {LABEL_I} (I), got {self.label}")


def stack_samples(samples) -> tuple[np.ndarray, np.ndarray]:
    """Pile samples into (N, bands, rows, cols) data and (N,) labels."""
    if not samples:
        raise DegenerateDataset("empty dataset")
    shapes = {s.cube.data.shape for s in samples}
    if len(shapes) != 1:
        raise ValueError(f"samples have mixed shapes: {sorted(shapes)}")
    X = np.stack([s.cube.data for s in samples])
    y = np.array([s.label for s in samples], dtype=np.int64)
    return X, y


def class_counts(labels: np.ndarray) -> tuple[int, int]:
    return int(np.sum(labels == LABEL_H)), int(np.sum(labels == LABEL_I))


def require_both_classes(labels: np.ndarray, min_per_class: int = 1) -> None:
    n_h, n_i = class_counts(labels)
    if n_h < min_per_class or n_i < min_per_class:
        raise DegenerateDataset(
            f"need at least {min_per_class} sample(s) per class, got H={n_h}, I={n_i}")
