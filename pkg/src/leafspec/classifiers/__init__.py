"""Ten classical classifiers behind one fit/predict/predict_proba surface."""
from .base import (ALL_KINDS, ClassifierKind, SingularCovariance,
                   TrainedClassifier, WidthMismatch, fit, load_classifier,
                   predict, predict_proba, save_classifier)

# importing the kind modules registers their fitters/scorers
from . import bayes, boost, gp, mlp, neighbors, svm, trees  # noqa: F401,E402

__all__ = [
    "ClassifierKind", "ALL_KINDS", "TrainedClassifier", "WidthMismatch",
    "SingularCovariance", "fit", "predict", "predict_proba",
    "save_classifier", "load_classifier",
]
