"""Evaluation quantities: confusion matrix, false alarm rate, precision, recall.

Ground truth on a test manifest is binary (the polarity of each clear
category); ``uncertain`` exists only as a model output. A prediction of
``uncertain`` raises no alarm, so it counts against recall but never against
the false alarm rate. FAR uses ground-truth negatives as the denominator:
the fraction of true negatives predicted positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .manifest import Manifest, Polarity, Split
from .trainer import TrainedModel, predict_batch

TRUE_LABELS = ("positive", "negative")


class ConfusionMatrix:
    """Counts indexed by (true label) x (predicted label).

    The ``uncertain`` prediction column is present only when the prediction
    space includes it (3-class models).
    """

    def __init__(self, pred_labels, counts):
        self.true_labels = TRUE_LABELS
        self.pred_labels = tuple(pred_labels)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (2, len(self.pred_labels)):
            raise ValidationError("confusion counts shape does not match labels")
        if (self.counts < 0).any():
            raise ValidationError("confusion counts must be non-negative")

    def __eq__(self, other):
        return (
            isinstance(other, ConfusionMatrix)
            and self.pred_labels == other.pred_labels
            and bool((self.counts == other.counts).all())
        )

    def count(self, true_label: str, pred_label: str) -> int:
        return int(
            self.counts[self.true_labels.index(true_label), self.pred_labels.index(pred_label)]
        )

    def total(self) -> int:
        return int(self.counts.sum())

    def to_json_dict(self) -> dict:
        return {
            "true_labels": list(self.true_labels),
            "pred_labels": list(self.pred_labels),
            "counts": self.counts.tolist(),
        }


def confusion(true_labels, predictions, pred_label_space=TRUE_LABELS) -> ConfusionMatrix:
    """Exhaustive tally of (true, predicted) label pairs."""
    true_labels = list(true_labels)
    predictions = list(predictions)
    if len(true_labels) != len(predictions):
        raise ValidationError(
            f"length mismatch: {len(true_labels)} true labels, {len(predictions)} predictions"
        )
    pred_labels = tuple(pred_label_space)
    counts = np.zeros((2, len(pred_labels)), dtype=np.int64)
    t_index = {name: i for i, name in enumerate(TRUE_LABELS)}
    p_index = {name: i for i, name in enumerate(pred_labels)}
    for t, p in zip(true_labels, predictions):
        ti = t_index.get(t)
        pi = p_index.get(p)
        if ti is None:
            raise ValidationError(f"bad true label {t!r}")
        if pi is None:
            raise ValidationError(f"bad prediction {p!r}")
        counts[ti, pi] += 1
    return ConfusionMatrix(pred_labels, counts)


def false_alarm_rate(cm: ConfusionMatrix) -> float:
    """negatives-predicted-positive / ground-truth negatives (0 when none)."""
    neg_row = int(cm.counts[1].sum())
    if neg_row == 0:
        return 0.0
    return cm.count("negative", "positive") / neg_row


def positive_recall(cm: ConfusionMatrix) -> float:
    pos_row = int(cm.counts[0].sum())
    if pos_row == 0:
        return 0.0
    return cm.count("positive", "positive") / pos_row


def positive_precision(cm: ConfusionMatrix):
    """None when nothing is predicted positive (undefined, not 0 or 1)."""
    predicted_pos = cm.count("positive", "positive") + cm.count("negative", "positive")
    if predicted_pos == 0:
        return None
    return cm.count("positive", "positive") / predicted_pos


def percent(value: float) -> str:
    """One-decimal percent string, e.g. 0.089 -> "8.9%"."""
    return f"{value * 100:.1f}%"


@dataclass(frozen=True, eq=False)
class EvalReport:
    confusion: ConfusionMatrix
    far: float
    positive_precision: float | None
    positive_recall: float
    design_name: str | None
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "version": 1,
            "design_name": self.design_name,
            "seed": self.seed,
            "far": self.far,
            "positive_precision": self.positive_precision,
            "positive_recall": self.positive_recall,
            "confusion": self.confusion.to_json_dict(),
        }


def evaluate(model: TrainedModel, test: Manifest) -> EvalReport:
    """Predict every test sample and compute FAR / precision / recall."""
    if test.split is not Split.TEST:
        raise ValidationError("evaluate requires a test-split manifest")
    if not test.samples:
        raise ValidationError("test manifest has no samples")
    cats = {c.name: c for c in test.taxonomy}
    for sample in test.samples:
        if cats[sample.category].polarity is None:
            raise ValidationError(
                f"test sample {sample.id!r} belongs to ambiguous category "
                f"{sample.category!r}; test ground truth must be clear"
            )
    if test.feature_dim != model.params.architecture[0]:
        raise ValidationError(
            f"feature dimension mismatch: manifest {test.feature_dim}, "
            f"model {model.params.architecture[0]}"
        )
    x = np.array([s.features for s in test.samples], dtype=np.float64)
    _, pred_idx = predict_batch(model, x)
    predictions = [model.class_names[i] for i in pred_idx]
    truths = [
        "positive" if cats[s.category].polarity is Polarity.POSITIVE else "negative"
        for s in test.samples
    ]
    cm = confusion(truths, predictions, pred_label_space=model.class_names)
    return EvalReport(
        confusion=cm,
        far=false_alarm_rate(cm),
        positive_precision=positive_precision(cm),
        positive_recall=positive_recall(cm),
        design_name=_design_name_for_model(model, test),
        seed=model.config.seed,
    )


def _design_name_for_model(model: TrainedModel, test: Manifest):
    if model.design_extract is None:
        return None
    from .design import DesignConfig, design_name

    try:
        return design_name(test.taxonomy, DesignConfig(extract=model.design_extract))
    except ValidationError:
        return None
