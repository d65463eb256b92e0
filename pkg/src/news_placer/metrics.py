"""Classification metrics with explicit zero-division behavior."""

from __future__ import annotations

import numpy as np


def f1(precision: float, recall: float) -> float:
    """Harmonic mean; 0 when both inputs are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def precision_recall_f1(y_true, y_pred, positive=1) -> tuple[float, float, float]:
    """Binary precision/recall/F1 for one positive class; 0/0 counts as 0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("label vectors differ in length")
    pred_pos = y_pred == positive
    true_pos = y_true == positive
    tp = int(np.count_nonzero(pred_pos & true_pos))
    precision = tp / int(np.count_nonzero(pred_pos)) if np.any(pred_pos) else 0.0
    recall = tp / int(np.count_nonzero(true_pos)) if np.any(true_pos) else 0.0
    return precision, recall, f1(precision, recall)


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("label vectors differ in length")
    if y_true.size == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return float(np.count_nonzero(y_true == y_pred)) / y_true.size


def cohen_kappa(y_true, y_pred) -> float:
    """Agreement beyond chance from the marginal label distributions.

    When expected agreement is 1 (both marginals degenerate on the same
    label) the statistic is defined as 1 for perfect agreement, else 0.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("label vectors differ in length")
    n = y_true.size
    if n == 0:
        raise ValueError("kappa of an empty set is undefined")
    p_o = float(np.count_nonzero(y_true == y_pred)) / n
    labels = np.unique(np.concatenate([y_true, y_pred]))
    p_e = 0.0
    for label in labels:
        p_e += (
            float(np.count_nonzero(y_true == label))
            * float(np.count_nonzero(y_pred == label))
            / (n * n)
        )
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def pr_curve(y_true, confidence, positive=1) -> list[tuple[float, float, float]]:
    """(threshold, precision, recall) at each distinct confidence, descending.

    At threshold t every instance with confidence >= t is predicted
    positive, so recall never decreases along the curve.
    """
    y_true = np.asarray(y_true)
    confidence = np.asarray(confidence, dtype=np.float64)
    if y_true.shape != confidence.shape:
        raise ValueError("labels and confidences differ in length")
    if y_true.size == 0:
        raise ValueError("cannot sweep an empty set")
    thresholds = np.unique(confidence)[::-1]
    positives = y_true == positive
    n_pos = int(np.count_nonzero(positives))
    if n_pos == 0:
        raise ValueError("no positive instances to sweep")
    out = []
    for t in thresholds:
        pred = confidence >= t
        tp = int(np.count_nonzero(pred & positives))
        precision = tp / int(np.count_nonzero(pred)) if np.any(pred) else 0.0
        recall = tp / n_pos
        out.append((float(t), precision, recall))
    return out
