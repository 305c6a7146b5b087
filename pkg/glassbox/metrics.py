from typing import Any, Union

import numpy as np
from strenum import StrEnum

from glassbox.errors import LengthMismatch, UndefinedMetric


class MetricKind(StrEnum):
    mse = "mse"
    r2 = "r2"
    accuracy = "accuracy"
    hinge = "hinge"
    cluster_match = "cluster_match"


def _signed_labels(y: np.ndarray) -> np.ndarray:
    """{0, 1} labels map to {-1, +1}; {-1, +1} labels are kept."""
    values = set(np.unique(y).tolist())
    if values <= {0, 1}:
        return np.where(y == 0, -1.0, 1.0)
    if values <= {-1, 1}:
        return y.astype(np.float64)
    raise UndefinedMetric(f"hinge loss needs binary labels in {{0, 1}} or {{-1, +1}}, got {sorted(values)}")


def compute_metric(kind: Union[MetricKind, str], y_true: Any, y_pred: Any) -> np.float64:
    """
    For hinge, y_pred holds signed decision scores rather than labels.

    :raises LengthMismatch: if the inputs differ in length
    :raises UndefinedMetric: for an unknown kind, empty inputs, r2 of a constant target, or hinge with non-binary labels
    """
    try:
        kind = MetricKind(kind)
    except ValueError:
        raise UndefinedMetric(f"unknown metric {kind!r}, expected one of {[k.value for k in MetricKind]}") from None
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"y_true has {len(y_true)} entries but y_pred has {len(y_pred)}")
    if len(y_true) == 0:
        raise UndefinedMetric(f"{kind} of an empty sample")

    if kind is MetricKind.mse:
        diff = y_true.astype(np.float64) - y_pred.astype(np.float64)
        return np.float64(np.mean(diff * diff))
    if kind is MetricKind.r2:
        y = y_true.astype(np.float64)
        total = np.sum((y - y.mean()) ** 2)
        if total == 0:
            raise UndefinedMetric("r2 is undefined for a constant target")
        return np.float64(1.0 - np.sum((y - y_pred.astype(np.float64)) ** 2) / total)
    if kind is MetricKind.hinge:
        margins = _signed_labels(y_true) * y_pred.astype(np.float64)
        return np.float64(np.mean(np.maximum(0.0, 1.0 - margins)))
    # accuracy and cluster_match are both the fraction of identical entries
    return np.float64(np.mean(y_true == y_pred))
