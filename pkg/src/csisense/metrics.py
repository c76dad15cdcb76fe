"""Evaluation: confusion matrices, per-class precision/recall/F1, overall
accuracy, and the two coordinate-space location errors (mean over all test
samples, and mean over misclassified samples only)."""

import warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import ConfigError, LabelError, UndefinedMetricError


class ConfusionMatrix:
    """K x K counts; rows are ground truth, columns are predictions."""

    def __init__(self, k):
        if k < 1:
            raise LabelError(f"class count must be >= 1, got {k}")
        self.k = k
        self.counts = np.zeros((k, k), dtype=np.int64)

    def add(self, truth, pred):
        if not (0 <= truth < self.k and 0 <= pred < self.k):
            raise LabelError(
                f"label pair ({truth}, {pred}) outside 0..{self.k - 1}"
            )
        self.counts[truth, pred] += 1

    def merge(self, other):
        if other.k != self.k:
            raise LabelError("cannot merge confusion matrices of different sizes")
        self.counts += other.counts
        return self

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def accuracy(self):
        if self.total == 0:
            raise UndefinedMetricError("accuracy undefined for an empty confusion matrix")
        return float(np.trace(self.counts)) / self.total

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("truth\\pred," + ",".join(str(j) for j in range(self.k)) + "\n")
            for i in range(self.k):
                fh.write(
                    str(i) + "," + ",".join(str(int(v)) for v in self.counts[i]) + "\n"
                )


def confusion(preds, labels, k):
    preds = list(preds)
    labels = list(labels)
    if len(preds) != len(labels):
        raise LabelError(
            f"{len(preds)} predictions vs {len(labels)} labels"
        )
    cm = ConfusionMatrix(k)
    for truth, pred in zip(labels, preds):
        cm.add(int(truth), int(pred))
    return cm


@dataclass
class ClassMetrics:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: float


def f1_score(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def class_metrics(cm: ConfusionMatrix):
    """Per-class precision/recall/F1 from counts; zero denominators yield 0
    with a warning so degenerate runs still report full tables."""
    if cm.total == 0:
        raise UndefinedMetricError("metrics undefined for an empty confusion matrix")
    counts = cm.counts
    diag = np.diag(counts).astype(np.float64)
    col_sums = counts.sum(axis=0).astype(np.float64)
    row_sums = counts.sum(axis=1).astype(np.float64)
    precision = np.zeros(cm.k)
    recall = np.zeros(cm.k)
    f1 = np.zeros(cm.k)
    for i in range(cm.k):
        if col_sums[i] == 0 or row_sums[i] == 0:
            warnings.warn(
                f"class {i} has an empty row or column; its metrics default to 0",
                stacklevel=2,
            )
        precision[i] = diag[i] / col_sums[i] if col_sums[i] > 0 else 0.0
        recall[i] = diag[i] / row_sums[i] if row_sums[i] > 0 else 0.0
        f1[i] = f1_score(precision[i], recall[i])
    return ClassMetrics(precision=precision, recall=recall, f1=f1, accuracy=cm.accuracy)


def _coord_distances(pred_locs, true_locs, coords, squared):
    pred_locs = list(pred_locs)
    true_locs = list(true_locs)
    if len(pred_locs) != len(true_locs):
        raise LabelError(
            f"{len(pred_locs)} predictions vs {len(true_locs)} labels"
        )
    if not pred_locs:
        raise UndefinedMetricError("location error undefined with no samples")
    dists = []
    for p, t in zip(pred_locs, true_locs):
        if p not in coords or t not in coords:
            missing = p if p not in coords else t
            raise ConfigError(f"no coordinates for location {missing}")
        px, py = coords[p]
        tx, ty = coords[t]
        d2 = (px - tx) ** 2 + (py - ty) ** 2
        dists.append(d2 if squared else float(np.sqrt(d2)))
    return np.array(dists), np.array(pred_locs) != np.array(true_locs)


def ale(pred_locs, true_locs, coords, squared=False):
    """Mean coordinate-space error in meters over all samples. Euclidean by
    default; `squared` switches to the squared-distance reading."""
    dists, _ = _coord_distances(pred_locs, true_locs, coords, squared)
    return float(dists.mean())


def ame(pred_locs, true_locs, coords, squared=False):
    """Mean coordinate-space error over misclassified samples only; None when
    everything is classified correctly (not applicable)."""
    dists, wrong = _coord_distances(pred_locs, true_locs, coords, squared)
    m = int(wrong.sum())
    if m == 0:
        return None
    return float(dists[wrong].mean())


def round_half_up(value, places=2):
    """Table rounding: 0.005 -> 0.01 rather than banker's rounding."""
    q = Decimal(10) ** -places
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def write_class_metrics_csv(path, metrics: ClassMetrics, places=2):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("class,precision,recall,f1\n")
        for i in range(len(metrics.precision)):
            fh.write(
                f"{i},{round_half_up(metrics.precision[i], places)},"
                f"{round_half_up(metrics.recall[i], places)},"
                f"{round_half_up(metrics.f1[i], places)}\n"
            )


def write_summary_csv(path, rows):
    """rows: (task, accuracy, ale_m, ame_m) with None rendered as 'na'."""

    def fmt(v):
        return "na" if v is None else f"{v:.4f}"

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("task,accuracy,ale_m,ame_m\n")
        for task, acc, ale_m, ame_m in rows:
            fh.write(f"{task},{fmt(acc)},{fmt(ale_m)},{fmt(ame_m)}\n")
