"""Joint classification loss: per-head softmax cross entropy, summed with
the location part weighted by lambda. Per-head losses are reduced by the
batch mean so the learning rate keeps its meaning at any batch size."""

from dataclasses import dataclass

import numpy as np

from .errors import LabelError, NumericError, ShapeError


@dataclass
class JointLossValue:
    total: float
    activity_part: float
    location_part: float
    lam: float


def softmax(scores):
    """Row-wise softmax with max subtraction for stability."""
    scores = np.asarray(scores)
    if not np.all(np.isfinite(scores)):
        raise NumericError("softmax input contains NaN/Inf")
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(scores):
    scores = np.asarray(scores)
    if not np.all(np.isfinite(scores)):
        raise NumericError("log_softmax input contains NaN/Inf")
    shifted = scores - scores.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(scores, true_class):
    """-log softmax(scores)[t] for one score vector, in fused log-sum-exp form."""
    scores = np.asarray(scores)
    if scores.ndim != 1:
        raise ShapeError(f"cross_entropy expects a score vector, got {scores.shape}")
    k = scores.shape[0]
    if not 0 <= true_class < k:
        raise LabelError(f"class {true_class} out of range 0..{k - 1}")
    return float(-log_softmax(scores)[true_class])


def _mean_cross_entropy(scores, labels):
    """Batch-mean cross entropy and its gradient w.r.t. the raw scores."""
    b, k = scores.shape
    labels = np.asarray(labels)
    if labels.shape != (b,):
        raise ShapeError(f"labels shape {labels.shape} != ({b},)")
    if labels.min() < 0 or labels.max() >= k:
        raise LabelError(f"labels outside 0..{k - 1}")
    logp = log_softmax(scores)
    rows = np.arange(b)
    loss = float(-logp[rows, labels].mean())
    grad = np.exp(logp)
    grad[rows, labels] -= 1.0
    grad /= b
    return loss, grad.astype(scores.dtype)


def joint_loss(act_scores, loc_scores, act_labels, loc_labels, lam=1.0):
    """Loss value only; see joint_loss_and_grads for the training path."""
    value, _, _ = joint_loss_and_grads(act_scores, loc_scores, act_labels, loc_labels, lam)
    return value


def joint_loss_and_grads(act_scores, loc_scores, act_labels, loc_labels, lam=1.0):
    act_scores = np.asarray(act_scores)
    loc_scores = np.asarray(loc_scores)
    if act_scores.ndim != 2 or loc_scores.ndim != 2:
        raise ShapeError("joint_loss expects [B, K] score matrices")
    if act_scores.shape[0] != loc_scores.shape[0]:
        raise ShapeError(
            f"batch mismatch: {act_scores.shape[0]} activity rows vs "
            f"{loc_scores.shape[0]} location rows"
        )
    act_part, dact = _mean_cross_entropy(act_scores, act_labels)
    loc_part, dloc = _mean_cross_entropy(loc_scores, loc_labels)
    value = JointLossValue(
        total=act_part + lam * loc_part,
        activity_part=act_part,
        location_part=loc_part,
        lam=lam,
    )
    return value, dact, dloc * lam
