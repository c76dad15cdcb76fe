"""Dependent multichannel dynamic time warping and kNN voting.

Local cost between two time steps is the Euclidean distance over the full
52-vector; the DP uses the classic (i-1,j), (i,j-1), (i-1,j-1) steps. An
optional Sakoe-Chiba band forbids |i - j| > band_radius. The inner loops
are numba-compiled; pairs in the pairwise kernel are independent, so the
result is identical at any thread count.
"""

import os

# Prefer the always-available threading layer; the platform TBB probe is
# noisy and unnecessary for independent per-pair work.
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numpy as np
from numba import njit, prange

from .errors import InfeasibleBandError, ShapeError, ValidationError


@njit(cache=True)
def _dtw_pair(a, b, band):
    """DP over frames a [Ta, C] vs b [Tb, C]; band < 0 disables the band.
    Returns inf when the band admits no path."""
    ta, ch = a.shape
    tb = b.shape[0]
    prev = np.full(tb, np.inf)
    cur = np.full(tb, np.inf)
    for i in range(ta):
        if band >= 0:
            jlo = i - band
            if jlo < 0:
                jlo = 0
            jhi = i + band
            if jhi > tb - 1:
                jhi = tb - 1
        else:
            jlo = 0
            jhi = tb - 1
        for j in range(tb):
            cur[j] = np.inf
        for j in range(jlo, jhi + 1):
            acc = 0.0
            for c in range(ch):
                d = a[i, c] - b[j, c]
                acc += d * d
            cost = np.sqrt(acc)
            if i == 0 and j == 0:
                best = 0.0
            else:
                best = np.inf
                if i > 0 and prev[j] < best:
                    best = prev[j]
                if j > 0 and cur[j - 1] < best:
                    best = cur[j - 1]
                if i > 0 and j > 0 and prev[j - 1] < best:
                    best = prev[j - 1]
            cur[j] = cost + best
        for j in range(tb):
            prev[j] = cur[j]
    return prev[tb - 1]


@njit(parallel=True, cache=True)
def _pairwise_kernel(a_stack, b_stack, band):
    na = a_stack.shape[0]
    nb = b_stack.shape[0]
    out = np.empty((na, nb))
    for p in prange(na * nb):
        i = p // nb
        j = p % nb
        out[i, j] = _dtw_pair(a_stack[i], b_stack[j], band)
    return out


def _frames(series):
    series = np.ascontiguousarray(np.atleast_2d(np.asarray(series, dtype=np.float64)))
    if series.ndim != 2 or series.shape[1] < 1:
        raise ShapeError(f"series must be [C, T] with T >= 1, got {series.shape}")
    return np.ascontiguousarray(series.T)  # [T, C] for the kernel


def _band_arg(band):
    if band is None:
        return -1
    band = int(band)
    if band < 0:
        raise ValidationError(f"band_radius must be >= 0, got {band}")
    return band


def dtw_distance(a, b, band=None):
    """DTW distance between two [C, T] series (same channel count)."""
    fa = _frames(a)
    fb = _frames(b)
    if fa.shape[1] != fb.shape[1]:
        raise ShapeError(
            f"channel mismatch: {fa.shape[1]} vs {fb.shape[1]}"
        )
    result = _dtw_pair(fa, fb, _band_arg(band))
    if not np.isfinite(result):
        raise InfeasibleBandError(
            f"band {band} admits no warping path for lengths "
            f"{fa.shape[0]} x {fb.shape[0]}"
        )
    return float(result)


def pairwise_dtw(a_list, b_list, band=None):
    """Distance matrix [len(a_list), len(b_list)] between [C, T] series of a
    common length (computed in parallel)."""
    a_stack = np.stack([_frames(s) for s in a_list])
    b_stack = np.stack([_frames(s) for s in b_list])
    if a_stack.shape[2] != b_stack.shape[2]:
        raise ShapeError(
            f"channel mismatch: {a_stack.shape[2]} vs {b_stack.shape[2]}"
        )
    out = _pairwise_kernel(a_stack, b_stack, _band_arg(band))
    if not np.all(np.isfinite(out)):
        raise InfeasibleBandError(
            f"band {band} admits no warping path for lengths "
            f"{a_stack.shape[1]} x {b_stack.shape[1]}"
        )
    return out


def _vote(dist_row, labels, k):
    """Majority label among the k nearest; ties broken by the smaller summed
    distance within the k-set, then by the lower label."""
    ntr = dist_row.shape[0]
    k = min(k, ntr)
    order = np.lexsort((np.arange(ntr), dist_row))[:k]
    votes = {}
    sums = {}
    for idx in order:
        label = int(labels[idx])
        votes[label] = votes.get(label, 0) + 1
        sums[label] = sums.get(label, 0.0) + float(dist_row[idx])
    best = max(votes.values())
    tied = [label for label, v in votes.items() if v == best]
    tied.sort(key=lambda label: (sums[label], label))
    return tied[0]


def knn_predict(dist_matrix, train_labels, k):
    """Vote per row of a [n_test, n_train] distance matrix."""
    train_labels = np.asarray(train_labels)
    if dist_matrix.shape[1] != train_labels.shape[0]:
        raise ShapeError(
            f"distance matrix has {dist_matrix.shape[1]} columns but "
            f"{train_labels.shape[0]} labels given"
        )
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    return np.array([_vote(row, train_labels, k) for row in dist_matrix])


def knn_classify(test_series, train_series, train_labels, k=1, band=None):
    """Label one [C, T] series by DTW-kNN against a training list."""
    if len(train_series) == 0:
        raise ValidationError("training set is empty")
    dists = np.array([dtw_distance(test_series, tr, band) for tr in train_series])
    return _vote(dists, np.asarray(train_labels), k)
