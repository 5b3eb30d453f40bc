"""Dice / bIoU confusion counts and full threshold-sweep curves.

``curve_fast`` builds two 1001-bin histograms of the quantized pixel values
(foreground and background) and takes suffix cumulative sums, giving the
tp/fp counts at all 990 grid thresholds in one pass: O(N + 1000) per image.
The hot loop lives in a compiled extension when available, with a numpy
fallback selected at import. ``curve_naive`` recomputes every threshold by
an independent full-image scan and serves as the internal oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import BinaryMask, ProbMap
from .errors import DataError

try:
    from . import _kernels as _impl
except ImportError:  # pragma: no cover - depends on build environment
    from . import _kernels_py as _impl

KERNEL_BACKEND = _impl.BACKEND

METRICS = ("dice", "biou")
METRIC_DISPLAY = {"dice": "Dice", "biou": "bIoU"}

GRID_SIZE = 990


def threshold_grid() -> np.ndarray:
    """The 990 thresholds k/1000 for k = 1..990."""
    return np.arange(1, GRID_SIZE + 1, dtype=np.float64) / 1000.0


def grid_index(tau: float) -> int:
    """Map a grid threshold to its index k-1; rejects off-grid values."""
    k = int(round(tau * 1000))
    if not 1 <= k <= GRID_SIZE or abs(tau * 1000 - k) > 1e-9:
        raise DataError(f"threshold {tau} is not on the 0.001..0.990 grid",
                        category="threshold")
    return k - 1


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int


def dice(c: ConfusionCounts) -> float:
    """2*tp / (2*tp + fp + fn); 1.0 when prediction and mask are both empty."""
    denom = 2 * c.tp + c.fp + c.fn
    return 1.0 if denom == 0 else 2 * c.tp / denom


def biou(c: ConfusionCounts) -> float:
    """tp / (tp + fp + fn); 1.0 when prediction and mask are both empty."""
    denom = c.tp + c.fp + c.fn
    return 1.0 if denom == 0 else c.tp / denom


def _check_dims(prob: ProbMap, mask: BinaryMask) -> None:
    if (prob.width, prob.height) != (mask.width, mask.height):
        raise DataError(
            f"dimension mismatch: prob {prob.width}x{prob.height} "
            f"vs mask {mask.width}x{mask.height}", category="dims")


def confusion_at(prob: ProbMap, mask: BinaryMask, tau: float) -> ConfusionCounts:
    """Pixel confusion counts for the inclusive rule q >= round(tau*1000)."""
    _check_dims(prob, mask)
    k = grid_index(tau) + 1
    pred = prob.probs >= k
    m = mask.labels.astype(bool)
    tp = int(np.count_nonzero(pred & m))
    fp = int(np.count_nonzero(pred & ~m))
    fn = int(np.count_nonzero(~pred & m))
    tn = prob.probs.size - tp - fp - fn
    return ConfusionCounts(tp, fp, fn, tn)


@dataclass(frozen=True)
class CurveCounts:
    """Per-image tp/fp at every grid threshold, plus image totals.

    fn(k) = n_fg - tp(k); tn(k) = (n_pixels - n_fg) - fp(k).
    """

    tp: np.ndarray  # int64, length 990
    fp: np.ndarray  # int64, length 990
    n_fg: int
    n_pixels: int

    @property
    def fn(self) -> np.ndarray:
        return self.n_fg - self.tp

    @property
    def tn(self) -> np.ndarray:
        return (self.n_pixels - self.n_fg) - self.fp


@dataclass(frozen=True)
class MetricCurve:
    metric: str  # "dice" | "biou"
    values: np.ndarray  # float64, length 990


def metric_values(metric: str, tp: np.ndarray, fp: np.ndarray, fn: np.ndarray) -> np.ndarray:
    """Vectorized Dice/bIoU over count arrays, both-empty cells -> 1.0."""
    if metric == "dice":
        denom = 2 * tp + fp + fn
        num = 2 * tp
    elif metric == "biou":
        denom = tp + fp + fn
        num = tp
    else:
        raise ValueError(f"unknown metric {metric!r}")
    out = np.ones(len(denom), dtype=np.float64)
    nz = denom != 0
    out[nz] = num[nz] / denom[nz]
    return out


def sweep_counts(prob: ProbMap, mask: BinaryMask) -> CurveCounts:
    """Histogram-sweep tp/fp counts for all 990 thresholds."""
    _check_dims(prob, mask)
    tp, fp = _impl.sweep_counts(prob.probs, mask.labels)
    return CurveCounts(tp, fp, int(np.count_nonzero(mask.labels)), prob.probs.size)


def curve_from_counts(counts: CurveCounts, metric: str) -> MetricCurve:
    return MetricCurve(metric, metric_values(metric, counts.tp, counts.fp, counts.fn))


def curve_fast(prob: ProbMap, mask: BinaryMask, metric: str) -> MetricCurve:
    return curve_from_counts(sweep_counts(prob, mask), metric)


def curve_naive(prob: ProbMap, mask: BinaryMask, metric: str) -> MetricCurve:
    """Reference curve: 990 independent full-image threshold scans."""
    _check_dims(prob, mask)
    scorer = dice if metric == "dice" else biou
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    q = prob.probs
    m = mask.labels.astype(bool)
    n = q.size
    values = np.empty(GRID_SIZE, dtype=np.float64)
    for k in range(1, GRID_SIZE + 1):
        pred = q >= k
        tp = int(np.count_nonzero(pred & m))
        fp = int(np.count_nonzero(pred & ~m))
        fn = int(np.count_nonzero(~pred & m))
        values[k - 1] = scorer(ConfusionCounts(tp, fp, fn, n - tp - fp - fn))
    return MetricCurve(metric, values)


def aggregate_curves(curves, mode="macro", counts=None, image_ids=None) -> MetricCurve:
    """Aggregate per-image curves across a set of images.

    macro: arithmetic mean of per-image values at each threshold, summed in
    ascending image_id order (bit-identical regardless of input order or
    thread count). micro: the metric applied to pixel-count sums, which
    requires per-image ``counts``.
    """
    curves = list(curves)
    if not curves:
        raise DataError("cannot aggregate an empty curve set", category="empty")
    metric = curves[0].metric
    if any(c.metric != metric for c in curves):
        raise DataError("mixed metrics in aggregation", category="metric-mix")
    if mode == "macro":
        if image_ids is not None:
            order = sorted(range(len(curves)), key=lambda i: image_ids[i])
        else:
            order = range(len(curves))
        acc = np.zeros(GRID_SIZE, dtype=np.float64)
        for i in order:
            acc += curves[i].values
        return MetricCurve(metric, acc / len(curves))
    if mode == "micro":
        if counts is None:
            raise DataError("micro aggregation needs per-image counts", category="micro")
        if image_ids is not None:
            order = sorted(range(len(counts)), key=lambda i: image_ids[i])
        else:
            order = range(len(counts))
        tp = np.zeros(GRID_SIZE, dtype=np.int64)
        fp = np.zeros(GRID_SIZE, dtype=np.int64)
        fn = np.zeros(GRID_SIZE, dtype=np.int64)
        for i in order:
            tp += counts[i].tp
            fp += counts[i].fp
            fn += counts[i].fn
        return MetricCurve(metric, metric_values(metric, tp, fp, fn))
    raise ValueError(f"unknown aggregation mode {mode!r}")


def dump_curve_csv(curve: MetricCurve, fh) -> None:
    """Debug/plot dump: header tau,value; tau with 3 decimals, value with 6."""
    fh.write("tau,value\n")
    grid = threshold_grid()
    for tau, value in zip(grid, curve.values):
        fh.write(f"{tau:.3f},{value:.6f}\n")
