"""Operating-point selection on the tuning split and frozen evaluation on
the test split.

Selection is a plain argmax over the 990-point aggregate curve; ties break
toward the smallest threshold. Groups with no tuning images inherit the
global threshold and are flagged as fallbacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import GroupLabel
from .errors import ConsistencyError, DataError
from .metrics import (CurveCounts, MetricCurve, aggregate_curves,
                      curve_from_counts, grid_index, threshold_grid)


@dataclass(frozen=True)
class ImageCurves:
    """One image's sweep counts plus the labels needed for stratification."""

    image_id: str
    group: GroupLabel
    counts: CurveCounts


@dataclass(frozen=True)
class OperatingPointSet:
    metric: str
    tau_all: float
    tau_by_group: dict[GroupLabel, float]
    fallback_groups: frozenset[GroupLabel] = field(default_factory=frozenset)

    def __post_init__(self):
        missing = set(GroupLabel) - set(self.tau_by_group)
        if missing:
            raise DataError(f"operating points missing groups {sorted(missing)}",
                            category="ops")


@dataclass(frozen=True)
class EvaluationRow:
    subset: str  # "Overall" or a group token
    metric_at_global: float | None
    metric_at_group: float | None = None
    delta_pct: float | None = None


def _aggregate(images, metric, mode) -> MetricCurve:
    curves = [curve_from_counts(im.counts, metric) for im in images]
    return aggregate_curves(curves, mode=mode,
                            counts=[im.counts for im in images],
                            image_ids=[im.image_id for im in images])


def _argmax_tau(curve: MetricCurve) -> float:
    # np.argmax returns the first maximum: smallest-tau tie-break.
    k = int(np.argmax(curve.values))
    return float(threshold_grid()[k])


def select_optima(tuning: list[ImageCurves], metric: str, mode: str = "macro") -> OperatingPointSet:
    """Argmax thresholds: one overall, one per group (fallback = tau_all)."""
    if not tuning:
        raise DataError("empty tuning set", category="empty-tune-split")
    tau_all = _argmax_tau(_aggregate(tuning, metric, mode))
    tau_by_group = {}
    fallback = set()
    for g in GroupLabel:
        members = [im for im in tuning if im.group == g]
        if members:
            tau_by_group[g] = _argmax_tau(_aggregate(members, metric, mode))
        else:
            tau_by_group[g] = tau_all
            fallback.add(g)
    return OperatingPointSet(metric, tau_all, tau_by_group, frozenset(fallback))


def _value_at(images, metric, mode, tau) -> float:
    return float(_aggregate(images, metric, mode).values[grid_index(tau)])


def delta_pct(metric_at_global: float, metric_at_group: float) -> float | None:
    """Relative gain in percent, from full-precision metric values."""
    if metric_at_global <= 0:
        return None
    return 100.0 * (metric_at_group - metric_at_global) / metric_at_global


def evaluate_frozen(test: list[ImageCurves], ops: OperatingPointSet,
                    mode: str = "macro") -> list[EvaluationRow]:
    """Evaluate frozen thresholds: one Overall row, then one row per group.

    A group with no test images yields an absent-data row.
    """
    if not test:
        raise DataError("empty test set", category="empty-test-split")
    rows = [EvaluationRow("Overall", _value_at(test, ops.metric, mode, ops.tau_all))]
    for g in GroupLabel:
        members = [im for im in test if im.group == g]
        if not members:
            rows.append(EvaluationRow(g.token, None))
            continue
        at_global = _value_at(members, ops.metric, mode, ops.tau_all)
        at_group = _value_at(members, ops.metric, mode, ops.tau_by_group[g])
        rows.append(EvaluationRow(g.token, at_global, at_group,
                                  delta_pct(at_global, at_group)))
    return rows


def tuning_dominance_check(tuning: list[ImageCurves], ops: OperatingPointSet,
                           mode: str = "macro") -> list[tuple[GroupLabel, float, float]]:
    """Self-audit: on the tuning data each non-fallback group's own threshold
    must do at least as well as the global one. A violation means the argmax
    selection is buggy and raises ConsistencyError."""
    results = []
    for g in GroupLabel:
        if g in ops.fallback_groups:
            continue
        members = [im for im in tuning if im.group == g]
        if not members:
            continue
        at_group = _value_at(members, ops.metric, mode, ops.tau_by_group[g])
        at_global = _value_at(members, ops.metric, mode, ops.tau_all)
        if at_group < at_global:
            raise ConsistencyError(
                f"dominance violation for group {g.token}: "
                f"{at_group} at tau_g < {at_global} at tau_all",
                category="dominance")
        results.append((g, at_group, at_global))
    return results
