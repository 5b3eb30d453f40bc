"""Patient-level, group-stratified train/tune/test assignment.

Within each Fitzpatrick stratum (processed in ascending group order)
patient ids are sorted, shuffled by a pinned splitmix64-driven
Fisher-Yates, apportioned 30/30/40 by largest remainder, and assigned as
contiguous runs of the shuffled order to train, tune, test. The result is
bit-identical for a given (manifest, seed) on any platform.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from .data_model import DatasetManifest, GroupLabel, ImageRecord
from .errors import DataError, LeakageError
from .prng import stratum_stream

log = logging.getLogger(__name__)

SPLIT_ORDER = ("train", "tune", "test")


@dataclass(frozen=True)
class SplitConfig:
    seed: int = 0
    fractions: tuple[float, float, float] = (0.30, 0.30, 0.40)

    def __post_init__(self):
        if any(f <= 0 for f in self.fractions) or abs(sum(self.fractions) - 1.0) > 1e-9:
            raise DataError(f"fractions {self.fractions} must be positive and sum to 1",
                            category="split-config")


def assign_patient_group(records: list[ImageRecord]) -> GroupLabel:
    """Modal group of a patient's images; ties break toward the darker group."""
    if not records:
        raise DataError("patient has no records", category="empty")
    counts = Counter(rec.group for rec in records)
    best = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    return best[0]


def largest_remainder(n: int, fractions: tuple[float, ...]) -> tuple[int, ...]:
    """Integer apportionment of n by largest fractional remainder.

    Remainder ties break toward the earlier split (train, tune, test).
    """
    quotas = [n * f for f in fractions]
    counts = [int(q) for q in quotas]
    remainders = [q - c for q, c in zip(quotas, counts)]
    for _ in range(n - sum(counts)):
        i = max(range(len(fractions)), key=lambda i: (remainders[i], -i))
        counts[i] += 1
        remainders[i] = -1.0
    return tuple(counts)


def split(manifest: DatasetManifest, cfg: SplitConfig = SplitConfig()) -> DatasetManifest:
    """Assign every patient (and hence image) to train/tune/test."""
    by_patient: dict[str, list[ImageRecord]] = {}
    for rec in manifest.records:
        by_patient.setdefault(rec.patient_id, []).append(rec)
    patient_group = {pid: assign_patient_group(recs) for pid, recs in by_patient.items()}

    assignment: dict[str, str] = {}
    for g in GroupLabel:
        patients = sorted(pid for pid, pg in patient_group.items() if pg == g)
        if not patients:
            continue
        rng = stratum_stream(cfg.seed, g.value - 1)
        rng.shuffle(patients)
        counts = largest_remainder(len(patients), cfg.fractions)
        if 0 in counts:
            empty = [s for s, c in zip(SPLIT_ORDER, counts) if c == 0]
            log.warning("stratum %s has %d patients; empty split(s): %s",
                        g.token, len(patients), ", ".join(empty))
        start = 0
        for split_name, count in zip(SPLIT_ORDER, counts):
            for pid in patients[start : start + count]:
                assignment[pid] = split_name
            start += count
    return manifest.with_splits(assignment)


@dataclass(frozen=True)
class SplitReport:
    image_counts: dict[GroupLabel, dict[str, int]]  # per group, per split
    patient_counts: dict[str, int]  # per split


def verify_split(manifest: DatasetManifest) -> SplitReport:
    """Check patient disjointness across splits; report per-group counts."""
    splits_of: dict[str, set[str]] = {}
    image_counts = {g: {s: 0 for s in SPLIT_ORDER} for g in GroupLabel}
    for rec in manifest.records:
        if rec.split == "unassigned":
            raise DataError(f"record {rec.image_id!r} is unassigned; run split first",
                            category="unassigned")
        splits_of.setdefault(rec.patient_id, set()).add(rec.split)
        image_counts[rec.group][rec.split] += 1
    for pid, splits in sorted(splits_of.items()):
        if len(splits) > 1:
            raise LeakageError(
                f"patient {pid!r} appears in multiple splits: {sorted(splits)}")
    patient_counts = {s: 0 for s in SPLIT_ORDER}
    for splits in splits_of.values():
        patient_counts[next(iter(splits))] += 1
    return SplitReport(image_counts, patient_counts)
