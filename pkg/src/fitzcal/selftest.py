"""Built-in consistency suites: fast-vs-naive curve equivalence on random
images and argmax dominance on freshly generated synthetic datasets."""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from . import calibration, splitting, synthgen
from .data_model import BinaryMask, GroupLabel, ProbMap
from .errors import ConsistencyError
from .metrics import curve_fast, curve_naive
from .pipeline import sweep_split
from .prng import SplitMix64, mix64


def random_image(rng: SplitMix64, max_side: int = 32) -> tuple[ProbMap, BinaryMask]:
    """Random quantized image; occasionally forces all-zero / all-one masks."""
    width = 1 + rng.next_below(max_side)
    height = 1 + rng.next_below(max_side)
    n = width * height
    probs = np.array([rng.next_below(1001) for _ in range(n)], dtype=np.uint16)
    style = rng.next_below(4)
    if style == 0:
        labels = np.zeros(n, dtype=np.uint8)
    elif style == 1:
        labels = np.ones(n, dtype=np.uint8)
    else:
        labels = np.array([rng.next_below(2) for _ in range(n)], dtype=np.uint8)
    return ProbMap(width, height, probs), BinaryMask(width, height, labels)


def check_oracle_equivalence(images: int = 60, seed: int = 1, max_side: int = 32) -> None:
    rng = SplitMix64(mix64(seed))
    for i in range(images):
        prob, mask = random_image(rng, max_side)
        for metric in ("dice", "biou"):
            fast = curve_fast(prob, mask, metric)
            naive = curve_naive(prob, mask, metric)
            if not np.array_equal(fast.values, naive.values):
                raise ConsistencyError(
                    f"curve_fast != curve_naive for random image {i} ({metric})",
                    category="oracle")


def check_dominance_on_synthetic(datasets: int = 10, seed: int = 7) -> None:
    for d in range(datasets):
        cfg = synthgen.SynthConfig(
            seed=mix64(seed + d), images_per_group=6, width=16, height=16,
            sigma=1.0 + 0.25 * (d % 3),
            shift_by_group={GroupLabel.VI: 0.25 * (d % 5)})
        with tempfile.TemporaryDirectory() as tmp:
            manifest = synthgen.generate(cfg, tmp)
            manifest = splitting.split(manifest, splitting.SplitConfig(seed=d))
            tune = sweep_split(manifest, Path(tmp), "tune")
            if not tune:
                continue
            for metric in ("dice", "biou"):
                for mode in ("macro", "micro"):
                    ops = calibration.select_optima(tune, metric, mode=mode)
                    calibration.tuning_dominance_check(tune, ops, mode=mode)


def run(datasets: int = 10, images: int = 60, out=None) -> int:
    """Run both suites; returns the number of failed checks."""
    failures = 0
    for name, check in (
        ("oracle-equivalence", lambda: check_oracle_equivalence(images=images)),
        ("tuning-dominance", lambda: check_dominance_on_synthetic(datasets=datasets)),
    ):
        try:
            check()
        except ConsistencyError as exc:
            failures += 1
            if out:
                print(f"FAIL {name}: {exc}", file=out)
        else:
            if out:
                print(f"PASS {name}", file=out)
    return failures
