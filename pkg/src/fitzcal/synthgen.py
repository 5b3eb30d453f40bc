"""Synthetic probability-map/mask datasets with a per-group score shift.

Each image carries a centered full-width rectangular lesion band. Pixel
scores are logistic(mu - delta_g + sigma * z) with z standard normal from
one sequential pinned stream (splitmix64 + Box-Muller), consumed row-major
across images in ascending group order. Subtracting delta_g from every
logit shifts that group's score distribution left, which drags its optimal
operating point below the global one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .data_model import (BinaryMask, DatasetManifest, GroupLabel, ImageRecord,
                         save_manifest, save_mask, write_fpm1)
from .errors import DataError
from .prng import GaussianStream, mix64

MANIFEST_NAME = "manifest.csv"


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    images_per_group: int = 30
    width: int = 64
    height: int = 64
    lesion_fraction: float = 0.05
    mu_fg: float = 3.0
    mu_bg: float = -3.0
    sigma: float = 1.5
    shift_by_group: Mapping[GroupLabel, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.mu_fg <= self.mu_bg:
            raise DataError("mu_fg must exceed mu_bg", category="synth-config")
        if self.sigma <= 0:
            raise DataError("sigma must be positive", category="synth-config")
        if not 0 < self.lesion_fraction < 1:
            raise DataError("lesion_fraction must be in (0, 1)", category="synth-config")
        if self.images_per_group < 1 or self.width < 1 or self.height < 1:
            raise DataError("counts and dimensions must be positive", category="synth-config")


def lesion_band(cfg: SynthConfig) -> tuple[int, int]:
    """Row range [start, stop) of the centered lesion band."""
    rows = int(round(cfg.lesion_fraction * cfg.height))
    rows = min(max(rows, 1), cfg.height)
    start = (cfg.height - rows) // 2
    return start, start + rows


def generate(cfg: SynthConfig, out_dir) -> DatasetManifest:
    """Write FPM1/FBM1 files plus manifest.csv; one patient per image."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start, stop = lesion_band(cfg)
    n = cfg.width * cfg.height

    mask = np.zeros((cfg.height, cfg.width), dtype=np.uint8)
    mask[start:stop, :] = 1
    mask_flat = mask.reshape(-1)
    mask_obj = BinaryMask(cfg.width, cfg.height, mask_flat.copy())
    mu = np.where(mask_flat == 1, cfg.mu_fg, cfg.mu_bg)

    stream = GaussianStream(mix64(cfg.seed))
    records = []
    for g in GroupLabel:
        delta = float(cfg.shift_by_group.get(g, 0.0))
        for i in range(cfg.images_per_group):
            z = stream.block(n)
            logits = mu - delta + cfg.sigma * z
            probs = 1.0 / (1.0 + np.exp(-logits))
            image_id = f"img-{g.token}-{i:03d}"
            prob_name = f"{image_id}.fpm"
            mask_name = f"{image_id}.fbm"
            write_fpm1(out_dir / prob_name, cfg.width, cfg.height, probs)
            save_mask(mask_obj, out_dir / mask_name)
            records.append(ImageRecord(image_id, f"pat-{g.token}-{i:03d}", g,
                                       prob_name, mask_name))
    manifest = DatasetManifest(tuple(records))
    save_manifest(manifest, out_dir / MANIFEST_NAME)
    return manifest


def parse_shift_spec(spec: str) -> dict[GroupLabel, float]:
    """Parse a CLI shift spec like ``VI=1.0,V=0.5``."""
    shifts: dict[GroupLabel, float] = {}
    if not spec:
        return shifts
    for part in spec.split(","):
        if "=" not in part:
            raise DataError(f"bad shift entry {part!r}, expected GROUP=DELTA",
                            category="shift-spec")
        token, value = part.split("=", 1)
        try:
            shifts[GroupLabel.from_token(token.strip())] = float(value)
        except ValueError:
            raise DataError(f"bad shift value {value!r}", category="shift-spec") from None
    return shifts
