"""Shared orchestration: image loading, cached threshold sweeps, and the
tuning/test isolation used by the CLI subcommands.

Sweep results are cached per image as .npz files keyed by image id and the
sha256 of the probability-map and mask bytes, so calibrate and evaluate
never recompute each other's work and a stale cache can never be reused
after the underlying files change.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .calibration import ImageCurves
from .data_model import DatasetManifest, ImageRecord, load_manifest, load_mask, load_probmap
from .errors import DataError
from .metrics import CurveCounts, sweep_counts


def resolve_path(base_dir: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base_dir / p


def default_threads() -> int:
    env = os.environ.get("FITZCAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DataError(f"FITZCAL_THREADS={env!r} is not an integer",
                            category="config") from None
    return os.cpu_count() or 1


def content_hash(prob_path: Path, mask_path: Path) -> str:
    h = hashlib.sha256()
    h.update(prob_path.read_bytes())
    h.update(mask_path.read_bytes())
    return h.hexdigest()


def _compute_counts(rec: ImageRecord, base_dir: Path, cache_dir: Path | None) -> CurveCounts:
    prob_path = resolve_path(base_dir, rec.prob_path)
    mask_path = resolve_path(base_dir, rec.mask_path)
    cache_file = None
    if cache_dir is not None:
        key = content_hash(prob_path, mask_path)[:32]
        cache_file = cache_dir / f"{rec.image_id}-{key}.npz"
        if cache_file.exists():
            data = np.load(cache_file)
            return CurveCounts(data["tp"], data["fp"],
                               int(data["n_fg"]), int(data["n_pixels"]))
    prob = load_probmap(prob_path)
    mask = load_mask(mask_path)
    if (prob.width, prob.height) != (mask.width, mask.height):
        raise DataError(f"{rec.image_id}: prob/mask dimension mismatch", category="dims")
    counts = sweep_counts(prob, mask)
    if cache_file is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        tmp = cache_file.with_name(cache_file.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.savez(fh, tp=counts.tp, fp=counts.fp,
                     n_fg=counts.n_fg, n_pixels=counts.n_pixels)
        os.replace(tmp, cache_file)
    return counts


def sweep_split(manifest: DatasetManifest, base_dir, split: str,
                cache_dir=None, threads: int | None = None) -> list[ImageCurves]:
    """Compute (or load cached) sweep counts for every record in one split.

    Results are returned sorted by image_id, independent of thread count.
    """
    records = manifest.by_split(split)
    base_dir = Path(base_dir)
    cache = Path(cache_dir) if cache_dir is not None else None
    threads = threads or default_threads()
    if threads <= 1 or len(records) <= 1:
        results = [_compute_counts(rec, base_dir, cache) for rec in records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: _compute_counts(r, base_dir, cache), records))
    images = [ImageCurves(rec.image_id, rec.group, counts)
              for rec, counts in zip(records, results)]
    images.sort(key=lambda im: im.image_id)
    return images


def load_split_manifest(path) -> tuple[DatasetManifest, Path]:
    """Load a manifest and return it with its base directory for path resolution."""
    path = Path(path)
    return load_manifest(path), path.parent
