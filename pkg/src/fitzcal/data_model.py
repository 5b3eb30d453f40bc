"""Core domain types and file formats.

Probability maps are quantized at ingest to integer milli-units (0..1000):
the threshold grid has resolution 0.001, so finer precision cannot change
any binarized mask, and integer pixels make the sweep bit-exact across
platforms.

Binary containers:

* FPM1 — magic ``FPM1``, u32-LE width, u32-LE height, then width*height
  IEEE-754 binary32 little-endian probabilities, row-major.
* FBM1 — magic ``FBM1``, u32-LE width, u32-LE height, then width*height
  bytes in {0, 1}, row-major.

Masks may also be imported from 8-bit PGM (P5 or P2); any value > 127 is
foreground.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import FormatError, ManifestError

SPLITS = ("train", "tune", "test", "unassigned")

FPM1_MAGIC = b"FPM1"
FBM1_MAGIC = b"FBM1"

PROB_SCALE = 1000  # milli-probability units


class GroupLabel(IntEnum):
    """Fitzpatrick skin type, ordered I (lightest) to VI (darkest)."""

    I = 1
    II = 2
    III = 3
    IV = 4
    V = 5
    VI = 6

    @classmethod
    def from_token(cls, token: str) -> "GroupLabel":
        try:
            return cls[token]
        except KeyError:
            raise ManifestError(f"unknown group token {token!r}", category="group-token") from None

    @property
    def token(self) -> str:
        return self.name


def quantize_probs(raw: np.ndarray) -> np.ndarray:
    """Quantize raw probabilities to integer milli-units, round half up.

    Rejects NaN and values outside [0, 1] beyond a 1e-6 tolerance.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if np.isnan(raw).any():
        raise FormatError("probability payload contains NaN")
    if (raw < -1e-6).any() or (raw > 1 + 1e-6).any():
        bad = raw[(raw < -1e-6) | (raw > 1 + 1e-6)]
        raise FormatError(f"probability {bad.flat[0]!r} outside [0, 1]")
    q = np.floor(raw * PROB_SCALE + 0.5)
    return np.clip(q, 0, PROB_SCALE).astype(np.uint16)


def _frozen_array(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProbMap:
    """Quantized per-pixel foreground probabilities for one image."""

    width: int
    height: int
    probs: np.ndarray  # uint16 milli-units, row-major

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise FormatError(f"bad dimensions {self.width}x{self.height}")
        if self.probs.size != self.width * self.height:
            raise FormatError("probability payload length does not match dimensions")
        if self.probs.dtype != np.uint16 or (self.probs > PROB_SCALE).any():
            raise FormatError("probabilities must be uint16 milli-units in [0, 1000]")
        object.__setattr__(self, "probs", _frozen_array(self.probs))


@dataclass(frozen=True)
class BinaryMask:
    """Ground-truth per-pixel labels for one image."""

    width: int
    height: int
    labels: np.ndarray  # uint8 in {0, 1}, row-major

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise FormatError(f"bad dimensions {self.width}x{self.height}")
        if self.labels.size != self.width * self.height:
            raise FormatError("mask payload length does not match dimensions")
        if self.labels.dtype != np.uint8 or (self.labels > 1).any():
            raise FormatError("mask labels must be uint8 in {0, 1}")
        object.__setattr__(self, "labels", _frozen_array(self.labels))


def _read_header(data: bytes, magic: bytes, path) -> tuple[int, int]:
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header")
    width, height = struct.unpack_from("<II", data, 4)
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    return width, height


def load_probmap(path) -> ProbMap:
    """Load an FPM1 file, quantizing probabilities at ingest."""
    data = Path(path).read_bytes()
    width, height = _read_header(data, FPM1_MAGIC, path)
    n = width * height
    if len(data) != 12 + 4 * n:
        raise FormatError(f"{path}: expected {12 + 4 * n} bytes, got {len(data)}")
    raw = np.frombuffer(data, dtype="<f4", count=n, offset=12)
    try:
        return ProbMap(width, height, quantize_probs(raw))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_fpm1(path, width: int, height: int, raw: np.ndarray) -> None:
    """Write raw float probabilities as an FPM1 file."""
    payload = np.asarray(raw, dtype="<f4")
    if payload.size != width * height:
        raise FormatError("payload length does not match dimensions")
    with open(path, "wb") as fh:
        fh.write(FPM1_MAGIC)
        fh.write(struct.pack("<II", width, height))
        fh.write(payload.tobytes())


def save_probmap(probmap: ProbMap, path) -> None:
    """Write a quantized map back out; load_probmap round-trips it exactly."""
    write_fpm1(path, probmap.width, probmap.height,
               probmap.probs.astype(np.float64) / PROB_SCALE)


def load_mask(path) -> BinaryMask:
    """Load a mask from FBM1, or from 8-bit PGM (>127 means foreground)."""
    data = Path(path).read_bytes()
    if data[:2] in (b"P5", b"P2"):
        return _parse_pgm(data, path)
    width, height = _read_header(data, FBM1_MAGIC, path)
    n = width * height
    if len(data) != 12 + n:
        raise FormatError(f"{path}: expected {12 + n} bytes, got {len(data)}")
    labels = np.frombuffer(data, dtype=np.uint8, count=n, offset=12)
    if (labels > 1).any():
        bad = int(labels[labels > 1][0])
        raise FormatError(f"{path}: FBM1 byte {bad} not in {{0, 1}}")
    return BinaryMask(width, height, labels.copy())


def save_mask(mask: BinaryMask, path) -> None:
    with open(path, "wb") as fh:
        fh.write(FBM1_MAGIC)
        fh.write(struct.pack("<II", mask.width, mask.height))
        fh.write(mask.labels.tobytes())


def _parse_pgm(data: bytes, path) -> BinaryMask:
    magic = data[:2]
    # Header tokens may be separated by any whitespace and '#' comments.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"{path}: non-numeric PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise FormatError(f"{path}: unsupported PGM geometry/maxval")
    n = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raster = data[pos : pos + n]
        if len(raster) < n:
            raise FormatError(f"{path}: truncated PGM raster")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        fields = data[pos:].split()
        if len(fields) < n:
            raise FormatError(f"{path}: truncated PGM raster")
        values = np.array([int(f) for f in fields[:n]], dtype=np.uint16)
    return BinaryMask(width, height, (values > 127).astype(np.uint8))


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    patient_id: str
    group: GroupLabel
    prob_path: str
    mask_path: str
    split: str = "unassigned"


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ImageRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.image_id in seen:
                raise ManifestError(f"duplicate image_id {rec.image_id!r}",
                                    category="duplicate-id")
            seen.add(rec.image_id)

    def by_split(self, split: str) -> tuple[ImageRecord, ...]:
        return tuple(r for r in self.records if r.split == split)

    def group_counts(self) -> dict[GroupLabel, int]:
        counts = {g: 0 for g in GroupLabel}
        for rec in self.records:
            counts[rec.group] += 1
        return counts

    def patients_by_split(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {s: set() for s in SPLITS}
        for rec in self.records:
            out[rec.split].add(rec.patient_id)
        return out

    def with_splits(self, assignment: dict[str, str]) -> "DatasetManifest":
        """New manifest with each record's split taken from patient_id -> split."""
        return DatasetManifest(tuple(
            replace(rec, split=assignment.get(rec.patient_id, rec.split))
            for rec in self.records
        ))


MANIFEST_COLUMNS = ("image_id", "patient_id", "group", "prob_path", "mask_path", "split")


def load_manifest(path) -> DatasetManifest:
    """Load a manifest CSV; a missing split column leaves records unassigned."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest", category="parse") from None
        header = tuple(h.strip() for h in header)
        if header not in (MANIFEST_COLUMNS, MANIFEST_COLUMNS[:5]):
            raise ManifestError(f"{path}: line 1: bad header {header}", category="parse")
        has_split = len(header) == 6
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ManifestError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}",
                    category="parse")
            image_id, patient_id, group_tok, prob_path, mask_path = (f.strip() for f in row[:5])
            split = row[5].strip() if has_split else ""
            if split == "":
                split = "unassigned"
            if split not in SPLITS:
                raise ManifestError(f"{path}: line {lineno}: unknown split token {split!r}",
                                    category="parse")
            try:
                group = GroupLabel.from_token(group_tok)
            except ManifestError as exc:
                raise ManifestError(f"{path}: line {lineno}: {exc}",
                                    category=exc.category) from None
            records.append(ImageRecord(image_id, patient_id, group, prob_path, mask_path, split))
    return DatasetManifest(tuple(records))


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for rec in manifest.records:
            writer.writerow([rec.image_id, rec.patient_id, rec.group.token,
                             rec.prob_path, rec.mask_path, rec.split])
