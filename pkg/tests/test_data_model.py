import struct

import numpy as np
import pytest

from fitzcal.data_model import (BinaryMask, GroupLabel, ProbMap, load_manifest,
                                load_mask, load_probmap, quantize_probs,
                                save_manifest, save_mask, save_probmap,
                                write_fpm1, DatasetManifest, ImageRecord)
from fitzcal.errors import FormatError, ManifestError


def write_fbm1_raw(path, width, height, payload):
    with open(path, "wb") as fh:
        fh.write(b"FBM1")
        fh.write(struct.pack("<II", width, height))
        fh.write(bytes(payload))


class TestQuantization:
    def test_half_milli_unit(self):
        assert quantize_probs(np.array([0.5]))[0] == 500

    def test_round_half_up_and_clamp(self):
        # hand-evaluated: round(0.0005*1000)=1, round(0.9996*1000)=1000
        q = quantize_probs(np.array([0.0005, 0.9996]))
        assert q.tolist() == [1, 1000]

    def test_idempotent(self):
        q = np.arange(0, 1001, dtype=np.uint16)
        again = quantize_probs(q.astype(np.float64) / 1000.0)
        assert np.array_equal(q, again)

    def test_rejects_nan(self):
        with pytest.raises(FormatError):
            quantize_probs(np.array([0.2, float("nan")]))

    def test_rejects_out_of_range(self):
        with pytest.raises(FormatError):
            quantize_probs(np.array([1.5]))
        # within tolerance 1e-6 is accepted and clamped
        assert quantize_probs(np.array([1.0000005]))[0] == 1000


class TestProbMapIO:
    def test_single_pixel(self, tmp_path):
        path = tmp_path / "p.fpm"
        write_fpm1(path, 1, 1, np.array([0.5]))
        pm = load_probmap(path)
        assert (pm.width, pm.height) == (1, 1)
        assert pm.probs.tolist() == [500]

    def test_round_trip(self, tmp_path, rng):
        probs = rng.integers(0, 1001, size=64).astype(np.uint16)
        pm = ProbMap(8, 8, probs)
        save_probmap(pm, tmp_path / "p.fpm")
        assert np.array_equal(load_probmap(tmp_path / "p.fpm").probs, probs)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.fpm").write_bytes(b"XXXX" + b"\0" * 16)
        with pytest.raises(FormatError, match="magic"):
            load_probmap(tmp_path / "x.fpm")

    def test_truncated(self, tmp_path):
        path = tmp_path / "t.fpm"
        write_fpm1(path, 2, 2, np.array([0.1, 0.2, 0.3, 0.4]))
        data = path.read_bytes()
        path.write_bytes(data[:-3])
        with pytest.raises(FormatError):
            load_probmap(path)

    def test_rejects_nan_payload(self, tmp_path):
        path = tmp_path / "n.fpm"
        with open(path, "wb") as fh:
            fh.write(b"FPM1" + struct.pack("<II", 1, 1))
            fh.write(np.array([np.nan], dtype="<f4").tobytes())
        with pytest.raises(FormatError):
            load_probmap(path)


class TestMaskIO:
    def test_fbm1_identity(self, tmp_path):
        write_fbm1_raw(tmp_path / "m.fbm", 2, 2, [0, 1, 1, 0])
        mask = load_mask(tmp_path / "m.fbm")
        assert mask.labels.tolist() == [0, 1, 1, 0]

    def test_fbm1_invalid_label(self, tmp_path):
        write_fbm1_raw(tmp_path / "m.fbm", 2, 1, [0, 2])
        with pytest.raises(FormatError, match="not in"):
            load_mask(tmp_path / "m.fbm")

    def test_round_trip(self, tmp_path, rng):
        labels = rng.integers(0, 2, size=35).astype(np.uint8)
        save_mask(BinaryMask(7, 5, labels), tmp_path / "m.fbm")
        assert np.array_equal(load_mask(tmp_path / "m.fbm").labels, labels)

    def test_pgm_binary_threshold(self, tmp_path):
        # >127 means foreground
        (tmp_path / "m.pgm").write_bytes(b"P5\n2 1\n255\n" + bytes([200, 10]))
        mask = load_mask(tmp_path / "m.pgm")
        assert mask.labels.tolist() == [1, 0]

    def test_pgm_ascii_with_comment(self, tmp_path):
        (tmp_path / "m.pgm").write_bytes(b"P2\n# comment\n2 2\n255\n128 127 0 255\n")
        assert load_mask(tmp_path / "m.pgm").labels.tolist() == [1, 0, 0, 1]

    def test_bad_magic(self, tmp_path):
        (tmp_path / "m.fbm").write_bytes(b"ZZZZ" + b"\0" * 12)
        with pytest.raises(FormatError, match="magic"):
            load_mask(tmp_path / "m.fbm")


def manifest_text(rows, header="image_id,patient_id,group,prob_path,mask_path,split"):
    return header + "\n" + "\n".join(rows) + "\n"


class TestManifest:
    def test_minimal(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(manifest_text([
            "img1,pA,VI,a.fpm,a.fbm,",
            "img2,pA,VI,b.fpm,b.fbm,",
        ]))
        manifest = load_manifest(path)
        assert len(manifest.records) == 2
        assert {r.patient_id for r in manifest.records} == {"pA"}
        assert all(r.split == "unassigned" for r in manifest.records)

    def test_group_histogram_matches_published_counts(self, tmp_path):
        counts = {"I": 85, "II": 350, "III": 145, "IV": 96, "V": 62, "VI": 16}
        rows = []
        i = 0
        for token, n in counts.items():
            for _ in range(n):
                rows.append(f"img{i},p{i},{token},x.fpm,x.fbm,")
                i += 1
        path = tmp_path / "m.csv"
        path.write_text(manifest_text(rows))
        manifest = load_manifest(path)
        hist = manifest.group_counts()
        assert {g.token: n for g, n in hist.items()} == counts
        assert sum(hist.values()) == 754

    def test_duplicate_image_id(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(manifest_text([
            "img1,pA,I,a.fpm,a.fbm,",
            "img1,pB,II,b.fpm,b.fbm,",
        ]))
        with pytest.raises(ManifestError, match="img1"):
            load_manifest(path)

    def test_unknown_group_token_has_line_number(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(manifest_text(["img1,pA,VII,a.fpm,a.fbm,"]))
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_missing_split_column(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("image_id,patient_id,group,prob_path,mask_path\n"
                        "img1,pA,III,a.fpm,a.fbm\n")
        manifest = load_manifest(path)
        assert manifest.records[0].split == "unassigned"

    def test_bad_split_token(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(manifest_text(["img1,pA,I,a.fpm,a.fbm,validation"]))
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_save_round_trip(self, tmp_path):
        manifest = DatasetManifest((
            ImageRecord("img1", "pA", GroupLabel.VI, "a.fpm", "a.fbm", "train"),
            ImageRecord("img2", "pB", GroupLabel.I, "b.fpm", "b.fbm", "test"),
        ))
        save_manifest(manifest, tmp_path / "m.csv")
        assert load_manifest(tmp_path / "m.csv") == manifest


def test_group_label_order():
    order = list(GroupLabel)
    assert [g.token for g in order] == ["I", "II", "III", "IV", "V", "VI"]
    assert GroupLabel.I < GroupLabel.VI
