import json
import struct

import numpy as np
import pytest

from linsep import io
from linsep.embeddings import EmbeddingRecord, EmbeddingStore
from linsep.errors import (
    DimMismatch,
    DuplicateId,
    ManifestError,
    MissingEmbedding,
    MissingFile,
    ParseError,
)
from linsep.probe import BongardSample
from linsep.stats import PredictionSet
from linsep.synth import SynthConfig, generate

HEADER = 20  # magic + 4 u32 fields


def small_items():
    return [
        ("img", np.arange(6, dtype=float).reshape(2, 3)),
        ("other", np.ones((1, 3)) * 0.25),
    ]


class TestTensorRoundTrip:
    def test_bit_exact_float32(self, tmp_path):
        path = tmp_path / "t.lsce"
        rng = np.random.default_rng(0)
        items = [("a", rng.normal(size=(4, 8))), ("b", rng.normal(size=(2, 8)))]
        io.write_tensor_file(path, items)
        loaded = dict(io.read_tensor_file(path))
        for image_id, tokens in items:
            expected = tokens.astype(np.float32).astype(np.float64)
            assert np.array_equal(loaded[image_id], expected)

    def test_empty_file_is_empty_list(self, tmp_path):
        path = tmp_path / "empty.lsce"
        path.write_bytes(b"")
        assert io.read_tensor_file(path) == []

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            io.read_tensor_file(tmp_path / "nope.lsce")

    def test_unicode_ids(self, tmp_path):
        path = tmp_path / "u.lsce"
        io.write_tensor_file(path, [("bild-éé", np.ones((1, 2)))])
        (loaded_id, _), = io.read_tensor_file(path)
        assert loaded_id == "bild-éé"


def _valid_bytes(tmp_path):
    path = tmp_path / "v.lsce"
    io.write_tensor_file(path, [("img", np.arange(6, dtype=float).reshape(2, 3))])
    return path, bytearray(path.read_bytes())


class TestParseErrors:
    """Each corruption must fail with ParseError at the exact byte offset."""

    def _expect(self, tmp_path, data, offset, fragment):
        path = tmp_path / "corrupt.lsce"
        path.write_bytes(bytes(data))
        with pytest.raises(ParseError) as excinfo:
            io.read_tensor_file(path)
        assert excinfo.value.offset == offset
        assert fragment in excinfo.value.reason

    def test_bad_magic(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        data[0] = ord("X")
        self._expect(tmp_path, data, 0, "bad magic")

    def test_unsupported_version(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        struct.pack_into("<I", data, 4, 99)
        self._expect(tmp_path, data, 4, "unsupported version")

    def test_zero_dim(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        struct.pack_into("<I", data, 8, 0)
        self._expect(tmp_path, data, 8, "dim")

    def test_zero_token_count(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        struct.pack_into("<I", data, 12, 0)
        self._expect(tmp_path, data, 12, "token_count")

    def test_zero_id_length(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        struct.pack_into("<I", data, 16, 0)
        self._expect(tmp_path, data, 16, "id_length")

    def test_truncated_header(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        self._expect(tmp_path, data[:10], 0, "incomplete record header")

    def test_truncated_image_id(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        self._expect(tmp_path, data[: HEADER + 2], HEADER, "image_id truncated")

    def test_non_utf8_image_id(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        data[HEADER : HEADER + 3] = b"\xff\xfe\xff"
        self._expect(tmp_path, data, HEADER, "not valid UTF-8")

    def test_payload_one_float_short(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        payload_start = HEADER + 3  # id "img"
        self._expect(tmp_path, data[:-4], payload_start, "payload truncated")
        # exactness of the reported offset and byte accounting
        path = tmp_path / "corrupt.lsce"
        path.write_bytes(bytes(data[:-4]))
        with pytest.raises(ParseError) as excinfo:
            io.read_tensor_file(path)
        assert excinfo.value.offset == payload_start
        assert "need 24 bytes, have 20" in excinfo.value.reason

    def test_trailing_garbage_short(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        self._expect(tmp_path, data + b"JUNK", len(data), "incomplete record header")

    def test_trailing_garbage_long(self, tmp_path):
        _, data = _valid_bytes(tmp_path)
        self._expect(tmp_path, data + b"\x00" * HEADER, len(data), "bad magic")


def write_small_dataset(tmp_path, **overrides):
    """Two-sample dataset with both stages, returning the manifest path."""
    store = EmbeddingStore()
    for stage in ("vision", "final"):
        for i in range(2):
            for suffix, base in (("p0", 1.0), ("n0", -1.0), ("q", 0.8)):
                image_id = f"s{i}-{suffix}"
                tokens = np.full((2, 3), base * (i + 1), dtype=float)
                tokens[0, 0] += 0.5
                store.add(EmbeddingRecord(image_id, stage, tokens))
    samples = [
        BongardSample(f"s{i}", (f"s{i}-p0",), (f"s{i}-n0",), f"s{i}-q",
                      "positive" if i == 0 else "negative")
        for i in range(2)
    ]
    preds = PredictionSet("gen", {"s0": "positive", "s1": "invalid"})
    nt = {"s0": 1.5, "s1": 0.25}
    kwargs = dict(predictions=[preds], nt_loss=nt)
    kwargs.update(overrides)
    return io.write_dataset(tmp_path / "ds", "tiny", store, samples, **kwargs)


class TestDatasetRoundTrip:
    def test_minimal_fixture_loads_and_probes(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        loaded = io.load_dataset(manifest_path)
        assert loaded.manifest.dataset_name == "tiny"
        assert len(loaded.samples) == 2
        assert loaded.predictions["gen"].invalid_count() == 1
        assert loaded.nt_loss == {"s0": 1.5, "s1": 0.25}
        from linsep.probe import probe_accuracy

        est = probe_accuracy(loaded.store, loaded.samples)
        assert 0.0 <= est.p_hat <= 1.0

    def test_synth_round_trip_bit_exact(self, tmp_path):
        dataset = generate(SynthConfig(seed=21, dim=6, num_samples=8, separation=1.0))
        manifest_path = io.write_dataset(
            tmp_path / "s", "synth-21", dataset.store, dataset.samples,
            predictions=[dataset.gen_predictions],
        )
        loaded = io.load_dataset(manifest_path)
        for stage in ("vision", "final"):
            for image_id in dataset.store.image_ids(stage):
                assert np.array_equal(
                    loaded.store.get(image_id, stage).tokens,
                    dataset.store.get(image_id, stage).tokens,
                )
        assert loaded.samples == dataset.samples
        assert loaded.predictions["gen"].predictions == dataset.gen_predictions.predictions

    def test_write_is_deterministic(self, tmp_path):
        dataset = generate(SynthConfig(seed=22, dim=4, num_samples=5))
        p1 = io.write_dataset(tmp_path / "a", "x", dataset.store, dataset.samples)
        p2 = io.write_dataset(tmp_path / "b", "x", dataset.store, dataset.samples)
        assert p1.read_bytes() == p2.read_bytes()
        assert (tmp_path / "a/vision.lsce").read_bytes() == (tmp_path / "b/vision.lsce").read_bytes()


def _patch_manifest(manifest_path, mutate):
    raw = json.loads(manifest_path.read_text())
    mutate(raw)
    manifest_path.write_text(io.dump_json(raw))


class TestLoadValidation:
    def test_missing_tensor_file(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        (manifest_path.parent / "vision.lsce").unlink()
        with pytest.raises(MissingFile):
            io.load_dataset(manifest_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingFile):
            io.load_dataset(tmp_path / "nope.json")

    def test_invalid_manifest_json(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        manifest_path.write_text("{not json")
        with pytest.raises(ParseError):
            io.load_dataset(manifest_path)

    def test_dim_mismatch_names_both(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        _patch_manifest(manifest_path, lambda raw: raw.__setitem__("dim", 512))
        with pytest.raises(DimMismatch) as excinfo:
            io.load_dataset(manifest_path)
        assert "512" in str(excinfo.value) and "3" in str(excinfo.value)

    def test_per_stage_dim_map(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        _patch_manifest(
            manifest_path, lambda raw: raw.__setitem__("dim", {"vision": 3, "final": 3})
        )
        io.load_dataset(manifest_path)

    def test_duplicate_sample_id(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)

        def mutate(raw):
            raw["samples"].append(dict(raw["samples"][0]))

        _patch_manifest(manifest_path, mutate)
        with pytest.raises(DuplicateId):
            io.load_dataset(manifest_path)

    def test_duplicate_image_id_in_file(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        ds = manifest_path.parent
        items = io.read_tensor_file(ds / "vision.lsce")
        io.write_tensor_file(ds / "vision.lsce", items + [items[0]])
        with pytest.raises(DuplicateId):
            io.load_dataset(manifest_path)

    def test_unresolved_sample_reference(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)

        def mutate(raw):
            raw["samples"][0]["query"] = "ghost"

        _patch_manifest(manifest_path, mutate)
        with pytest.raises(MissingEmbedding):
            io.load_dataset(manifest_path)

    def test_bad_truth_label(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)

        def mutate(raw):
            raw["samples"][0]["truth"] = "both"

        _patch_manifest(manifest_path, mutate)
        with pytest.raises(ManifestError):
            io.load_dataset(manifest_path)

    def test_prediction_coverage(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        preds_path = manifest_path.parent / "preds_gen.json"
        raw = json.loads(preds_path.read_text())
        del raw["predictions"]["s0"]
        preds_path.write_text(io.dump_json(raw))
        with pytest.raises(ManifestError):
            io.load_dataset(manifest_path)

    def test_prediction_bad_value(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        preds_path = manifest_path.parent / "preds_gen.json"
        raw = json.loads(preds_path.read_text())
        raw["predictions"]["s0"] = "yes"
        preds_path.write_text(io.dump_json(raw))
        with pytest.raises(ManifestError):
            io.load_dataset(manifest_path)

    def test_negative_nt_loss(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        nt_path = manifest_path.parent / "nt_loss.json"
        nt_path.write_text(io.dump_json({"s0": -1.0, "s1": 0.5}))
        with pytest.raises(ManifestError):
            io.load_dataset(manifest_path)

    def test_unknown_stage(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)

        def mutate(raw):
            raw["stages"]["middle"] = raw["stages"]["vision"]

        _patch_manifest(manifest_path, mutate)
        with pytest.raises(ManifestError):
            io.load_dataset(manifest_path)

    def test_no_samples(self, tmp_path):
        manifest_path = write_small_dataset(tmp_path)
        _patch_manifest(manifest_path, lambda raw: raw.__setitem__("samples", []))
        with pytest.raises(ManifestError):
            io.load_dataset(manifest_path)
