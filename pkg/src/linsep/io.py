"""Wire formats: the LSCE binary tensor container and the JSON manifest.

An LSCE file is a concatenation of records, each laid out as

    magic        4 bytes, b"LSCE"
    version      u32 little-endian, currently 1
    dim          u32 little-endian, >= 1
    token_count  u32 little-endian, >= 1
    id_length    u32 little-endian, >= 1
    image_id     id_length bytes, UTF-8
    payload      token_count * dim float32 little-endian, row-major

with no padding anywhere. A reader must consume the file exactly;
leftover bytes that do not form a complete record are an error. Parse
errors carry the byte offset of the field that could not be read.

The manifest is a JSON object:

    {
      "dataset_name": str,
      "dim": int | {stage: int},
      "stages": {stage: [lsce file, ...]},
      "samples": [{"sample_id", "positives", "negatives", "query",
                   "truth", "split_tag"?}, ...],
      "predictions": {method: prediction file},      # optional
      "nt_loss": nt-loss file                        # optional
    }

File references are relative to the manifest's directory. A prediction
file is {"method": str, "predictions": {sample_id: "positive" |
"negative" | "invalid"}} covering every sample; an nt-loss file maps
sample_id to a non-negative float for every sample.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingRecord, EmbeddingStore, STAGES
from .errors import (
    DimMismatch,
    DuplicateId,
    ManifestError,
    MissingFile,
    ParseError,
    ValidationError,
)
from .probe import BongardSample
from .stats import PredictionSet

MAGIC = b"LSCE"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_tensor_file(path, items: Iterable[tuple[str, np.ndarray]]) -> None:
    """Write (image_id, token matrix) pairs; float64 input is cast to the
    float32 wire type."""
    path = Path(path)
    with open(path, "wb") as fh:
        for image_id, tokens in items:
            tokens = np.asarray(tokens)
            if tokens.ndim != 2:
                raise ValidationError(f"token matrix for {image_id!r} must be 2-d")
            encoded = image_id.encode("utf-8")
            token_count, dim = tokens.shape
            fh.write(_HEADER.pack(MAGIC, VERSION, dim, token_count, len(encoded)))
            fh.write(encoded)
            fh.write(np.ascontiguousarray(tokens, dtype="<f4").tobytes())


def read_tensor_file(path) -> list[tuple[str, np.ndarray]]:
    """Parse every record of an LSCE file into (image_id, float64 tokens).

    Raises ParseError with the byte offset of the first unreadable field.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"tensor file not found: {path}")
    data = path.read_bytes()
    out: list[tuple[str, np.ndarray]] = []
    offset = 0
    total = len(data)
    while offset < total:
        if total - offset < _HEADER.size:
            raise ParseError(
                path, offset,
                f"incomplete record header (need {_HEADER.size} bytes, "
                f"have {total - offset})",
            )
        magic, version, dim, token_count, id_length = _HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise ParseError(path, offset, f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise ParseError(path, offset + 4, f"unsupported version {version}, expected {VERSION}")
        if dim < 1:
            raise ParseError(path, offset + 8, "dim must be >= 1")
        if token_count < 1:
            raise ParseError(path, offset + 12, "token_count must be >= 1")
        if id_length < 1:
            raise ParseError(path, offset + 16, "id_length must be >= 1")
        offset += _HEADER.size
        if total - offset < id_length:
            raise ParseError(
                path, offset,
                f"image_id truncated (need {id_length} bytes, have {total - offset})",
            )
        try:
            image_id = data[offset : offset + id_length].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(path, offset, f"image_id is not valid UTF-8: {exc}") from None
        offset += id_length
        payload_size = token_count * dim * 4
        if total - offset < payload_size:
            raise ParseError(
                path, offset,
                f"payload truncated (need {payload_size} bytes, have {total - offset})",
            )
        flat = np.frombuffer(data, dtype="<f4", count=token_count * dim, offset=offset)
        offset += payload_size
        out.append((image_id, flat.reshape(token_count, dim).astype(np.float64)))
    return out


@dataclass(frozen=True)
class Manifest:
    dataset_name: str
    dims: dict[str, int]  # per declared stage
    stage_files: dict[str, tuple[str, ...]]
    samples: tuple[BongardSample, ...]
    prediction_files: dict[str, str]
    nt_loss_file: str | None
    root: Path  # directory references are relative to

    def stages(self) -> tuple[str, ...]:
        return tuple(sorted(self.stage_files))


@dataclass(frozen=True)
class LoadedDataset:
    manifest: Manifest
    store: EmbeddingStore
    samples: tuple[BongardSample, ...]
    predictions: dict[str, PredictionSet]
    nt_loss: dict[str, float] | None


def _require(obj: Mapping, key: str, path):
    if key not in obj:
        raise ManifestError(f"{path}: manifest is missing {key!r}")
    return obj[key]


def read_json(path) -> object:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"file not found: {path}")
    try:
        return json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.pos, f"invalid JSON: {exc.msg}") from None


def load_manifest(path) -> Manifest:
    path = Path(path)
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    name = _require(raw, "dataset_name", path)
    stage_files_raw = _require(raw, "stages", path)
    if not isinstance(stage_files_raw, dict) or not stage_files_raw:
        raise ManifestError(f"{path}: 'stages' must be a non-empty object")
    for stage in stage_files_raw:
        if stage not in STAGES:
            raise ManifestError(f"{path}: unknown stage {stage!r}")
    stage_files = {s: tuple(files) for s, files in stage_files_raw.items()}

    dim_raw = _require(raw, "dim", path)
    if isinstance(dim_raw, int):
        dims = {stage: dim_raw for stage in stage_files}
    elif isinstance(dim_raw, dict):
        dims = {}
        for stage in stage_files:
            if stage not in dim_raw:
                raise ManifestError(f"{path}: 'dim' lacks an entry for stage {stage!r}")
            dims[stage] = int(dim_raw[stage])
    else:
        raise ManifestError(f"{path}: 'dim' must be an int or a per-stage object")
    if any(d < 1 for d in dims.values()):
        raise ManifestError(f"{path}: dims must be >= 1")

    samples = []
    seen_ids: set[str] = set()
    for entry in _require(raw, "samples", path):
        try:
            sample = BongardSample(
                sample_id=entry["sample_id"],
                positives=tuple(entry["positives"]),
                negatives=tuple(entry["negatives"]),
                query=entry["query"],
                truth=entry["truth"],
                split_tag=entry.get("split_tag"),
            )
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"{path}: malformed sample entry ({exc!r})") from None
        except ValidationError as exc:
            raise ManifestError(f"{path}: {exc}") from None
        if sample.sample_id in seen_ids:
            raise DuplicateId(f"{path}: duplicate sample_id {sample.sample_id!r}")
        seen_ids.add(sample.sample_id)
        samples.append(sample)
    if not samples:
        raise ManifestError(f"{path}: manifest declares no samples")

    predictions = raw.get("predictions") or {}
    if not isinstance(predictions, dict):
        raise ManifestError(f"{path}: 'predictions' must be an object")
    return Manifest(
        dataset_name=name,
        dims=dims,
        stage_files=stage_files,
        samples=tuple(samples),
        prediction_files={str(k): str(v) for k, v in predictions.items()},
        nt_loss_file=raw.get("nt_loss"),
        root=path.parent,
    )


def _load_stage(manifest: Manifest, stage: str, store: EmbeddingStore) -> None:
    expected_dim = manifest.dims[stage]
    for ref in manifest.stage_files[stage]:
        file_path = manifest.root / ref
        for image_id, tokens in read_tensor_file(file_path):
            if tokens.shape[1] != expected_dim:
                raise DimMismatch(
                    f"{file_path}: image {image_id!r} has dim {tokens.shape[1]} "
                    f"but the manifest declares dim {expected_dim} for stage {stage!r}"
                )
            store.add(EmbeddingRecord(image_id, stage, tokens))


def _load_predictions(manifest: Manifest, method: str, ref: str) -> PredictionSet:
    file_path = manifest.root / ref
    raw = read_json(file_path)
    if not isinstance(raw, dict) or not isinstance(raw.get("predictions"), dict):
        raise ManifestError(f"{file_path}: prediction file must hold a 'predictions' object")
    try:
        preds = PredictionSet(method, raw["predictions"])
    except ValidationError as exc:
        raise ManifestError(f"{file_path}: {exc}") from None
    sample_ids = {s.sample_id for s in manifest.samples}
    if preds.sample_ids() != sample_ids:
        missing = sorted(sample_ids - preds.sample_ids())[:3]
        extra = sorted(preds.sample_ids() - sample_ids)[:3]
        raise ManifestError(
            f"{file_path}: predictions do not cover the manifest samples "
            f"(missing {missing}, unknown {extra})"
        )
    return preds


def _load_nt_loss(manifest: Manifest) -> dict[str, float] | None:
    if manifest.nt_loss_file is None:
        return None
    file_path = manifest.root / manifest.nt_loss_file
    raw = read_json(file_path)
    if not isinstance(raw, dict):
        raise ManifestError(f"{file_path}: nt-loss file must be an object")
    sample_ids = {s.sample_id for s in manifest.samples}
    if set(raw) != sample_ids:
        raise ManifestError(f"{file_path}: nt-loss entries do not cover the manifest samples")
    out = {}
    for sample_id, value in raw.items():
        value = float(value)
        if not value >= 0.0:
            raise ManifestError(f"{file_path}: nt loss for {sample_id!r} must be >= 0")
        out[sample_id] = value
    return out


def load_dataset(manifest_path) -> LoadedDataset:
    """Load and fully validate a dataset; every sample reference must
    resolve in every declared stage."""
    manifest = load_manifest(manifest_path)
    store = EmbeddingStore()
    for stage in manifest.stages():
        _load_stage(manifest, stage, store)
    for sample in manifest.samples:
        for stage in manifest.stages():
            for image_id in (*sample.positives, *sample.negatives, sample.query):
                store.get(image_id, stage)  # raises MissingEmbedding
    predictions = {
        method: _load_predictions(manifest, method, ref)
        for method, ref in sorted(manifest.prediction_files.items())
    }
    return LoadedDataset(
        manifest=manifest,
        store=store,
        samples=manifest.samples,
        predictions=predictions,
        nt_loss=_load_nt_loss(manifest),
    )


def dump_json(obj) -> str:
    """Canonical JSON used for manifests and reports: sorted keys, two
    space indent, trailing newline; byte-stable for identical content."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dump_json(obj), "utf-8")


def write_dataset(
    out_dir,
    dataset_name: str,
    store: EmbeddingStore,
    samples: Sequence[BongardSample],
    predictions: Sequence[PredictionSet] = (),
    nt_loss: Mapping[str, float] | None = None,
) -> Path:
    """Write a dataset directory (one LSCE file per stage, prediction
    files, manifest.json); returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stages = store.stages()
    if not stages:
        raise ValidationError("store holds no embeddings")

    stage_files: dict[str, tuple[str, ...]] = {}
    dims: dict[str, int] = {}
    for stage in stages:
        file_name = f"{stage}.lsce"
        items = [(i, store.get(i, stage).tokens) for i in store.image_ids(stage)]
        write_tensor_file(out_dir / file_name, items)
        stage_files[stage] = (file_name,)
        dims[stage] = store.dim(stage)

    prediction_files = {}
    for pred_set in predictions:
        file_name = f"preds_{pred_set.label}.json"
        write_json(
            {"method": pred_set.label, "predictions": dict(sorted(pred_set.predictions.items()))},
            out_dir / file_name,
        )
        prediction_files[pred_set.label] = file_name

    manifest: dict = {
        "dataset_name": dataset_name,
        "dim": dims if len(set(dims.values())) > 1 else next(iter(dims.values())),
        "stages": stage_files,
        "samples": [
            {
                "sample_id": s.sample_id,
                "positives": list(s.positives),
                "negatives": list(s.negatives),
                "query": s.query,
                "truth": s.truth,
                "split_tag": s.split_tag,
            }
            for s in sorted(samples, key=lambda s: s.sample_id)
        ],
    }
    if prediction_files:
        manifest["predictions"] = prediction_files
    if nt_loss is not None:
        write_json(dict(sorted(nt_loss.items())), out_dir / "nt_loss.json")
        manifest["nt_loss"] = "nt_loss.json"

    manifest_path = out_dir / "manifest.json"
    write_json(manifest, manifest_path)
    return manifest_path
