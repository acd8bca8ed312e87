"""The extraction pipeline: tasks in, linsep dataset directory out.

Each sample slot gets its own record id (``<sample_id>-<slot>``) in both
stages, because final-stage embeddings are contextualized by the sample
they appear in; sharing an image file across samples is fine, sharing a
record is not.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backends import VlmBackend, make_backend
from .conclusions import parse_conclusion
from .errors import ExtractError, TaskFileError
from .lsce import write_lsce
from .prompts import CONCLUSION_MODES, PROMPT_STRATEGIES, build_prompt


@dataclass(frozen=True)
class Task:
    sample_id: str
    positives: tuple[Path, ...]
    negatives: tuple[Path, ...]
    query: Path
    truth: str
    split_tag: str | None = None


@dataclass(frozen=True)
class ExtractionConfig:
    model: str
    tasks_path: str
    out_dir: str
    prompt_strategy: str = "interleaved"
    conclusion_mode: str = "direct"
    device: str | None = None
    batch_size: int = 1

    def __post_init__(self):
        if self.prompt_strategy not in PROMPT_STRATEGIES:
            raise ExtractError(
                f"unknown prompt strategy {self.prompt_strategy!r}; choose from {PROMPT_STRATEGIES}"
            )
        if self.conclusion_mode not in CONCLUSION_MODES:
            raise ExtractError(f"unknown conclusion mode {self.conclusion_mode!r}")


@dataclass(frozen=True)
class ExtractionSummary:
    manifest_path: Path
    num_samples: int
    num_images: int
    invalid_count: int
    method: str


def load_tasks(path) -> tuple[str, list[Task]]:
    path = Path(path)
    if not path.is_file():
        raise TaskFileError(f"task file not found: {path}")
    try:
        raw = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise TaskFileError(f"{path}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict) or not isinstance(raw.get("samples"), list) or not raw["samples"]:
        raise TaskFileError(f"{path}: expected an object with a non-empty 'samples' list")
    root = path.parent
    tasks = []
    seen = set()
    for entry in raw["samples"]:
        try:
            task = Task(
                sample_id=entry["sample_id"],
                positives=tuple(root / p for p in entry["positives"]),
                negatives=tuple(root / p for p in entry["negatives"]),
                query=root / entry["query"],
                truth=entry["truth"],
                split_tag=entry.get("split_tag"),
            )
        except (KeyError, TypeError) as exc:
            raise TaskFileError(f"{path}: malformed sample entry ({exc!r})") from None
        if task.truth not in ("positive", "negative"):
            raise TaskFileError(f"{path}: sample {task.sample_id!r} has truth {task.truth!r}")
        if len(task.positives) != len(task.negatives) or not task.positives:
            raise TaskFileError(f"{path}: sample {task.sample_id!r} has unbalanced example sets")
        if task.sample_id in seen:
            raise TaskFileError(f"{path}: duplicate sample_id {task.sample_id!r}")
        seen.add(task.sample_id)
        for image in (*task.positives, *task.negatives, task.query):
            if not Path(image).is_file():
                raise TaskFileError(f"{path}: image not resolvable: {image}")
        tasks.append(task)
    name = raw.get("dataset_name", path.stem)
    return name, tasks


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", "utf-8")


def _slot_paths(task: Task) -> dict[str, Path]:
    slots = {f"p{j}": p for j, p in enumerate(task.positives)}
    slots.update({f"n{j}": p for j, p in enumerate(task.negatives)})
    slots["q"] = task.query
    return slots


def extract(config: ExtractionConfig, backend: VlmBackend | None = None) -> ExtractionSummary:
    """Run the model over every task and write the dataset directory."""
    dataset_name, tasks = load_tasks(config.tasks_path)
    if backend is None:
        backend = make_backend(config.model, device=config.device, batch_size=config.batch_size)

    k = len(tasks[0].positives)
    if any(len(t.positives) != k for t in tasks):
        raise TaskFileError("all samples must use the same number of examples per side")
    plan = build_prompt(config.prompt_strategy, k, config.conclusion_mode)

    vision_records: list[tuple[str, np.ndarray]] = []
    final_records: list[tuple[str, np.ndarray]] = []
    predictions: dict[str, str] = {}
    manifest_samples = []
    invalid = 0

    for task in sorted(tasks, key=lambda t: t.sample_id):
        slot_paths = _slot_paths(task)
        embedded, answer = backend.run_sample(plan, slot_paths, task.sample_id)
        missing = set(plan.slot_order) - set(embedded)
        if missing:
            raise ExtractError(f"backend returned no embeddings for slots {sorted(missing)}")
        for slot in plan.slot_order:
            image = embedded[slot]
            if len(image.final_positions) != image.final_tokens.shape[0]:
                raise ExtractError(
                    f"sample {task.sample_id!r} slot {slot!r}: {image.final_tokens.shape[0]} "
                    f"final rows but {len(image.final_positions)} image-token positions"
                )
            record_id = f"{task.sample_id}-{slot}"
            vision_records.append((record_id, image.vision_tokens))
            final_records.append((record_id, image.final_tokens))
        prediction = parse_conclusion(answer)
        if prediction == "invalid":
            invalid += 1
        predictions[task.sample_id] = prediction
        manifest_samples.append(
            {
                "sample_id": task.sample_id,
                "positives": [f"{task.sample_id}-p{j}" for j in range(k)],
                "negatives": [f"{task.sample_id}-n{j}" for j in range(k)],
                "query": f"{task.sample_id}-q",
                "truth": task.truth,
                "split_tag": task.split_tag,
            }
        )

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vision_records.sort(key=lambda item: item[0])
    final_records.sort(key=lambda item: item[0])
    write_lsce(out_dir / "vision.lsce", vision_records)
    write_lsce(out_dir / "final.lsce", final_records)

    method = config.conclusion_mode
    preds_file = f"preds_{method}.json"
    _dump_json({"method": method, "predictions": dict(sorted(predictions.items()))},
               out_dir / preds_file)

    vision_dim = int(vision_records[0][1].shape[1])
    final_dim = int(final_records[0][1].shape[1])
    dim = vision_dim if vision_dim == final_dim else {"vision": vision_dim, "final": final_dim}
    manifest = {
        "dataset_name": dataset_name,
        "dim": dim,
        "stages": {"vision": ["vision.lsce"], "final": ["final.lsce"]},
        "samples": manifest_samples,
        "predictions": {method: preds_file},
        "extraction": {
            "model": config.model,
            "prompt_strategy": config.prompt_strategy,
            "conclusion_mode": config.conclusion_mode,
        },
    }
    manifest_path = out_dir / "manifest.json"
    _dump_json(manifest, manifest_path)

    print(
        f"extracted {len(tasks)} samples x {len(plan.slot_order)} images per stage; "
        f"{invalid} invalid conclusion(s)",
        file=sys.stderr,
    )
    return ExtractionSummary(
        manifest_path=manifest_path,
        num_samples=len(tasks),
        num_images=len(vision_records),
        invalid_count=invalid,
        method=method,
    )
