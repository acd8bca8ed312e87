"""Command-line surface.

Exit codes: 0 success, 1 validation error, 2 I/O or parse error.
Diagnostics go to stderr; requested artifacts to files or stdout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .analysis import decompose
from .errors import DatasetError, InvalidConfig, ValidationError
from .objective import ScheduleConfig, gradcheck, schedule_curve
from .probe import classify_all, score_predictions
from .reports import decompose_report_dict, probe_report_dict, render
from .synth import SynthConfig, generate


class _Parser(argparse.ArgumentParser):
    # Argument problems are validation errors: exit 1, not argparse's 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _cmd_probe(args) -> int:
    dataset = io.load_dataset(args.manifest)
    results = classify_all(dataset.store, dataset.samples, args.stage, args.context, args.pooling)
    estimate, _ = score_predictions(
        dataset.samples,
        {r.sample_id: r.predicted for r in results},
        f"probe[{args.stage},{args.context},{args.pooling}]",
    )
    report = probe_report_dict(
        dataset.manifest.dataset_name,
        args.stage,
        args.context,
        args.pooling,
        estimate,
        results,
        dataset.samples,
    )
    io.write_json(report, args.out)
    print(args.out)
    return 0


def _cmd_decompose(args) -> int:
    dataset = io.load_dataset(args.manifest)
    names = args.gen_preds or sorted(dataset.predictions)
    if not names:
        raise ValidationError("manifest declares no prediction sets")
    missing = [n for n in names if n not in dataset.predictions]
    if missing:
        raise ValidationError(
            f"unknown prediction set(s) {missing}; manifest has {sorted(dataset.predictions)}"
        )
    report = decompose(
        dataset.store,
        dataset.samples,
        [dataset.predictions[n] for n in names],
        dataset.manifest.dataset_name,
    )
    io.write_json(decompose_report_dict(report), args.out)
    print(args.out)
    return 0


def _cmd_report(args) -> int:
    raw = io.read_json(args.report_path)
    if not isinstance(raw, dict):
        raise ValidationError("report file must hold a JSON object")
    sys.stdout.write(render(raw, args.format))
    return 0


def _cmd_synth(args) -> int:
    raw = io.read_json(args.config)
    if not isinstance(raw, dict):
        raise InvalidConfig("synth config must be a JSON object")
    known = set(SynthConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise InvalidConfig(f"unknown synth config keys {unknown}; known: {sorted(known)}")
    try:
        config = SynthConfig(**raw)
    except TypeError as exc:
        raise InvalidConfig(f"bad synth config: {exc}") from None
    dataset = generate(config)
    manifest_path = io.write_dataset(
        args.out,
        f"synth-{config.seed}",
        dataset.store,
        dataset.samples,
        predictions=[dataset.gen_predictions],
    )
    print(manifest_path)
    return 0


def _cmd_gradcheck(args) -> int:
    result = gradcheck(trials=args.trials, seed=args.seed)
    print(
        f"gradcheck: trials={result.trials} max_rel_error={result.max_rel_error:.3e} "
        f"threshold={result.threshold:.1e} failures={result.failures}"
    )
    if not result.passed:
        print("gradcheck failed", file=sys.stderr)
        return 1
    return 0


def _cmd_schedule(args) -> int:
    config = ScheduleConfig(kind=args.kind, target_value=args.C, total_steps=args.steps)
    lines = ["step,p,nt_weight,sim_weight"]
    for step, p, nt_w, sim_w in schedule_curve(config):
        lines.append(f"{step},{p},{nt_w},{sim_w}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, "utf-8")
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linsep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("probe", help="run one probe configuration over a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--stage", choices=("vision", "final"), default="vision")
    p.add_argument("--context", choices=("batched", "single"), default="batched")
    p.add_argument("--pooling", choices=("mean", "max"), default="mean")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("decompose", help="ceiling/final/taxonomy/dependence per generative method")
    p.add_argument("--manifest", required=True)
    p.add_argument("--gen-preds", action="append", metavar="NAME")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("report", help="render a report as md, csv, or scatter pairs")
    p.add_argument("--in", dest="report_path", required=True)
    p.add_argument("--format", choices=("md", "csv", "scatter"), required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic dataset directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("gradcheck", help="finite-difference check of the loss gradients")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("schedule", help="emit a loss-weight schedule as CSV")
    p.add_argument("--kind", choices=("constant", "linear", "cosine"), required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_schedule)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
