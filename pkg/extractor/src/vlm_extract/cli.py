"""`extract` command line: run a model over a task file and write a
linsep dataset directory. Exit codes: 0 success, 1 extraction/validation
error, 2 unreadable inputs."""

from __future__ import annotations

import argparse
import sys

from .errors import ExtractError, TaskFileError
from .prompts import CONCLUSION_MODES, PROMPT_STRATEGIES
from .runner import ExtractionConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extract", description=__doc__)
    parser.add_argument("--model", required=True, help='model identifier, or "toy"')
    parser.add_argument("--tasks", required=True, help="task JSON file")
    parser.add_argument("--prompts", choices=PROMPT_STRATEGIES, default="interleaved")
    parser.add_argument("--mode", choices=CONCLUSION_MODES, default="direct")
    parser.add_argument("--out", required=True, help="output dataset directory")
    parser.add_argument("--device", default=None)
    parser.add_argument("--batch-size", type=int, default=1)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = ExtractionConfig(
            model=args.model,
            tasks_path=args.tasks,
            out_dir=args.out,
            prompt_strategy=args.prompts,
            conclusion_mode=args.mode,
            device=args.device,
            batch_size=args.batch_size,
        )
        summary = extract(config)
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TaskFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(summary.manifest_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
