"""Command-line entry point.

Verbs: run | validate | sweep | inspect. Exit codes: 0 ok, 2 config error,
3 backend error, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import DEFAULT_CONFIG, _merge, load_config, resolve_defaults, validate_config
from .errors import GraftkitError
from .util import read_jsonl


def _parse_overrides(pairs: list[str]) -> dict:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    return overrides


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to the JSON run config")
    sub.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field by dotted path (value parsed as JSON when possible)",
    )
    sub.add_argument("--output-dir", default=None, help="override output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graftkit",
        description="Mine masked templates from a raw corpus and fill them with an LLM",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="execute one configured run")
    _add_common(run_cmd)

    validate_cmd = commands.add_parser("validate", help="check a config and exit")
    _add_common(validate_cmd)

    sweep_cmd = commands.add_parser("sweep", help="grid runs over the sweep axes")
    _add_common(sweep_cmd)

    inspect_cmd = commands.add_parser("inspect", help="summarize an artifact file")
    inspect_cmd.add_argument("artifact", help="path to a run artifact")
    return parser


def _load(args: argparse.Namespace):
    overrides = _parse_overrides(args.overrides)
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    return load_config(args.config, overrides)


def _cmd_run(args: argparse.Namespace) -> int:
    report = pipeline.run(_load(args))
    for stage in report.stages:
        print(f"{stage.name:<12} {stage.status}")
    print(f"artifacts: {report.output_dir}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    overrides = _parse_overrides(args.overrides)
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    path = Path(args.config)
    if not path.is_file():
        print(f"config file not found: {path}", file=sys.stderr)
        return 2
    try:
        user = json.loads(path.read_text(encoding="utf-8"))
        merged = _merge(DEFAULT_CONFIG, user)
        for dotted, value in overrides.items():
            node = merged
            parts = dotted.split(".")
            for part in parts[:-1]:
                node = node[part]
            node[parts[-1]] = value
        errors = validate_config(resolve_defaults(merged))
    except (GraftkitError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    print("ok")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    reports = pipeline.sweep(_load(args))
    for report in reports:
        print(f"{report.output_dir}: {report.manifest['counts'].get('dataset', {})}")
    print(f"{len(reports)} runs completed")
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    path = Path(args.artifact)
    if not path.is_file():
        print(f"artifact not found: {path}", file=sys.stderr)
        return 4
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        print(json.dumps(payload, indent=2, sort_keys=True)[:4000])
        return 0
    rows = read_jsonl(path)
    print(f"{path}: {len(rows)} rows")
    if not rows:
        return 0
    sample = rows[0]
    print(f"fields: {', '.join(sorted(sample))}")
    if "potential" in sample:
        values = [r["potential"] for r in rows]
        print(f"potential: min {min(values):.6g} max {max(values):.6g}")
    if "score" in sample:
        values = [r["score"] for r in rows]
        print(f"score: min {min(values):.6g} max {max(values):.6g}")
    if "attempts" in sample:
        total = sum(r["attempts"] for r in rows)
        print(f"attempts: total {total}, mean {total / len(rows):.2f}")
    if "label" in sample:
        labels: dict[str, int] = {}
        for r in rows:
            labels[r["label"]] = labels.get(r["label"], 0) + 1
        print(f"labels: {labels}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handlers = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "sweep": _cmd_sweep,
        "inspect": _cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except GraftkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
