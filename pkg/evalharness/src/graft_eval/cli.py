"""graft-eval command line: evaluate one bundle, or compare two.

    graft-eval run --bundle runs/graft/dataset --test gold.jsonl --out report.json
    graft-eval compare --bundle-a runs/graft/dataset --bundle-b runs/icg/dataset \
        --test gold.jsonl
"""

from __future__ import annotations

import argparse
import logging
import sys

from .data import SchemaError
from .metrics import EvalReport
from .train import TrainConfig, finetune_and_eval


def _add_train_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--test", required=True, help="gold test JSONL with {text,label}")
    sub.add_argument("--encoder", default="hashed-bow", choices=["hashed-bow", "transformer"])
    sub.add_argument("--runs", type=int, default=5)
    sub.add_argument("--epochs", type=int, default=10)
    sub.add_argument("--batch-size", type=int, default=8)
    sub.add_argument("--lr", type=float, default=1e-5)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument(
        "--fixed-seed",
        action="store_true",
        help="use the same seed for every run (deterministic, zero variance)",
    )
    sub.add_argument("--feature-dim", type=int, default=4096)
    sub.add_argument("--model-name", default="roberta-large")


def _config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        encoder=args.encoder,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        runs=args.runs,
        seed=args.seed,
        vary_seed_per_run=not args.fixed_seed,
        feature_dim=args.feature_dim,
        model_name=args.model_name,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graft-eval")
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="evaluate one dataset bundle")
    run_cmd.add_argument("--bundle", required=True, help="bundle directory")
    run_cmd.add_argument("--out", default=None, help="write report.json here")
    _add_train_args(run_cmd)

    cmp_cmd = commands.add_parser("compare", help="evaluate two bundles on one test set")
    cmp_cmd.add_argument("--bundle-a", required=True)
    cmp_cmd.add_argument("--bundle-b", required=True)
    cmp_cmd.add_argument("--out", default=None, help="write the comparison JSON here")
    _add_train_args(cmp_cmd)
    return parser


def _print_report(tag: str, report: EvalReport) -> None:
    print(
        f"{tag}: F1 {report.f1:.4f} (precision {report.precision:.4f}, "
        f"recall {report.recall:.4f}; mean of {report.runs} runs {report.f1_mean_runs:.4f})"
    )


def _cmd_run(args: argparse.Namespace) -> int:
    report = finetune_and_eval(args.bundle, args.test, _config(args))
    _print_report(args.bundle, report)
    if args.out:
        report.save(args.out)
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    config = _config(args)
    report_a = finetune_and_eval(args.bundle_a, args.test, config)
    report_b = finetune_and_eval(args.bundle_b, args.test, config)
    _print_report(args.bundle_a, report_a)
    _print_report(args.bundle_b, report_b)
    gap = report_a.f1_mean_runs - report_b.f1_mean_runs
    sign = "A > B" if gap > 0 else ("A < B" if gap < 0 else "A == B")
    print(f"gap (mean-of-runs F1): {gap:+.4f} ({sign})")
    if args.out:
        import json
        from pathlib import Path

        Path(args.out).write_text(
            json.dumps(
                {
                    "bundle_a": report_a.to_dict(),
                    "bundle_b": report_b.to_dict(),
                    "gap_mean_f1": gap,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except (SchemaError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
