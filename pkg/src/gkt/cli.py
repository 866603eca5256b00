"""Command line entry point.

Subcommands:
  run            execute an experiment from a config file
  serve          expose the guidance endpoint over HTTP
  simulate-link  print transfer cost tables for both schemes
  score          re-score a results file against a gold dataset

Exit codes: 0 success, 2 config error, 3 dataset error, 4 backend error.

Examples:
  gkt run --config configs/mock_numeric.yaml --mode hint --guidance-tokens 40
  gkt serve --config configs/mock_numeric.yaml --port 8311
  gkt simulate-link --vocab 32000 --bandwidth-bps 5000 --guidance-tokens 40 --student-tokens 600
  gkt score --results out/report.json --gold data/dev.jsonl --task numeric
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import load_config
from .datasets import load_dataset
from .domain import ProjectionMode, RunMode, TaskKind
from .errors import BackendError, ConfigInvalid, DatasetUnreadable, GKTError, JoinError
from .evaluation import fmt2, score_run
from .link import LinkModel, compare_schemes
from .pipeline import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_BACKEND = 4


def _apply_run_overrides(config, args):
    projection = config.projection
    if args.mode is not None:
        projection = dataclasses.replace(
            projection, mode=ProjectionMode(args.mode), instruction_prefix=None
        )
    if args.guidance_tokens is not None:
        projection = dataclasses.replace(projection, guidance_token_budget=args.guidance_tokens)
    updates = {"projection": projection}
    if args.batch_size is not None:
        updates["teacher_batch_size"] = args.batch_size
    if args.baseline is not None:
        updates["run_mode"] = RunMode(args.baseline)
    if args.report is not None:
        updates["report_path"] = args.report
    if args.baseline_report is not None:
        updates["baseline_report_path"] = args.baseline_report
    return dataclasses.replace(config, **updates)


def _cmd_run(args) -> int:
    config = _apply_run_overrides(load_config(args.config), args)
    outcome = run_experiment(config)
    table = outcome.report["metrics"]["table"]
    print(f"examples           {outcome.metrics.n_examples}")
    for key in ("acc_pct", "acc_teacher_pct", "delta_acc_points", "time_s", "speed_up"):
        if key in table:
            print(f"{key:<18} {table[key]}")
    print(f"report             {outcome.report_path}")
    print(f"per-example csv    {outcome.csv_path}")
    print(f"trace              {outcome.trace_json_path} {outcome.trace_svg_path}")
    if outcome.failures:
        print(f"failed jobs        {len(outcome.failures)}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .backends import build_backend
    from .pipeline import resolve_few_shot
    from .service import create_app

    config = load_config(args.config)
    from .domain import validate_config

    violations = validate_config(config)
    if violations:
        raise ConfigInvalid(violations)
    teacher = build_backend(config.teacher_backend)
    app = create_app(
        teacher,
        few_shot_prompt=resolve_few_shot(config),
        capacity=config.effective_batch_size,
        linger_s=config.service_linger_s,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _cmd_simulate_link(args) -> int:
    sweep = [0.25, 0.5, 1.0, 2.0, 4.0]
    print(
        f"{'bandwidth_bps':>14} {'bits/token':>10} "
        f"{'guidance_tokens':>15} {'guidance_s':>10} {'draft_tokens':>12} {'draft_s':>10}"
    )
    for factor in sweep:
        link = LinkModel(
            bandwidth_bits_per_s=args.bandwidth_bps * factor,
            vocabulary_size=args.vocab,
        )
        ours, draft = compare_schemes(args.guidance_tokens, args.student_tokens, link)
        print(
            f"{link.bandwidth_bits_per_s:>14.0f} {link.bits_per_token:>10} "
            f"{ours.tokens_transmitted:>15} {fmt2(ours.time_s):>10} "
            f"{draft.tokens_transmitted:>12} {fmt2(draft.time_s):>10}"
        )
    return EXIT_OK


def _cmd_score(args) -> int:
    from .reporting import results_from_rows

    raw = Path(args.results).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError:
        # Not one document: treat as one JSON object per line.
        try:
            rows = [json.loads(line) for line in raw.splitlines() if line.strip()]
        except json.JSONDecodeError as exc:
            raise DatasetUnreadable(f"{args.results}: not JSON or JSONL: {exc}") from exc
    else:
        if isinstance(doc, dict):
            if "per_example" not in doc:
                raise DatasetUnreadable(f"{args.results}: report has no per_example section")
            rows = doc["per_example"]
        else:
            rows = doc
    results = results_from_rows(rows)
    gold = load_dataset(args.gold)
    ids = {r.request_id for r in results}
    gold = [g for g in gold if g.id in ids]
    task = TaskKind(args.task)
    metrics = score_run(results, gold, task)
    print(f"examples        {metrics.n_examples}")
    print(f"acc_pct         {fmt2(100 * metrics.accuracy)}")
    print(f"acc_teacher_pct {fmt2(100 * metrics.acc_teacher)}")
    print(f"time_s          {fmt2(metrics.times.total_s)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--mode", choices=[m.value for m in ProjectionMode])
    p_run.add_argument("--guidance-tokens", type=int)
    p_run.add_argument("--batch-size", type=int)
    p_run.add_argument(
        "--baseline",
        choices=[RunMode.STUDENT_ONLY.value, RunMode.TEACHER_ONLY.value],
        help="run a reference mode instead of the guided pipeline",
    )
    p_run.add_argument("--report", help="override the report path")
    p_run.add_argument("--baseline-report", help="earlier report supplying reference columns")
    p_run.set_defaults(fn=_cmd_run)

    p_serve = sub.add_parser("serve", help="expose POST /v1/guidance and GET /healthz")
    p_serve.add_argument("--config", required=True)
    p_serve.add_argument("--port", type=int, required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(fn=_cmd_serve)

    p_link = sub.add_parser("simulate-link", help="transfer cost for both schemes")
    p_link.add_argument("--vocab", type=int, required=True)
    p_link.add_argument("--bandwidth-bps", type=float, required=True)
    p_link.add_argument("--guidance-tokens", type=int, required=True)
    p_link.add_argument("--student-tokens", type=int, required=True)
    p_link.set_defaults(fn=_cmd_simulate_link)

    p_score = sub.add_parser("score", help="re-score results against gold answers")
    p_score.add_argument("--results", required=True, help="report JSON or per-example JSONL")
    p_score.add_argument("--gold", required=True)
    p_score.add_argument("--task", choices=[t.value for t in TaskKind], required=True)
    p_score.set_defaults(fn=_cmd_score)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigInvalid as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetUnreadable, JoinError) as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except GKTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_DATASET


if __name__ == "__main__":
    sys.exit(main())
