#!/usr/bin/env python3
"""Generate a deterministic synthetic dataset for smoke runs.

The records are toy arithmetic or multiple-choice questions whose gold
answers are known by construction, so they are useful for exercising the
pipeline end to end without shipping any real evaluation data.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from gkt.datasets import save_dataset, synthesize_dataset
from gkt.domain import TaskKind


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=100, help="number of records")
    parser.add_argument(
        "--task",
        choices=[t.value for t in TaskKind],
        default="numeric",
        help="question style to synthesize",
    )
    parser.add_argument("--seed", type=int, default=7, help="generator seed")
    parser.add_argument("--out", required=True, help="output JSONL path")
    args = parser.parse_args()

    records = synthesize_dataset(args.n, TaskKind(args.task), seed=args.seed)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(records, out)
    print(f"wrote {len(records)} {args.task} records to {out}")


if __name__ == "__main__":
    main()
