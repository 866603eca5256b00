#!/usr/bin/env python3
"""Sweep the guidance token budget and tabulate accuracy against cost.

Runs the same experiment config once per budget, writing each report under
--out-dir, then prints one row per budget. Useful for finding the smallest
prefix that still moves student accuracy.
"""

from __future__ import annotations

import argparse
from dataclasses import replace
from pathlib import Path

from gkt.config import load_config
from gkt.pipeline import run_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="base experiment config")
    parser.add_argument(
        "--budgets",
        type=int,
        nargs="+",
        default=[10, 20, 40, 80],
        help="guidance token budgets to try",
    )
    parser.add_argument("--out-dir", default="out/sweep", help="report directory")
    args = parser.parse_args()

    base = load_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for budget in args.budgets:
        config = replace(
            base,
            projection=replace(base.projection, guidance_token_budget=budget),
            report_path=str(out_dir / f"budget_{budget:03d}.json"),
        )
        outcome = run_experiment(config)
        table = outcome.report["metrics"]["table"]
        per_example = outcome.report["per_example"]
        mean_guidance = sum(r["guidance_tokens"] for r in per_example) / max(
            len(per_example), 1
        )
        link = outcome.report["link"]
        link_s = f"{link['token_pricing']['time_s']:.2f}" if link else "-"
        rows.append(
            (
                budget,
                table["acc_pct"],
                table["acc_teacher_pct"],
                table["time_s"],
                f"{mean_guidance:.1f}",
                link_s,
            )
        )
        print(f"ran budget {budget}: report {config.report_path}")

    header = ("budget", "acc_pct", "acc_teacher", "time_s", "mean_guid_tok", "link_s")
    widths = [
        max(len(header[i]), *(len(str(r[i])) for r in rows)) for i in range(len(header))
    ]
    print()
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
    for r in rows:
        print("  ".join(str(v).rjust(widths[i]) for i, v in enumerate(r)))


if __name__ == "__main__":
    main()
