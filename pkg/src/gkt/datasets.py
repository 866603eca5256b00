"""Dataset ingestion.

One record per line, each a self-describing JSON object with fields
id, question, answer, and optional rationale. Synthetic generators
below produce desk-scale fixtures in the same shape.
"""
from __future__ import annotations

import json
import random
from pathlib import Path

from .domain import DatasetRecord, TaskKind
from .errors import DatasetUnreadable

_CHOICE_LETTERS = "abcde"


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetUnreadable(f"cannot read dataset {path}: {exc}") from exc
    records: list[DatasetRecord] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetUnreadable(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        try:
            record = DatasetRecord(
                id=str(obj["id"]),
                question=str(obj["question"]),
                gold_answer=str(obj["answer"]),
                gold_rationale=obj.get("rationale"),
            )
        except KeyError as exc:
            raise DatasetUnreadable(f"{path}:{lineno}: missing field {exc}") from exc
        if not record.gold_answer:
            raise DatasetUnreadable(f"{path}:{lineno}: empty answer")
        records.append(record)
    if not records:
        raise DatasetUnreadable(f"{path}: no records")
    return records


def validate_records(records: list[DatasetRecord], task: TaskKind) -> None:
    if task is not TaskKind.MULTIPLE_CHOICE:
        return
    bad = [r.id for r in records if r.gold_answer.strip().lower() not in _CHOICE_LETTERS]
    if bad:
        raise DatasetUnreadable(f"choice labels must be a-e; offending ids: {bad[:5]}")


def save_dataset(records: list[DatasetRecord], path: str | Path) -> None:
    lines = []
    for r in records:
        obj: dict = {"id": r.id, "question": r.question, "answer": r.gold_answer}
        if r.gold_rationale is not None:
            obj["rationale"] = r.gold_rationale
        lines.append(json.dumps(obj, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def synthesize_dataset(n: int, task: TaskKind, seed: int = 0) -> list[DatasetRecord]:
    """Deterministic toy records for smoke runs and fixtures."""
    rng = random.Random(seed)
    records = []
    for i in range(n):
        rid = f"syn-{i:04d}"
        if task is TaskKind.NUMERIC:
            a, b = rng.randint(2, 60), rng.randint(2, 60)
            records.append(
                DatasetRecord(
                    id=rid,
                    question=f"A shelf holds {a} crates and a second shelf holds {b}. "
                    "How many crates are there in total?",
                    gold_answer=str(a + b),
                )
            )
        else:
            letter = rng.choice(_CHOICE_LETTERS)
            choices = " ".join(f"({c}) item-{c}" for c in _CHOICE_LETTERS)
            records.append(
                DatasetRecord(
                    id=rid,
                    question=f"Which label is marked for slot {i}? Answer Choices: {choices}",
                    gold_answer=letter,
                )
            )
    return records
