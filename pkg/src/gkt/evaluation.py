"""Answer extraction and run metrics.

Answers are compared as canonical strings: numeric answers keep their
exact decimal text (commas and a leading plus stripped, trailing
fractional zeros dropped), choice answers are a single lowercase
letter. There is no float-epsilon comparison anywhere in scoring.

All table-facing numbers are rounded half-up and only at emission;
every intermediate value stays unrounded.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .domain import CompletionResult, DatasetRecord, TaskKind
from .errors import DomainError, JoinError

_ANSWER_NUM_RE = re.compile(
    r"the answer is\s*:?\s*\$?\s*([-+]?\d[\d,]*(?:\.\d+)?)", re.IGNORECASE
)
_STANDALONE_NUM_RE = re.compile(r"(?<![\w.])[-+]?\d[\d,]*(?:\.\d+)?")
# Canonical phrasing, with or without parentheses around the letter.
_CHOICE_PHRASE_RE = re.compile(r"the answer is\s*:?\s*\(?([a-e])\)?(?![a-z0-9])", re.IGNORECASE)
# A parenthesized letter shortly after the word "answer".
_CHOICE_NEAR_RE = re.compile(r"answer[^()]{0,15}\(([a-e])\)", re.IGNORECASE)

_WORD_RE = re.compile(r"[a-z0-9]+")


def normalize_numeric(raw: str) -> str:
    """Canonical form of a decimal string: no commas, no leading plus, no
    trailing fractional zeros, -0 collapsed to 0."""
    s = raw.replace(",", "").strip()
    if s.startswith("+"):
        s = s[1:]
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("-0", ""):
        s = "0"
    return s


def extract_answer(text: str, task: TaskKind) -> str | None:
    """Last stated answer in ``text``, canonicalized; None when absent."""
    if task is TaskKind.NUMERIC:
        matches = _ANSWER_NUM_RE.findall(text)
        if matches:
            return normalize_numeric(matches[-1])
        fallback = _STANDALONE_NUM_RE.findall(text)
        if fallback:
            return normalize_numeric(fallback[-1])
        return None
    best: tuple[int, str] | None = None
    for pattern in (_CHOICE_PHRASE_RE, _CHOICE_NEAR_RE):
        for m in pattern.finditer(text):
            if best is None or m.start() >= best[0]:
                best = (m.start(), m.group(1).lower())
    return best[1] if best else None


def answers_equal(a: str | None, b: str | None, task: TaskKind) -> bool:
    if a is None or b is None:
        return False
    if task is TaskKind.NUMERIC:
        return normalize_numeric(a) == normalize_numeric(b)
    return a.strip().lower() == b.strip().lower()


def round_half_up(value: float, ndigits: int = 2) -> float:
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def fmt2(value: float) -> str:
    """Half-up two-decimal string for table emission."""
    return f"{round_half_up(value, 2):.2f}"


@dataclass(frozen=True, slots=True)
class Baselines:
    """Named reference runs for the derived columns. Accuracy references
    are fractions in [0, 1]; the time reference is total seconds."""

    accuracy_reference: float | None = None
    accuracy_reference_name: str | None = None
    time_reference_s: float | None = None
    time_reference_name: str | None = None


@dataclass(frozen=True, slots=True)
class StageTimes:
    teacher_s: float
    student_s: float

    @property
    def total_s(self) -> float:
        return self.teacher_s + self.student_s


@dataclass(frozen=True, slots=True)
class ExampleScore:
    record_id: str
    gold_answer: str
    extracted_answer: str | None
    correct: bool
    teacher_answer: str | None
    teacher_correct: bool


@dataclass(frozen=True, slots=True)
class RunMetrics:
    n_examples: int
    accuracy: float
    acc_teacher: float
    times: StageTimes
    delta_acc_points: float | None
    speed_up: float | None
    baselines: Baselines


def evaluate_results(
    results: list[CompletionResult], gold: list[DatasetRecord], task: TaskKind
) -> list[ExampleScore]:
    """Per-example judgments after a strict 1:1 join on id."""
    by_id: dict[str, DatasetRecord] = {}
    for record in gold:
        if record.id in by_id:
            raise JoinError(f"duplicate gold id {record.id!r}")
        by_id[record.id] = record
    seen: set[str] = set()
    scores: list[ExampleScore] = []
    for result in results:
        if result.request_id in seen:
            raise JoinError(f"duplicate result id {result.request_id!r}")
        seen.add(result.request_id)
        record = by_id.get(result.request_id)
        if record is None:
            raise JoinError(f"result id {result.request_id!r} has no gold record")
        extracted = extract_answer(result.full_response, task)
        teacher_answer = extract_answer(result.guidance.text, task)
        scores.append(
            ExampleScore(
                record_id=record.id,
                gold_answer=record.gold_answer,
                extracted_answer=extracted,
                correct=answers_equal(extracted, record.gold_answer, task),
                teacher_answer=teacher_answer,
                teacher_correct=answers_equal(teacher_answer, record.gold_answer, task),
            )
        )
    missing = set(by_id) - seen
    if missing:
        raise JoinError(f"gold ids without results: {sorted(missing)[:5]}")
    return scores


def score_run(
    results: list[CompletionResult],
    gold: list[DatasetRecord],
    task: TaskKind,
    baselines: Baselines = Baselines(),
) -> RunMetrics:
    if not results:
        raise DomainError("cannot score an empty run")
    scores = evaluate_results(results, gold, task)
    n = len(scores)
    accuracy = sum(s.correct for s in scores) / n
    acc_teacher = sum(s.teacher_correct for s in scores) / n
    times = StageTimes(
        teacher_s=sum(r.guidance.generation_time for r in results),
        student_s=sum(r.student_time for r in results),
    )
    delta = None
    if baselines.accuracy_reference is not None:
        delta = 100.0 * (accuracy - baselines.accuracy_reference)
    speed_up = None
    if baselines.time_reference_s is not None and times.total_s > 0:
        speed_up = baselines.time_reference_s / times.total_s
    return RunMetrics(
        n_examples=n,
        accuracy=accuracy,
        acc_teacher=acc_teacher,
        times=times,
        delta_acc_points=delta,
        speed_up=speed_up,
        baselines=baselines,
    )


@dataclass(frozen=True, slots=True)
class ThroughputModel:
    per_example_teacher_s: float
    per_example_student_s: float
    per_example_total_s: float
    batch_size: int
    users_served_per_window: int


def throughput(
    teacher_total_s: float, student_total_s: float, n_examples: int, batch_size: int
) -> ThroughputModel:
    """Per-example stage times and how many users one serving window covers.

    Stage totals may be zero (a stage can be absent from a run); the
    example count and batch size must be positive.
    """
    if teacher_total_s < 0 or student_total_s < 0:
        raise DomainError("stage totals must be >= 0")
    if n_examples < 1 or batch_size < 1:
        raise DomainError("n_examples and batch_size must be >= 1")
    teacher = teacher_total_s / n_examples
    student = student_total_s / n_examples
    return ThroughputModel(
        per_example_teacher_s=teacher,
        per_example_student_s=student,
        per_example_total_s=teacher + student,
        batch_size=batch_size,
        users_served_per_window=batch_size,
    )


@dataclass(frozen=True, slots=True)
class CostPerformance:
    performance_ratio: float
    cost_ratio: float


def cost_performance(
    acc_framework: float,
    acc_teacher_full: float,
    guidance_tokens: float,
    full_output_tokens: float,
) -> CostPerformance:
    """Accuracy retained versus the teacher answering in full, against the
    fraction of teacher output tokens actually generated."""
    if acc_teacher_full <= 0 or full_output_tokens <= 0:
        raise DomainError("reference accuracy and token count must be positive")
    if acc_framework < 0 or guidance_tokens < 0:
        raise DomainError("framework accuracy and guidance tokens must be >= 0")
    return CostPerformance(
        performance_ratio=acc_framework / acc_teacher_full,
        cost_ratio=guidance_tokens / full_output_tokens,
    )


def dual_rate_cost_ratio(
    *,
    guidance_input_tokens: float,
    guidance_output_tokens: float,
    full_input_tokens: float,
    full_output_tokens: float,
    input_rate: float,
    output_rate: float,
) -> float:
    """Alternative pricing mode: bill prompt and completion tokens at
    separate rates before taking the cost ratio."""
    full = full_input_tokens * input_rate + full_output_tokens * output_rate
    if full <= 0:
        raise DomainError("full-route cost must be positive")
    guided = guidance_input_tokens * input_rate + guidance_output_tokens * output_rate
    return guided / full


def _rouge_tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Single-row DP table.
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = cur
    return row[len(b)]


def rouge_l(candidate: str, reference: str) -> float:
    """F1 over the longest common subsequence of word tokens."""
    cand = _rouge_tokens(candidate)
    ref = _rouge_tokens(reference)
    if not cand or not ref:
        return 0.0
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)
