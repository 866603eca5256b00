"""Teacher-side guidance generation.

Requests are packed into arrival-order batches of at most the teacher's
capacity; each batch goes through one batched decode capped at the
guidance token budget, so shortening is a decode-time property rather
than post-hoc truncation of a long answer. Batch duration is recorded
once and apportioned equally to members; the total across batches is
what speed-up arithmetic consumes.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

from .backends import Backend
from .domain import GenerationSettings, GuidancePrompt, ProjectionSpec, TaskKind, UserRequest
from .errors import BackendError, DomainError
from .evaluation import extract_answer
from .prompts import question_stem


@dataclass(frozen=True, slots=True)
class BatchPlan:
    batches: tuple[tuple[str, ...], ...]
    capacity: int


def plan_batches(requests: list[UserRequest], capacity: int) -> BatchPlan:
    """ceil(n / capacity) arrival-order batches; all full except maybe the last."""
    if capacity < 1:
        raise DomainError(f"capacity must be >= 1, got {capacity}")
    ids = [r.request_id for r in requests]
    if len(set(ids)) != len(ids):
        raise DomainError("request ids must be unique")
    batches = tuple(
        tuple(ids[i : i + capacity]) for i in range(0, len(ids), capacity)
    )
    return BatchPlan(batches=batches, capacity=capacity)


def build_teacher_prompt(
    question: str, few_shot_prompt: str, projection: ProjectionSpec
) -> str:
    stem = question_stem(question)
    prefix = projection.instruction_prefix or ""
    if projection.instruction_position == "before_exemplars":
        return prefix + few_shot_prompt + stem
    return few_shot_prompt + prefix + stem


def generate_guidance(
    requests: list[UserRequest],
    teacher: Backend,
    projection: ProjectionSpec,
    few_shot_prompt: str,
    capacity: int,
    settings: GenerationSettings | None = None,
) -> list[GuidancePrompt]:
    """One GuidancePrompt per request, order-aligned with the input.

    A failure inside a batch fails the whole run with the batch index
    attached; no partial guidance list is returned.
    """
    plan = plan_batches(requests, capacity)
    by_id = {r.request_id: r for r in requests}
    base = settings if settings is not None else GenerationSettings()
    gen_settings = replace(base, max_new_tokens=projection.guidance_token_budget)
    out: list[GuidancePrompt] = []
    for batch_index, id_batch in enumerate(plan.batches):
        prompts = [
            build_teacher_prompt(by_id[rid].question, few_shot_prompt, projection)
            for rid in id_batch
        ]
        start = time.perf_counter()
        try:
            outputs = teacher.generate_batch(prompts, gen_settings)
        except BackendError as exc:
            exc.batch_index = batch_index
            raise
        wall = time.perf_counter() - start
        duration = teacher.batch_duration(outputs) if teacher.is_simulated else wall
        share = duration / len(outputs)
        for rid, output in zip(id_batch, outputs):
            out.append(
                GuidancePrompt(
                    request_id=rid,
                    text=output.text,
                    teacher_token_count=output.token_count,
                    generation_time=share,
                    batch_index=batch_index,
                )
            )
    return out


def teacher_only_answer(guidance: GuidancePrompt, task: TaskKind) -> str | None:
    """Answer extractable from the guidance alone; feeds the ACC_teacher column."""
    return extract_answer(guidance.text, task)


def batch_durations(guidance: list[GuidancePrompt]) -> dict[int, float]:
    """Recover per-batch durations from equal apportionment."""
    totals: dict[int, float] = {}
    for g in guidance:
        totals[g.batch_index] = totals.get(g.batch_index, 0.0) + g.generation_time
    return totals
