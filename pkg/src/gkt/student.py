"""Edge-side completion.

Each job glues the shared exemplars, the question stem, and the
guidance prefix into one prompt and lets the student continue it under
that user's own generation settings. full_response always begins with
the guidance text verbatim. The fleet runner executes jobs with
bounded parallelism; one job failing never aborts the others.
"""
from __future__ import annotations

import heapq
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .backends import Backend
from .domain import CompletionResult, GuidancePrompt, TaskKind, UserRequest
from .errors import BackendError, DomainError
from .evaluation import extract_answer
from .prompts import question_stem


@dataclass(frozen=True, slots=True)
class StudentJob:
    request: UserRequest
    guidance: GuidancePrompt
    few_shot_prompt: str


@dataclass(frozen=True, slots=True)
class JobFailure:
    request_id: str
    error: str
    duration_s: float


@dataclass(frozen=True, slots=True)
class FleetRun:
    # Order-aligned with the submitted jobs.
    results: tuple[CompletionResult | JobFailure, ...]
    # (start_s, end_s) offsets under the fleet schedule, one per job.
    job_spans: tuple[tuple[float, float], ...]
    makespan_s: float
    parallelism: int

    @property
    def completed(self) -> list[CompletionResult]:
        return [r for r in self.results if isinstance(r, CompletionResult)]

    @property
    def failures(self) -> list[JobFailure]:
        return [r for r in self.results if isinstance(r, JobFailure)]


def build_jobs(
    requests: list[UserRequest],
    guidance: list[GuidancePrompt],
    few_shot_prompt: str,
) -> list[StudentJob]:
    by_id = {g.request_id: g for g in guidance}
    missing = [r.request_id for r in requests if r.request_id not in by_id]
    if missing:
        raise DomainError(f"requests without guidance: {missing[:5]}")
    return [
        StudentJob(request=r, guidance=by_id[r.request_id], few_shot_prompt=few_shot_prompt)
        for r in requests
    ]


def complete_response(
    job: StudentJob,
    student: Backend,
    task: TaskKind | None = None,
    instruction_prefix: str = "",
) -> CompletionResult:
    """Run one user's completion.

    The student prompt carries no projection instruction unless one is
    passed explicitly; max_new_tokens budgets the continuation only.
    """
    prompt = (
        job.few_shot_prompt
        + instruction_prefix
        + question_stem(job.request.question)
        + job.guidance.text
    )
    start = time.perf_counter()
    try:
        output = student.generate(prompt, job.request.settings)
    except BackendError as exc:
        exc.request_id = job.request.request_id
        raise
    wall = time.perf_counter() - start
    full = job.guidance.text + output.text
    return CompletionResult(
        request_id=job.request.request_id,
        guidance=job.guidance,
        full_response=full,
        student_token_count=output.token_count,
        student_time=output.latency_s if student.is_simulated else wall,
        extracted_answer=extract_answer(full, task) if task is not None else None,
        settings_used=job.request.settings,
    )


def _greedy_schedule(durations: list[float], parallelism: int) -> list[tuple[float, float]]:
    """List scheduling in submission order onto identical workers."""
    free = [0.0] * min(parallelism, max(len(durations), 1))
    heapq.heapify(free)
    spans: list[tuple[float, float]] = []
    for d in durations:
        start = heapq.heappop(free)
        end = start + d
        spans.append((start, end))
        heapq.heappush(free, end)
    return spans


def run_edge_fleet(
    jobs: list[StudentJob],
    student: Backend,
    parallelism: int,
    task: TaskKind | None = None,
    instruction_prefix: str = "",
) -> FleetRun:
    """All jobs, at most ``parallelism`` in flight; failures become
    JobFailure entries at their job's position and the rest proceed."""
    if parallelism < 1:
        raise DomainError(f"parallelism must be >= 1, got {parallelism}")

    def work(job: StudentJob) -> CompletionResult | JobFailure:
        start = time.perf_counter()
        try:
            return complete_response(job, student, task=task, instruction_prefix=instruction_prefix)
        except BackendError as exc:
            return JobFailure(
                request_id=job.request.request_id,
                error=f"{type(exc).__name__}: {exc}",
                duration_s=time.perf_counter() - start,
            )

    wall_start = time.perf_counter()
    if parallelism == 1:
        results = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(work, jobs))
    wall = time.perf_counter() - wall_start

    def duration(r: CompletionResult | JobFailure) -> float:
        return r.student_time if isinstance(r, CompletionResult) else r.duration_s

    if student.is_simulated:
        spans = _greedy_schedule([duration(r) for r in results], parallelism)
        makespan = max((end for _, end in spans), default=0.0)
    else:
        # Wall-clock regime: report the measured span; per-job offsets are
        # approximated by the same schedule over measured durations.
        spans = _greedy_schedule([duration(r) for r in results], parallelism)
        makespan = wall
    return FleetRun(
        results=tuple(results),
        job_spans=tuple(spans),
        makespan_s=makespan,
        parallelism=parallelism,
    )
