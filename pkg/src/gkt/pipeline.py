"""End-to-end experiment runs.

run_experiment wires the stages together: validate config, load the
dataset, plan batches, generate guidance on the teacher, price the
cloud-to-edge transfer, run the student fleet, score, and emit the
report family (report.json, per_example.csv, trace.json, trace.svg).

Baseline modes reuse the same plumbing: student-only skips the
guidance stage (every prefix is empty), teacher-only lets the teacher
write the whole response at the student's token budget and skips the
fleet.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .backends import Backend, build_backend
from .config import config_to_dict
from .datasets import load_dataset, validate_records
from .domain import (
    CompletionResult,
    ExperimentConfig,
    GuidancePrompt,
    ProjectionMode,
    ProjectionSpec,
    RunMode,
    UserRequest,
    validate_config,
)
from .errors import ConfigInvalid
from .evaluation import (
    Baselines,
    RunMetrics,
    cost_performance,
    score_run,
    throughput,
)
from .guidance import batch_durations, generate_guidance, plan_batches
from .link import byte_transmission_time, compare_schemes, transmission_time
from .prompts import build_few_shot_prompt
from .reporting import (
    SCHEMA_VERSION,
    TraceSpan,
    TraceStage,
    TraceTimeline,
    baselines_from_report,
    cost_performance_to_dict,
    emit_trace,
    evaluate_and_rows,
    metrics_to_dict,
    throughput_to_dict,
    timeline_to_dict,
    write_per_example_csv,
    write_report,
)
from .student import FleetRun, JobFailure, build_jobs, run_edge_fleet

_COLLAPSE_STUDENT_SPANS_ABOVE = 200


class SimulatedClock:
    """Monotonic clock under test control; batch runs never advance it."""

    def __init__(self, start: float = 0.0) -> None:
        self._now = start

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> None:
        self._now += seconds


class WallClock:
    def now(self) -> float:
        return time.monotonic()


@dataclass(frozen=True)
class RunOutcome:
    metrics: RunMetrics
    report: dict
    report_path: Path
    csv_path: Path
    trace_json_path: Path
    trace_svg_path: Path
    failures: tuple[JobFailure, ...]


def resolve_few_shot(config: ExperimentConfig) -> str:
    if config.few_shot_prompt:
        return config.few_shot_prompt
    if config.few_shot_style:
        return build_few_shot_prompt(config.few_shot_style, config.few_shot_exemplars)
    return ""


def _requests_from_records(records, settings, clock) -> list[UserRequest]:
    return [
        UserRequest(
            request_id=r.id,
            question=r.question,
            settings=settings,
            arrival_time=clock.now(),
        )
        for r in records
    ]


def _empty_guidance(requests: list[UserRequest]) -> list[GuidancePrompt]:
    return [
        GuidancePrompt(
            request_id=r.request_id,
            text="",
            teacher_token_count=0,
            generation_time=0.0,
            batch_index=0,
        )
        for r in requests
    ]


def _teacher_only_results(
    guidance: list[GuidancePrompt], settings
) -> list[CompletionResult]:
    # The teacher's text is the whole response and there is no student
    # stage, so full_response == guidance.text and the usual scoring
    # path lands all time in the teacher column.
    return [
        CompletionResult(
            request_id=g.request_id,
            guidance=g,
            full_response=g.text,
            student_token_count=0,
            student_time=0.0,
            extracted_answer=None,
            settings_used=settings,
        )
        for g in guidance
    ]


def _build_timeline(
    teacher_durations: dict[int, float],
    link_durations: dict[int, float],
    fleet: FleetRun | None,
    results: list[CompletionResult],
) -> TraceTimeline:
    spans: list[TraceSpan] = []
    t = 0.0
    teacher_ends: dict[int, float] = {}
    for b in sorted(teacher_durations):
        end = t + teacher_durations[b]
        if teacher_durations[b] > 0:
            spans.append(TraceSpan(f"teacher batch {b}", TraceStage.TEACHER, t, end))
        teacher_ends[b] = end
        t = end
    link_end = t
    prev = 0.0
    for b in sorted(link_durations):
        start = max(teacher_ends.get(b, t), prev)
        end = start + link_durations[b]
        spans.append(TraceSpan(f"link batch {b}", TraceStage.LINK, start, end))
        prev = end
        link_end = max(link_end, end)
    if fleet is not None and fleet.results:
        stage_start = link_end
        if len(fleet.results) > _COLLAPSE_STUDENT_SPANS_ABOVE:
            by_batch: dict[int, list[tuple[float, float]]] = {}
            for result, span in zip(fleet.results, fleet.job_spans):
                if isinstance(result, CompletionResult):
                    by_batch.setdefault(result.guidance.batch_index, []).append(span)
            for b in sorted(by_batch):
                group = by_batch[b]
                spans.append(
                    TraceSpan(
                        f"student batch {b}",
                        TraceStage.STUDENT,
                        stage_start + min(s for s, _ in group),
                        stage_start + max(e for _, e in group),
                    )
                )
        else:
            for result, span in zip(fleet.results, fleet.job_spans):
                rid = (
                    result.request_id
                    if isinstance(result, (CompletionResult, JobFailure))
                    else "?"
                )
                spans.append(
                    TraceSpan(
                        f"student {rid}",
                        TraceStage.STUDENT,
                        stage_start + span[0],
                        stage_start + span[1],
                    )
                )
    return TraceTimeline(spans=tuple(spans))


def run_experiment(config: ExperimentConfig, clock=None) -> RunOutcome:
    violations = validate_config(config)
    if violations:
        raise ConfigInvalid(violations)
    records = load_dataset(config.dataset_path)
    validate_records(records, config.task)

    teacher = build_backend(config.teacher_backend)
    student = build_backend(config.student_backend)
    if clock is None:
        clock = SimulatedClock() if teacher.is_simulated and student.is_simulated else WallClock()

    wall_started = datetime.now(timezone.utc)
    wall_t0 = time.perf_counter()

    few_shot = resolve_few_shot(config)
    requests = _requests_from_records(records, config.student_settings_default, clock)
    capacity = config.effective_batch_size
    # Catches duplicate ids and a bad capacity before any generation runs,
    # including in modes that skip the teacher.
    plan_batches(requests, capacity)

    fleet: FleetRun | None = None
    if config.run_mode is RunMode.STUDENT_ONLY:
        guidance = _empty_guidance(requests)
        jobs = build_jobs(requests, guidance, few_shot)
        fleet = run_edge_fleet(
            jobs,
            student,
            config.edge_parallelism,
            task=config.task,
            instruction_prefix=_student_instruction(config),
        )
        results = fleet.completed
    elif config.run_mode is RunMode.TEACHER_ONLY:
        projection = ProjectionSpec(
            mode=ProjectionMode.CUTOFF,
            guidance_token_budget=config.student_settings_default.max_new_tokens,
        )
        guidance = generate_guidance(
            requests, teacher, projection, few_shot, capacity,
            settings=config.student_settings_default,
        )
        results = _teacher_only_results(guidance, config.student_settings_default)
    else:
        guidance = generate_guidance(requests, teacher, config.projection, few_shot, capacity)
        jobs = build_jobs(requests, guidance, few_shot)
        fleet = run_edge_fleet(
            jobs,
            student,
            config.edge_parallelism,
            task=config.task,
            instruction_prefix=_student_instruction(config),
        )
        results = fleet.completed

    failures = tuple(fleet.failures) if fleet is not None else ()
    failed_ids = {f.request_id for f in failures}
    gold = [r for r in records if r.id not in failed_ids]

    baselines = Baselines()
    if config.baseline_report_path:
        baselines = baselines_from_report(config.baseline_report_path)
    metrics = score_run(results, gold, config.task, baselines)

    tp = throughput(
        metrics.times.teacher_s, metrics.times.student_s, metrics.n_examples, capacity
    )

    link_section = None
    link_durations: dict[int, float] = {}
    if config.link is not None:
        guidance_tokens_total = sum(g.teacher_token_count for g in guidance)
        guidance_bytes_total = sum(len(g.text.encode("utf-8")) for g in guidance)
        student_tokens_total = sum(r.student_token_count for r in results)
        per_batch_tokens: dict[int, int] = {}
        for g in guidance:
            per_batch_tokens[g.batch_index] = (
                per_batch_tokens.get(g.batch_index, 0) + g.teacher_token_count
            )
        link_durations = {
            b: transmission_time(n, config.link) for b, n in per_batch_tokens.items()
        }
        ours, draft = compare_schemes(guidance_tokens_total, student_tokens_total, config.link)
        link_section = {
            "bits_per_token": config.link.bits_per_token,
            "bandwidth_bits_per_s": config.link.bandwidth_bits_per_s,
            "guidance_tokens_total": guidance_tokens_total,
            "token_pricing": {
                "time_s": transmission_time(guidance_tokens_total, config.link),
                "per_example_mean_s": transmission_time(guidance_tokens_total, config.link)
                / max(len(results), 1),
            },
            "byte_pricing": {
                "bytes_total": guidance_bytes_total,
                "time_s": byte_transmission_time(guidance_bytes_total, config.link),
            },
            "schemes": {
                ours.scheme.value: {
                    "tokens_transmitted": ours.tokens_transmitted,
                    "time_s": ours.time_s,
                },
                draft.scheme.value: {
                    "tokens_transmitted": draft.tokens_transmitted,
                    "time_s": draft.time_s,
                },
            },
        }

    cost_section = None
    if config.cost_reference is not None and results:
        mean_guidance_tokens = sum(r.guidance.teacher_token_count for r in results) / len(results)
        cp = cost_performance(
            100 * metrics.accuracy,
            config.cost_reference.teacher_full_accuracy_pct,
            mean_guidance_tokens,
            config.cost_reference.teacher_full_avg_output_tokens,
        )
        cost_section = cost_performance_to_dict(cp)

    timeline = _build_timeline(
        batch_durations(guidance) if config.run_mode is not RunMode.STUDENT_ONLY else {},
        link_durations,
        fleet,
        results,
    )

    rows = evaluate_and_rows(results, gold, config.task)
    label = (
        f"{config.run_mode.value}:{config.teacher_backend.name}->"
        f"{config.student_backend.name}:{config.projection.mode.value}"
        f"@{config.projection.guidance_token_budget}"
    )
    report = {
        "schema_version": SCHEMA_VERSION,
        "run_label": label,
        "config": config_to_dict(config),
        "metrics": metrics_to_dict(metrics),
        "throughput": throughput_to_dict(tp),
        "cost_performance": cost_section,
        "link": link_section,
        "failures": [
            {"id": f.request_id, "error": f.error} for f in failures
        ],
        "per_example": rows,
        "trace": timeline_to_dict(timeline),
        "wall_clock": {
            "started_at": wall_started.isoformat(),
            "wall_duration_s": time.perf_counter() - wall_t0,
        },
    }

    report_path = write_report(report, config.report_path)
    csv_path = report_path.with_name(report_path.stem + "_per_example.csv")
    write_per_example_csv(rows, csv_path)
    trace_json, trace_svg = emit_trace(
        timeline, report_path.with_name(report_path.stem + "_trace.json")
    )
    return RunOutcome(
        metrics=metrics,
        report=report,
        report_path=report_path,
        csv_path=csv_path,
        trace_json_path=trace_json,
        trace_svg_path=trace_svg,
        failures=failures,
    )


def _student_instruction(config: ExperimentConfig) -> str:
    if config.student_sees_instruction:
        return config.projection.instruction_prefix or ""
    return ""
