"""Run reports and trace timelines.

The report is one JSON document: schema-versioned, deterministic for
simulated runs, with every wall-clock dependent field quarantined in
its own "wall_clock" section so reproducibility checks can drop that
single key. A flat CSV of per-example rows sits next to it for
spreadsheet import, and the trace is written twice: structured JSON
and a standalone SVG with one horizontal bar per span on a seconds
axis.
"""
from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path

from .domain import CompletionResult, DatasetRecord, GenerationSettings, GuidancePrompt, TaskKind
from .errors import DomainError
from .evaluation import (
    Baselines,
    CostPerformance,
    ExampleScore,
    RunMetrics,
    ThroughputModel,
    evaluate_results,
    fmt2,
    round_half_up,
)

SCHEMA_VERSION = "guided-run-report-v1"

_STAGE_COLORS = {
    "teacher": "#4c78a8",
    "link": "#f58518",
    "student": "#54a24b",
}


class TraceStage(enum.Enum):
    TEACHER = "teacher"
    LINK = "link"
    STUDENT = "student"


@dataclass(frozen=True, slots=True)
class TraceSpan:
    label: str
    stage: TraceStage
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if self.end_s < self.start_s or self.start_s < 0:
            raise DomainError(f"invalid span [{self.start_s}, {self.end_s}] for {self.label}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True, slots=True)
class TraceTimeline:
    spans: tuple[TraceSpan, ...]


def timeline_to_dict(timeline: TraceTimeline) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "spans": [
            {
                "label": s.label,
                "stage": s.stage.value,
                "start_s": s.start_s,
                "end_s": s.end_s,
            }
            for s in timeline.spans
        ],
    }


def layout_trace(
    timeline: TraceTimeline,
    width: int = 940,
    margin_left: int = 190,
    margin_top: int = 34,
    row_height: int = 18,
) -> dict:
    """Pure layout: bar geometry and axis ticks, independently testable."""
    spans = sorted(timeline.spans, key=lambda s: (s.start_s, s.stage.value, s.label))
    t_max = max((s.end_s for s in spans), default=0.0)
    scale = (width - margin_left - 30) / t_max if t_max > 0 else 0.0
    rows = []
    for i, s in enumerate(spans):
        x = margin_left + s.start_s * scale
        w = max(s.duration_s * scale, 1.0)
        rows.append(
            {
                "label": s.label,
                "stage": s.stage.value,
                "x": x,
                "y": margin_top + i * row_height,
                "width": w,
                "text": f"{s.label} {fmt2(s.duration_s)} s",
            }
        )
    ticks = []
    for i in range(6):
        t = t_max * i / 5
        ticks.append({"x": margin_left + t * scale, "text": fmt2(t)})
    return {
        "rows": rows,
        "ticks": ticks,
        "t_max": t_max,
        "height": margin_top + len(rows) * row_height + 40,
        "width": width,
    }


def render_trace_svg(timeline: TraceTimeline) -> str:
    layout = layout_trace(timeline)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{layout["width"]}" '
        f'height="{layout["height"]}" font-family="monospace" font-size="11">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    axis_y = layout["height"] - 26
    for tick in layout["ticks"]:
        parts.append(
            f'<line x1="{tick["x"]:.2f}" y1="30" x2="{tick["x"]:.2f}" y2="{axis_y}" '
            'stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{tick["x"]:.2f}" y="{axis_y + 14}" text-anchor="middle" '
            f'fill="#555555">{tick["text"]}</text>'
        )
    for row in layout["rows"]:
        color = _STAGE_COLORS[row["stage"]]
        parts.append(
            f'<rect x="{row["x"]:.2f}" y="{row["y"]}" width="{row["width"]:.2f}" '
            f'height="12" fill="{color}"/>'
        )
        parts.append(
            f'<text x="4" y="{row["y"] + 10}" fill="#333333">{row["text"]}</text>'
        )
    parts.append(
        f'<text x="{layout["width"] // 2}" y="{layout["height"] - 6}" '
        'text-anchor="middle" fill="#555555">seconds</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_trace(timeline: TraceTimeline, path: str | Path) -> tuple[Path, Path]:
    """Write the structured timeline and the vector drawing side by side."""
    base = Path(path)
    json_path = base if base.suffix == ".json" else base.with_suffix(".json")
    svg_path = json_path.with_suffix(".svg")
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(
        json.dumps(timeline_to_dict(timeline), indent=2) + "\n", encoding="utf-8"
    )
    svg_path.write_text(render_trace_svg(timeline) + "\n", encoding="utf-8")
    return json_path, svg_path


def settings_to_dict(settings: GenerationSettings) -> dict:
    return {
        "temperature": settings.temperature,
        "top_p": settings.top_p,
        "max_new_tokens": settings.max_new_tokens,
        "seed": settings.seed,
    }


def metrics_to_dict(metrics: RunMetrics) -> dict:
    baselines = metrics.baselines
    out = {
        "n_examples": metrics.n_examples,
        "accuracy": metrics.accuracy,
        "acc_teacher": metrics.acc_teacher,
        "times": {
            "teacher_s": metrics.times.teacher_s,
            "student_s": metrics.times.student_s,
            "total_s": metrics.times.total_s,
        },
        "delta_acc_points": metrics.delta_acc_points,
        "speed_up": metrics.speed_up,
        "baselines": {
            "accuracy_reference": baselines.accuracy_reference,
            "accuracy_reference_name": baselines.accuracy_reference_name,
            "time_reference_s": baselines.time_reference_s,
            "time_reference_name": baselines.time_reference_name,
        },
        # Rounded half-up at emission; everything above is unrounded.
        "table": {
            "acc_pct": fmt2(100 * metrics.accuracy),
            "acc_teacher_pct": fmt2(100 * metrics.acc_teacher),
            "time_s": fmt2(metrics.times.total_s),
        },
    }
    if metrics.delta_acc_points is not None:
        out["table"]["delta_acc_points"] = fmt2(metrics.delta_acc_points)
    if metrics.speed_up is not None:
        out["table"]["speed_up"] = fmt2(metrics.speed_up)
    return out


def throughput_to_dict(model: ThroughputModel) -> dict:
    return {
        "per_example_teacher_s": model.per_example_teacher_s,
        "per_example_student_s": model.per_example_student_s,
        "per_example_total_s": model.per_example_total_s,
        "batch_size": model.batch_size,
        "users_served_per_window": model.users_served_per_window,
        "table": {
            "per_example_teacher_s": fmt2(model.per_example_teacher_s),
            "per_example_student_s": fmt2(model.per_example_student_s),
            "per_example_total_s": fmt2(model.per_example_total_s),
        },
    }


def cost_performance_to_dict(cp: CostPerformance) -> dict:
    return {
        "performance_ratio": cp.performance_ratio,
        "cost_ratio": cp.cost_ratio,
        "table": {
            "performance_pct": fmt2(100 * cp.performance_ratio),
            "cost_pct_whole": int(round_half_up(100 * cp.cost_ratio, 0)),
        },
    }


def per_example_rows(
    results: list[CompletionResult],
    scores: list[ExampleScore],
    questions: dict[str, str],
) -> list[dict]:
    by_id = {s.record_id: s for s in scores}
    rows = []
    for r in results:
        s = by_id[r.request_id]
        rows.append(
            {
                "id": r.request_id,
                "question": questions.get(r.request_id, ""),
                "gold_answer": s.gold_answer,
                "extracted_answer": s.extracted_answer,
                "correct": s.correct,
                "teacher_answer": s.teacher_answer,
                "teacher_correct": s.teacher_correct,
                "guidance_text": r.guidance.text,
                "guidance_tokens": r.guidance.teacher_token_count,
                "guidance_time_s": r.guidance.generation_time,
                "batch_index": r.guidance.batch_index,
                "full_response": r.full_response,
                "student_tokens": r.student_token_count,
                "student_time_s": r.student_time,
                "settings": settings_to_dict(r.settings_used),
            }
        )
    return rows


def evaluate_and_rows(
    results: list[CompletionResult], gold: list[DatasetRecord], task: TaskKind
) -> list[dict]:
    scores = evaluate_results(results, gold, task)
    questions = {r.id: r.question for r in gold}
    return per_example_rows(results, scores, questions)


_CSV_COLUMNS = (
    "id",
    "gold_answer",
    "extracted_answer",
    "correct",
    "teacher_answer",
    "teacher_correct",
    "guidance_tokens",
    "guidance_time_s",
    "batch_index",
    "student_tokens",
    "student_time_s",
)


def write_per_example_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def write_report(report: dict, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return out


def results_from_rows(rows: list[dict]) -> list[CompletionResult]:
    """Rebuild scoreable results from a report's per-example section."""
    results = []
    for row in rows:
        settings = row.get("settings") or {}
        guidance = GuidancePrompt(
            request_id=row["id"],
            text=row.get("guidance_text", ""),
            teacher_token_count=int(row.get("guidance_tokens", 0)),
            generation_time=float(row.get("guidance_time_s", 0.0)),
            batch_index=int(row.get("batch_index", 0)),
        )
        results.append(
            CompletionResult(
                request_id=row["id"],
                guidance=guidance,
                full_response=row.get("full_response", ""),
                student_token_count=int(row.get("student_tokens", 0)),
                student_time=float(row.get("student_time_s", 0.0)),
                extracted_answer=row.get("extracted_answer"),
                settings_used=GenerationSettings(
                    temperature=float(settings.get("temperature", 0.8)),
                    top_p=float(settings.get("top_p", 0.9)),
                    max_new_tokens=int(settings.get("max_new_tokens", 1024)),
                    seed=settings.get("seed"),
                ),
            )
        )
    return results


def baselines_from_report(path: str | Path, name: str | None = None) -> Baselines:
    """Reference accuracy and total time lifted from an earlier report."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    metrics = data["metrics"]
    label = name or data.get("run_label") or str(path)
    return Baselines(
        accuracy_reference=metrics["accuracy"],
        accuracy_reference_name=label,
        time_reference_s=metrics["times"]["total_s"],
        time_reference_name=label,
    )
