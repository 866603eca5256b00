"""Guided completion serving: a large cloud model writes short guidance
prefixes in batches, small edge models finish the responses, and the
link between them is priced in token bits."""
from __future__ import annotations

from .domain import (
    BackendKind,
    BackendSpec,
    CompletionResult,
    DatasetRecord,
    ExperimentConfig,
    GenerationSettings,
    GuidancePrompt,
    ProjectionMode,
    ProjectionSpec,
    RunMode,
    TaskKind,
    UserRequest,
    validate_config,
)
from .evaluation import (
    Baselines,
    RunMetrics,
    cost_performance,
    extract_answer,
    rouge_l,
    score_run,
    throughput,
)
from .guidance import generate_guidance, plan_batches, teacher_only_answer
from .link import LinkModel, bits_per_token, compare_schemes, transmission_time
from .pipeline import run_experiment
from .student import complete_response, run_edge_fleet

__version__ = "0.1.0"

__all__ = [
    "BackendKind",
    "BackendSpec",
    "Baselines",
    "CompletionResult",
    "DatasetRecord",
    "ExperimentConfig",
    "GenerationSettings",
    "GuidancePrompt",
    "LinkModel",
    "ProjectionMode",
    "ProjectionSpec",
    "RunMetrics",
    "RunMode",
    "TaskKind",
    "UserRequest",
    "bits_per_token",
    "compare_schemes",
    "complete_response",
    "cost_performance",
    "extract_answer",
    "generate_guidance",
    "plan_batches",
    "rouge_l",
    "run_edge_fleet",
    "run_experiment",
    "score_run",
    "teacher_only_answer",
    "throughput",
    "transmission_time",
    "validate_config",
]
