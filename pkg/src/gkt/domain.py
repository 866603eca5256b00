"""Shared vocabulary for the guided-completion pipeline.

A large cloud model writes a short guidance prefix for each question;
a small edge model continues it under per-user generation settings.
These types carry requests, guidance, and completions between stages,
and ExperimentConfig binds a whole run together.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .link import LinkModel


class ProjectionMode(enum.Enum):
    """How the teacher's answer is projected into a short prefix."""

    CUTOFF = "cutoff"
    CONCISE = "concise"
    HINT = "hint"


class TaskKind(enum.Enum):
    NUMERIC = "numeric"
    MULTIPLE_CHOICE = "choice"


class FinishReason(enum.Enum):
    STOP = "stop"
    LENGTH = "length"


class BackendKind(enum.Enum):
    MOCK = "mock"
    REMOTE = "remote"


class RunMode(enum.Enum):
    GUIDED = "guided"
    STUDENT_ONLY = "student-only"
    TEACHER_ONLY = "teacher-only"


# Instruction text prepended ahead of the question for each mode.
CANONICAL_INSTRUCTION_PREFIX: dict[ProjectionMode, str] = {
    ProjectionMode.CUTOFF: "",
    ProjectionMode.CONCISE: "Provide the answer in a brief manner: ",
    ProjectionMode.HINT: "Provide a brief hint for the question: ",
}

INSTRUCTION_POSITIONS = ("after_exemplars", "before_exemplars")


@dataclass(frozen=True, slots=True)
class GenerationSettings:
    temperature: float = 0.8
    top_p: float = 0.9
    max_new_tokens: int = 1024
    seed: int | None = None


@dataclass(frozen=True, slots=True)
class UserRequest:
    request_id: str
    question: str
    settings: GenerationSettings = GenerationSettings()
    arrival_time: float = 0.0


@dataclass(frozen=True)
class ProjectionSpec:
    mode: ProjectionMode
    guidance_token_budget: int
    # None means "use the mode's canonical string"; resolved at init so
    # the field always holds the effective prefix afterwards.
    instruction_prefix: str | None = None
    instruction_position: str = "after_exemplars"

    def __post_init__(self) -> None:
        if self.instruction_prefix is None:
            object.__setattr__(
                self, "instruction_prefix", CANONICAL_INSTRUCTION_PREFIX[self.mode]
            )


@dataclass(frozen=True, slots=True)
class GuidancePrompt:
    request_id: str
    text: str
    teacher_token_count: int
    generation_time: float
    batch_index: int


@dataclass(frozen=True, slots=True)
class CompletionResult:
    request_id: str
    guidance: GuidancePrompt
    full_response: str
    student_token_count: int
    student_time: float
    extracted_answer: str | None
    settings_used: GenerationSettings

    @property
    def total_token_count(self) -> int:
        """Guidance plus continuation, for length accounting under either convention."""
        return self.guidance.teacher_token_count + self.student_token_count


@dataclass(frozen=True, slots=True)
class DatasetRecord:
    id: str
    question: str
    gold_answer: str
    gold_rationale: str | None = None


@dataclass(frozen=True, slots=True)
class ConfigViolation:
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


@dataclass(frozen=True, slots=True)
class TokenizerSpec:
    scheme: str = "reference"
    url: str | None = None
    timeout_s: float = 5.0


@dataclass(frozen=True)
class BackendSpec:
    """Config-side description of a generation backend."""

    name: str
    kind: BackendKind
    vocabulary_size: int | None = None
    seed: int | None = None
    tokenizer: TokenizerSpec = TokenizerSpec()
    max_context_tokens: int | None = None
    # Mock-only knobs.
    per_token_latency_s: float = 0.0
    per_call_overhead_s: float = 0.0
    scripted: dict[str, str] | None = None
    # Remote-only knobs.
    endpoint: str | None = None
    model_id: str | None = None
    auth_token_env: str = "GKT_API_TOKEN"
    request_timeout_s: float = 30.0
    max_in_flight: int = 8
    retry_backoff_s: float = 0.5

    def __post_init__(self) -> None:
        if self.vocabulary_size is None and "llama" in self.name.lower():
            object.__setattr__(self, "vocabulary_size", 32000)


def default_batch_size(teacher_name: str) -> int:
    """Teacher batch capacity by model class; 24 when the class is unknown."""
    name = teacher_name.lower()
    if "70b" in name:
        return 10
    if "13b" in name:
        return 24
    if "7b" in name or "bloom" in name:
        return 32
    return 24


@dataclass(frozen=True)
class CostReference:
    """Reported numbers for the teacher answering in full, used for the
    cost/performance section of a report."""

    teacher_full_accuracy_pct: float
    teacher_full_avg_output_tokens: float


@dataclass(frozen=True)
class ExperimentConfig:
    teacher_backend: BackendSpec
    student_backend: BackendSpec
    projection: ProjectionSpec
    dataset_path: str
    report_path: str
    task: TaskKind = TaskKind.NUMERIC
    run_mode: RunMode = RunMode.GUIDED
    teacher_batch_size: int | None = None
    student_settings_default: GenerationSettings = GenerationSettings()
    few_shot_prompt: str = ""
    few_shot_style: str | None = None
    few_shot_exemplars: int | None = None
    link: LinkModel | None = None
    edge_parallelism: int = 1
    student_sees_instruction: bool = False
    baseline_report_path: str | None = None
    cost_reference: CostReference | None = None
    service_linger_s: float = 0.05

    @property
    def effective_batch_size(self) -> int:
        if self.teacher_batch_size is not None:
            return self.teacher_batch_size
        return default_batch_size(self.teacher_backend.name)


def _validate_settings(s: GenerationSettings, path: str, out: list[ConfigViolation]) -> None:
    if s.temperature < 0:
        out.append(ConfigViolation(f"{path}.temperature", "must be >= 0"))
    if not (0 < s.top_p <= 1):
        out.append(ConfigViolation(f"{path}.top_p", "must be in (0, 1]"))
    if s.max_new_tokens < 1:
        out.append(ConfigViolation(f"{path}.max_new_tokens", "must be >= 1"))
    if s.seed is not None and s.seed < 0:
        out.append(ConfigViolation(f"{path}.seed", "must be >= 0"))


def _validate_backend(spec: BackendSpec, path: str, out: list[ConfigViolation]) -> None:
    if not spec.name:
        out.append(ConfigViolation(f"{path}.name", "must be non-empty"))
    if spec.vocabulary_size is None:
        out.append(
            ConfigViolation(
                f"{path}.vocabulary_size",
                "required (only llama-class names get the 32000 default)",
            )
        )
    elif spec.vocabulary_size < 2:
        out.append(ConfigViolation(f"{path}.vocabulary_size", "must be >= 2"))
    if spec.kind is BackendKind.MOCK and spec.seed is None:
        out.append(ConfigViolation(f"{path}.seed", "mock backends require a seed"))
    if spec.kind is BackendKind.REMOTE:
        if not spec.endpoint:
            out.append(ConfigViolation(f"{path}.endpoint", "remote backends require an endpoint"))
        if not spec.model_id:
            out.append(ConfigViolation(f"{path}.model_id", "remote backends require a model_id"))
    if spec.per_token_latency_s < 0:
        out.append(ConfigViolation(f"{path}.per_token_latency_s", "must be >= 0"))
    if spec.per_call_overhead_s < 0:
        out.append(ConfigViolation(f"{path}.per_call_overhead_s", "must be >= 0"))
    if spec.request_timeout_s <= 0:
        out.append(ConfigViolation(f"{path}.request_timeout_s", "must be positive"))
    if spec.max_in_flight < 1:
        out.append(ConfigViolation(f"{path}.max_in_flight", "must be >= 1"))
    if spec.max_context_tokens is not None and spec.max_context_tokens < 1:
        out.append(ConfigViolation(f"{path}.max_context_tokens", "must be >= 1"))
    if spec.tokenizer.scheme not in ("reference", "external"):
        out.append(ConfigViolation(f"{path}.tokenizer.scheme", "must be reference or external"))
    elif spec.tokenizer.scheme == "external" and not spec.tokenizer.url:
        out.append(ConfigViolation(f"{path}.tokenizer.url", "external scheme requires a url"))


def validate_config(config: ExperimentConfig) -> list[ConfigViolation]:
    """Every violation found, each naming the offending field path."""
    out: list[ConfigViolation] = []
    _validate_backend(config.teacher_backend, "teacher_backend", out)
    _validate_backend(config.student_backend, "student_backend", out)
    if config.projection.guidance_token_budget < 1:
        out.append(ConfigViolation("projection.guidance_token_budget", "must be >= 1"))
    if config.projection.instruction_position not in INSTRUCTION_POSITIONS:
        out.append(
            ConfigViolation(
                "projection.instruction_position",
                f"must be one of {INSTRUCTION_POSITIONS}",
            )
        )
    if config.teacher_batch_size is not None and config.teacher_batch_size < 1:
        out.append(ConfigViolation("teacher_batch_size", "must be >= 1"))
    _validate_settings(config.student_settings_default, "student_settings_default", out)
    if not config.dataset_path:
        out.append(ConfigViolation("dataset_path", "must be non-empty"))
    if not config.report_path:
        out.append(ConfigViolation("report_path", "must be non-empty"))
    if config.few_shot_style is not None and config.few_shot_style not in ("math", "commonsense"):
        out.append(ConfigViolation("few_shot_style", "must be math or commonsense"))
    if config.few_shot_exemplars is not None and config.few_shot_exemplars < 0:
        out.append(ConfigViolation("few_shot_exemplars", "must be >= 0"))
    if config.edge_parallelism < 1:
        out.append(ConfigViolation("edge_parallelism", "must be >= 1"))
    if config.service_linger_s < 0:
        out.append(ConfigViolation("service_linger_s", "must be >= 0"))
    if config.cost_reference is not None:
        if config.cost_reference.teacher_full_accuracy_pct <= 0:
            out.append(
                ConfigViolation("cost_reference.teacher_full_accuracy_pct", "must be positive")
            )
        if config.cost_reference.teacher_full_avg_output_tokens <= 0:
            out.append(
                ConfigViolation(
                    "cost_reference.teacher_full_avg_output_tokens", "must be positive"
                )
            )
    return out
