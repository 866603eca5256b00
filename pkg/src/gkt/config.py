"""Config file handling.

Files are nested key/value text (YAML; JSON parses as a YAML subset).
configs/schema.md documents every key. Parsing is strict about enum
values and field names; numeric range checks live in validate_config
so all range violations can be reported together.
"""
from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Any

import yaml

from .domain import (
    BackendKind,
    BackendSpec,
    ConfigViolation,
    CostReference,
    ExperimentConfig,
    GenerationSettings,
    ProjectionMode,
    ProjectionSpec,
    RunMode,
    TaskKind,
    TokenizerSpec,
)
from .errors import ConfigInvalid, DomainError
from .link import LinkModel


def _require_mapping(obj: Any, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigInvalid([ConfigViolation(path, "must be a mapping")])
    return obj


def _known_fields(obj: dict, cls: type, path: str) -> None:
    allowed = {f.name for f in fields(cls)}
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigInvalid(
            [ConfigViolation(f"{path}.{k}", "unknown field") for k in sorted(unknown)]
        )


def _enum(value: Any, enum_cls, path: str):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigInvalid([ConfigViolation(path, f"must be one of: {choices}")]) from None


def _settings_from(obj: dict, path: str) -> GenerationSettings:
    _known_fields(obj, GenerationSettings, path)
    return GenerationSettings(**obj)


def _tokenizer_from(obj: dict, path: str) -> TokenizerSpec:
    _known_fields(obj, TokenizerSpec, path)
    return TokenizerSpec(**obj)


def _backend_from(obj: dict, path: str) -> BackendSpec:
    obj = dict(_require_mapping(obj, path))
    _known_fields(obj, BackendSpec, path)
    if "kind" in obj:
        obj["kind"] = _enum(obj["kind"], BackendKind, f"{path}.kind")
    if "tokenizer" in obj:
        obj["tokenizer"] = _tokenizer_from(
            _require_mapping(obj["tokenizer"], f"{path}.tokenizer"), f"{path}.tokenizer"
        )
    try:
        return BackendSpec(**obj)
    except TypeError as exc:
        raise ConfigInvalid([ConfigViolation(path, str(exc))]) from exc


def _projection_from(obj: dict, path: str) -> ProjectionSpec:
    obj = dict(_require_mapping(obj, path))
    _known_fields(obj, ProjectionSpec, path)
    if "mode" in obj:
        obj["mode"] = _enum(obj["mode"], ProjectionMode, f"{path}.mode")
    try:
        return ProjectionSpec(**obj)
    except TypeError as exc:
        raise ConfigInvalid([ConfigViolation(path, str(exc))]) from exc


def _link_from(obj: dict, path: str) -> LinkModel:
    obj = dict(_require_mapping(obj, path))
    _known_fields(obj, LinkModel, path)
    try:
        return LinkModel(**obj)
    except (TypeError, DomainError) as exc:
        raise ConfigInvalid([ConfigViolation(path, str(exc))]) from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(_require_mapping(data, "config"))
    _known_fields(data, ExperimentConfig, "config")
    for key in ("teacher_backend", "student_backend"):
        if key in data:
            data[key] = _backend_from(data[key], key)
    if "projection" in data:
        data["projection"] = _projection_from(data["projection"], "projection")
    if "student_settings_default" in data:
        data["student_settings_default"] = _settings_from(
            _require_mapping(data["student_settings_default"], "student_settings_default"),
            "student_settings_default",
        )
    if "task" in data:
        data["task"] = _enum(data["task"], TaskKind, "task")
    if "run_mode" in data:
        data["run_mode"] = _enum(data["run_mode"], RunMode, "run_mode")
    if data.get("link") is not None:
        data["link"] = _link_from(data["link"], "link")
    if data.get("cost_reference") is not None:
        ref = _require_mapping(data["cost_reference"], "cost_reference")
        _known_fields(ref, CostReference, "cost_reference")
        data["cost_reference"] = CostReference(**ref)
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigInvalid([ConfigViolation("config", str(exc))]) from exc


def config_to_dict(config: ExperimentConfig) -> dict:
    def backend(spec: BackendSpec) -> dict:
        out: dict[str, Any] = {"name": spec.name, "kind": spec.kind.value}
        defaults = BackendSpec(name=spec.name, kind=spec.kind)
        for f in fields(BackendSpec):
            if f.name in ("name", "kind", "tokenizer"):
                continue
            value = getattr(spec, f.name)
            if value != getattr(defaults, f.name):
                out[f.name] = value
        if spec.tokenizer != TokenizerSpec():
            out["tokenizer"] = {
                "scheme": spec.tokenizer.scheme,
                "url": spec.tokenizer.url,
                "timeout_s": spec.tokenizer.timeout_s,
            }
        return out

    out: dict[str, Any] = {
        "teacher_backend": backend(config.teacher_backend),
        "student_backend": backend(config.student_backend),
        "projection": {
            "mode": config.projection.mode.value,
            "guidance_token_budget": config.projection.guidance_token_budget,
            "instruction_prefix": config.projection.instruction_prefix,
            "instruction_position": config.projection.instruction_position,
        },
        "dataset_path": config.dataset_path,
        "report_path": config.report_path,
        "task": config.task.value,
        "run_mode": config.run_mode.value,
        "teacher_batch_size": config.teacher_batch_size,
        "student_settings_default": {
            "temperature": config.student_settings_default.temperature,
            "top_p": config.student_settings_default.top_p,
            "max_new_tokens": config.student_settings_default.max_new_tokens,
            "seed": config.student_settings_default.seed,
        },
        "few_shot_prompt": config.few_shot_prompt,
        "few_shot_style": config.few_shot_style,
        "few_shot_exemplars": config.few_shot_exemplars,
        "link": None,
        "edge_parallelism": config.edge_parallelism,
        "student_sees_instruction": config.student_sees_instruction,
        "baseline_report_path": config.baseline_report_path,
        "cost_reference": None,
        "service_linger_s": config.service_linger_s,
    }
    if config.link is not None:
        out["link"] = {
            "bandwidth_bits_per_s": config.link.bandwidth_bits_per_s,
            "vocabulary_size": config.link.vocabulary_size,
            "overhead_bits_per_token": config.link.overhead_bits_per_token,
        }
    if config.cost_reference is not None:
        out["cost_reference"] = {
            "teacher_full_accuracy_pct": config.cost_reference.teacher_full_accuracy_pct,
            "teacher_full_avg_output_tokens": config.cost_reference.teacher_full_avg_output_tokens,
        }
    return out


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid([ConfigViolation("config", f"cannot read {path}: {exc}")]) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigInvalid([ConfigViolation("config", f"parse error: {exc}")]) from exc
    if data is None:
        raise ConfigInvalid([ConfigViolation("config", "file is empty")])
    return config_from_dict(data)


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(
        yaml.safe_dump(config_to_dict(config), sort_keys=False, allow_unicode=True),
        encoding="utf-8",
    )
