from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkt.config import config_from_dict, config_to_dict, load_config, save_config
from gkt.domain import (
    BackendKind,
    BackendSpec,
    CostReference,
    ExperimentConfig,
    GenerationSettings,
    ProjectionMode,
    ProjectionSpec,
    RunMode,
    TaskKind,
    default_batch_size,
    validate_config,
)
from gkt.errors import ConfigInvalid
from gkt.link import LinkModel


def _config(**overrides) -> ExperimentConfig:
    base = dict(
        teacher_backend=BackendSpec(
            name="mock-teacher", kind=BackendKind.MOCK, vocabulary_size=32000, seed=1
        ),
        student_backend=BackendSpec(
            name="mock-student", kind=BackendKind.MOCK, vocabulary_size=32000, seed=2
        ),
        projection=ProjectionSpec(mode=ProjectionMode.CUTOFF, guidance_token_budget=40),
        dataset_path="data.jsonl",
        report_path="report.json",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_clean_config_has_no_violations():
    assert validate_config(_config()) == []


def test_violations_name_their_fields():
    bad = _config(
        projection=ProjectionSpec(mode=ProjectionMode.HINT, guidance_token_budget=0),
        student_settings_default=GenerationSettings(top_p=1.5),
        edge_parallelism=0,
    )
    fields = {v.field for v in validate_config(bad)}
    assert "projection.guidance_token_budget" in fields
    assert "student_settings_default.top_p" in fields
    assert "edge_parallelism" in fields


def test_mock_backend_requires_seed_via_validation():
    bad = _config(
        teacher_backend=BackendSpec(
            name="mock-teacher", kind=BackendKind.MOCK, vocabulary_size=32000
        )
    )
    fields = {v.field for v in validate_config(bad)}
    assert "teacher_backend.seed" in fields


def test_remote_backend_requires_endpoint_and_model():
    bad = _config(
        teacher_backend=BackendSpec(
            name="cloud", kind=BackendKind.REMOTE, vocabulary_size=50257
        )
    )
    fields = {v.field for v in validate_config(bad)}
    assert {"teacher_backend.endpoint", "teacher_backend.model_id"} <= fields


def test_vocabulary_size_defaults_for_llama_names_only():
    llama = BackendSpec(name="Llama2-13B", kind=BackendKind.MOCK, seed=1)
    assert llama.vocabulary_size == 32000
    other = BackendSpec(name="gpt-ish", kind=BackendKind.MOCK, seed=1)
    assert other.vocabulary_size is None
    bad = _config(teacher_backend=other)
    fields = {v.field for v in validate_config(bad)}
    assert "teacher_backend.vocabulary_size" in fields


@pytest.mark.parametrize(
    "name,expected",
    [
        ("llama2-70b", 10),
        ("Llama2-13B-chat", 24),
        ("llama2-7b", 32),
        ("bloom-176b", 32),
        ("mystery-model", 24),
    ],
)
def test_default_batch_size_by_model_class(name, expected):
    assert default_batch_size(name) == expected


def test_effective_batch_size_prefers_explicit_value():
    cfg = _config(teacher_batch_size=6)
    assert cfg.effective_batch_size == 6
    named = _config(
        teacher_backend=BackendSpec(
            name="llama2-70b", kind=BackendKind.MOCK, seed=1
        )
    )
    assert named.effective_batch_size == 10


def test_round_trip_through_dict():
    cfg = _config(
        projection=ProjectionSpec(mode=ProjectionMode.HINT, guidance_token_budget=20),
        task=TaskKind.MULTIPLE_CHOICE,
        run_mode=RunMode.STUDENT_ONLY,
        teacher_batch_size=12,
        link=LinkModel(bandwidth_bits_per_s=5000.0, vocabulary_size=32000),
        cost_reference=CostReference(
            teacher_full_accuracy_pct=56.2, teacher_full_avg_output_tokens=190.5
        ),
        few_shot_style="math",
        few_shot_exemplars=4,
        edge_parallelism=3,
        baseline_report_path="base.json",
    )
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_round_trip_preserves_custom_instruction():
    cfg = _config(
        projection=ProjectionSpec(
            mode=ProjectionMode.CONCISE,
            guidance_token_budget=10,
            instruction_prefix="Short: ",
            instruction_position="before_exemplars",
        )
    )
    back = config_from_dict(config_to_dict(cfg))
    assert back.projection.instruction_prefix == "Short: "
    assert back == cfg


@given(
    budget=st.integers(min_value=1, max_value=400),
    mode=st.sampled_from(list(ProjectionMode)),
    temp=st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
    batch=st.one_of(st.none(), st.integers(min_value=1, max_value=64)),
    seed=st.one_of(st.none(), st.integers(min_value=0, max_value=10_000)),
)
@settings(max_examples=60, deadline=None)
def test_round_trip_property(budget, mode, temp, batch, seed):
    cfg = _config(
        projection=ProjectionSpec(mode=mode, guidance_token_budget=budget),
        student_settings_default=GenerationSettings(temperature=temp, seed=seed),
        teacher_batch_size=batch,
    )
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_unknown_top_level_field_rejected():
    data = config_to_dict(_config())
    data["surprise"] = 1
    with pytest.raises(ConfigInvalid) as exc_info:
        config_from_dict(data)
    assert any(v.field == "config.surprise" for v in exc_info.value.violations)


def test_unknown_nested_field_rejected():
    data = config_to_dict(_config())
    data["projection"]["extra_knob"] = True
    with pytest.raises(ConfigInvalid) as exc_info:
        config_from_dict(data)
    assert any(v.field == "projection.extra_knob" for v in exc_info.value.violations)


def test_bad_enum_value_lists_choices():
    data = config_to_dict(_config())
    data["projection"]["mode"] = "summarize"
    with pytest.raises(ConfigInvalid) as exc_info:
        config_from_dict(data)
    violation = exc_info.value.violations[0]
    assert violation.field == "projection.mode"
    assert "cutoff" in violation.message and "hint" in violation.message


def test_load_and_save_yaml(tmp_path):
    cfg = _config(link=LinkModel(bandwidth_bits_per_s=5000.0, vocabulary_size=32000))
    path = tmp_path / "run.yaml"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_load_rejects_missing_empty_and_malformed(tmp_path):
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "absent.yaml")
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ConfigInvalid):
        load_config(empty)
    bad = tmp_path / "bad.yaml"
    bad.write_text("teacher_backend: [unclosed\n")
    with pytest.raises(ConfigInvalid):
        load_config(bad)


def test_json_is_accepted_as_config_text(tmp_path):
    # JSON is a YAML subset; a JSON-formatted file must load identically.
    import json

    cfg = _config()
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config_to_dict(cfg)))
    assert load_config(path) == cfg


def test_link_violations_surface_as_config_errors():
    data = config_to_dict(_config())
    data["link"] = {"bandwidth_bits_per_s": 5000.0, "vocabulary_size": 1}
    with pytest.raises(ConfigInvalid) as exc_info:
        config_from_dict(data)
    assert exc_info.value.violations[0].field == "link"
