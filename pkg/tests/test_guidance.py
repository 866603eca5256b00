from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FlakyBackend, MarkerFailBackend, mock_spec
from gkt.backends import MockBackend
from gkt.domain import (
    GenerationSettings,
    ProjectionMode,
    ProjectionSpec,
    UserRequest,
)
from gkt.errors import BackendError, DomainError
from gkt.guidance import (
    batch_durations,
    build_teacher_prompt,
    generate_guidance,
    plan_batches,
    teacher_only_answer,
)
from gkt.domain import TaskKind


def _requests(n: int) -> list[UserRequest]:
    return [
        UserRequest(request_id=f"r{i:03d}", question=f"what is {i}+{i}?", settings=GenerationSettings())
        for i in range(n)
    ]


def test_plan_batches_fixture():
    plan = plan_batches(_requests(100), 24)
    assert [len(b) for b in plan.batches] == [24, 24, 24, 24, 4]
    assert plan.batches[0][0] == "r000"
    assert plan.batches[4] == ("r096", "r097", "r098", "r099")


@given(n=st.integers(min_value=0, max_value=200), capacity=st.integers(min_value=1, max_value=40))
@settings(max_examples=80, deadline=None)
def test_plan_batches_oracle(n, capacity):
    plan = plan_batches(_requests(n), capacity)
    assert len(plan.batches) == math.ceil(n / capacity)
    flat = [rid for batch in plan.batches for rid in batch]
    assert flat == [f"r{i:03d}" for i in range(n)]  # arrival order preserved
    for batch in plan.batches[:-1]:
        assert len(batch) == capacity
    if plan.batches:
        assert 1 <= len(plan.batches[-1]) <= capacity


def test_plan_batches_rejects_bad_input():
    with pytest.raises(DomainError):
        plan_batches(_requests(5), 0)
    dup = _requests(2) + _requests(1)
    with pytest.raises(DomainError):
        plan_batches(dup, 8)


def test_prompt_assembly_by_mode():
    few = "Q: 1+1?\nA: The answer is 2.\n\n"
    stem = "Q: what is 3+4?\nA:"
    cutoff = ProjectionSpec(mode=ProjectionMode.CUTOFF, guidance_token_budget=10)
    concise = ProjectionSpec(mode=ProjectionMode.CONCISE, guidance_token_budget=10)
    hint = ProjectionSpec(mode=ProjectionMode.HINT, guidance_token_budget=10)
    assert build_teacher_prompt("what is 3+4?", few, cutoff) == few + stem
    assert (
        build_teacher_prompt("what is 3+4?", few, concise)
        == few + "Provide the answer in a brief manner: " + stem
    )
    assert (
        build_teacher_prompt("what is 3+4?", few, hint)
        == few + "Provide a brief hint for the question: " + stem
    )


def test_prompt_instruction_before_exemplars():
    few = "Q: 1+1?\nA: 2.\n\n"
    spec = ProjectionSpec(
        mode=ProjectionMode.HINT,
        guidance_token_budget=10,
        instruction_position="before_exemplars",
    )
    built = build_teacher_prompt("why?", few, spec)
    assert built == "Provide a brief hint for the question: " + few + "Q: why?\nA:"


def test_prompt_custom_instruction_override():
    spec = ProjectionSpec(
        mode=ProjectionMode.CONCISE,
        guidance_token_budget=10,
        instruction_prefix="Keep it short: ",
    )
    assert build_teacher_prompt("q", "", spec) == "Keep it short: Q: q\nA:"


def _projection(m: int) -> ProjectionSpec:
    return ProjectionSpec(mode=ProjectionMode.CUTOFF, guidance_token_budget=m)


def test_guidance_counts_capped_at_budget():
    teacher = MockBackend(mock_spec(seed=5))
    guidance = generate_guidance(_requests(10), teacher, _projection(8), "", capacity=4)
    assert len(guidance) == 10
    assert [g.request_id for g in guidance] == [f"r{i:03d}" for i in range(10)]
    assert all(g.teacher_token_count == 8 for g in guidance)
    assert {g.batch_index for g in guidance} == {0, 1, 2}


def test_guidance_budget_is_decode_time_prefix():
    # The shorter budget must be a verbatim prefix of the longer one:
    # the cap changes when decoding stops, not what was decoded.
    teacher = MockBackend(mock_spec(seed=5))
    short = generate_guidance(_requests(6), teacher, _projection(5), "", capacity=3)
    long = generate_guidance(_requests(6), teacher, _projection(20), "", capacity=3)
    for s, l in zip(short, long):
        assert l.text.startswith(s.text)
        assert s.teacher_token_count == 5
        assert l.teacher_token_count == 20


def test_guidance_batching_is_transparent():
    # Same outputs whatever the capacity; only batch bookkeeping moves.
    teacher = MockBackend(mock_spec(seed=9))
    one = generate_guidance(_requests(12), teacher, _projection(6), "", capacity=1)
    many = generate_guidance(_requests(12), teacher, _projection(6), "", capacity=5)
    assert [g.text for g in one] == [g.text for g in many]
    assert [g.batch_index for g in many] == [0] * 5 + [1] * 5 + [2] * 2


def test_guidance_simulated_time_apportionment():
    teacher = MockBackend(
        mock_spec(seed=5, per_token_latency_s=0.01, per_call_overhead_s=0.2)
    )
    guidance = generate_guidance(_requests(4), teacher, _projection(20), "", capacity=4)
    # one batch: duration 0.2 + 0.01 * 20 = 0.4, shared four ways
    for g in guidance:
        assert g.generation_time == pytest.approx(0.1)
    assert batch_durations(guidance) == {0: pytest.approx(0.4)}


def test_guidance_failure_carries_batch_index():
    teacher = FlakyBackend(failures=1, seed=5)
    with pytest.raises(BackendError) as exc_info:
        generate_guidance(_requests(4), teacher, _projection(4), "", capacity=4)
    assert exc_info.value.batch_index == 0

    marked = MarkerFailBackend("3+3", seed=5)
    with pytest.raises(BackendError) as exc_info:
        generate_guidance(_requests(4), marked, _projection(4), "", capacity=2)
    assert exc_info.value.batch_index == 1


def test_guidance_scripted_teacher_answer():
    scripted = {"what is 3+3?": " Three plus three makes six. The answer is 6."}
    teacher = MockBackend(mock_spec(seed=5, scripted=scripted))
    req = [UserRequest(request_id="only", question="what is 3+3?", settings=GenerationSettings())]
    guidance = generate_guidance(req, teacher, _projection(64), "", capacity=1)
    assert teacher_only_answer(guidance[0], TaskKind.NUMERIC) == "6"
    # budget 3 covers "Three" (2 chunks) + "plus" (1 chunk)
    truncated = generate_guidance(req, teacher, _projection(3), "", capacity=1)
    assert truncated[0].text == " Three plus"
    assert teacher_only_answer(truncated[0], TaskKind.NUMERIC) is None


@given(capacity=st.integers(min_value=1, max_value=13))
@settings(max_examples=20, deadline=None)
def test_guidance_total_time_sums_batches(capacity):
    teacher = MockBackend(
        mock_spec(seed=2, per_token_latency_s=0.001, per_call_overhead_s=0.05)
    )
    guidance = generate_guidance(_requests(13), teacher, _projection(7), "", capacity=capacity)
    n_batches = math.ceil(13 / capacity)
    expected_total = n_batches * (0.05 + 0.001 * 7)
    assert sum(g.generation_time for g in guidance) == pytest.approx(expected_total)
