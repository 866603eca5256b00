from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import mock_spec
from gkt.backends import MockBackend, RemoteBackend, build_backend
from gkt.domain import BackendKind, BackendSpec, FinishReason, GenerationSettings
from gkt.errors import ContextOverflow, RemoteRejected, RemoteUnavailable


def test_mock_same_inputs_same_output():
    a = MockBackend(mock_spec(seed=7))
    b = MockBackend(mock_spec(seed=7))
    s = GenerationSettings(max_new_tokens=5)
    out1 = a.generate("Q: compute.\nA:", s)
    out2 = b.generate("Q: compute.\nA:", s)
    assert out1 == out2
    assert out1.token_count == 5
    assert out1.finish_reason is FinishReason.LENGTH


@given(
    prompt=st.text(min_size=0, max_size=80),
    seed=st.integers(min_value=0, max_value=2**31),
    m=st.integers(min_value=1, max_value=40),
)
@settings(max_examples=60, deadline=None)
def test_mock_pure_function_of_prompt_seed_budget(prompt, seed, m):
    backend = MockBackend(mock_spec(seed=0))
    s = GenerationSettings(max_new_tokens=m, seed=seed)
    first = backend.generate(prompt, s)
    second = MockBackend(mock_spec(seed=0)).generate(prompt, s)
    assert first == second
    assert first.token_count == m


@given(
    m1=st.integers(min_value=1, max_value=30),
    m2=st.integers(min_value=1, max_value=30),
)
@settings(max_examples=40, deadline=None)
def test_mock_shorter_budget_is_prefix_of_longer(m1, m2):
    lo, hi = sorted((m1, m2))
    backend = MockBackend(mock_spec(seed=13))
    short = backend.generate("prompt", GenerationSettings(max_new_tokens=lo))
    long = backend.generate("prompt", GenerationSettings(max_new_tokens=hi))
    assert long.text.startswith(short.text)


def test_mock_budget_of_one_emits_one_token():
    backend = MockBackend(mock_spec(seed=3))
    out = backend.generate("anything", GenerationSettings(max_new_tokens=1))
    assert out.token_count == 1
    assert out.finish_reason is FinishReason.LENGTH


def test_mock_seed_changes_output():
    s = GenerationSettings(max_new_tokens=12)
    a = MockBackend(mock_spec(seed=1)).generate("prompt", s)
    b = MockBackend(mock_spec(seed=2)).generate("prompt", s)
    assert a.text != b.text


def test_mock_settings_seed_overrides_backend_seed():
    backend = MockBackend(mock_spec(seed=1))
    other = MockBackend(mock_spec(seed=2))
    s = GenerationSettings(max_new_tokens=8, seed=99)
    assert backend.generate("p", s) == other.generate("p", s)


def test_mock_scripted_table_wins_and_respects_budget():
    scripted = {"известно": " never used", "magic question": " The answer is (b)."}
    backend = MockBackend(mock_spec(seed=5, scripted=scripted))
    full = backend.generate(
        "Q: magic question\nA:", GenerationSettings(max_new_tokens=50)
    )
    assert full.text == " The answer is (b)."
    assert full.finish_reason is FinishReason.STOP
    cut = backend.generate("Q: magic question\nA:", GenerationSettings(max_new_tokens=3))
    assert cut.text == " The answer"
    assert cut.token_count == 3
    assert cut.finish_reason is FinishReason.LENGTH
    assert full.text.startswith(cut.text)


def test_mock_batch_equals_per_prompt_calls():
    backend = MockBackend(mock_spec(seed=11))
    prompts = [f"prompt {i}" for i in range(7)]
    s = GenerationSettings(max_new_tokens=6)
    batch = backend.generate_batch(prompts, s)
    singles = [backend.generate(p, s) for p in prompts]
    assert batch == singles


def test_mock_simulated_latency_is_deterministic():
    backend = MockBackend(mock_spec(seed=7, per_token_latency_s=0.01, per_call_overhead_s=0.5))
    out = backend.generate("p", GenerationSettings(max_new_tokens=10))
    assert out.latency_s == pytest.approx(0.5 + 0.1)
    outs = backend.generate_batch(["a", "bb"], GenerationSettings(max_new_tokens=10))
    assert backend.batch_duration(outs) == pytest.approx(0.5 + 0.1)


def test_mock_context_overflow():
    backend = MockBackend(mock_spec(seed=7, max_context_tokens=3))
    with pytest.raises(ContextOverflow):
        backend.generate("one two three four", GenerationSettings(max_new_tokens=4))


def test_mock_requires_seed():
    with pytest.raises(ValueError):
        MockBackend(BackendSpec(name="m", kind=BackendKind.MOCK, vocabulary_size=100))


def test_build_backend_dispatches_on_kind():
    assert isinstance(build_backend(mock_spec()), MockBackend)
    remote = build_backend(
        BackendSpec(
            name="llama2-13b",
            kind=BackendKind.REMOTE,
            endpoint="http://localhost:1",
            model_id="llama2-13b",
        )
    )
    assert isinstance(remote, RemoteBackend)
    assert remote.vocabulary_size == 32000  # llama-class default
    remote.close()


def _remote(stub, **kw) -> RemoteBackend:
    kw.setdefault("retry_backoff_s", 0.01)
    spec = BackendSpec(
        name="remote-under-test",
        kind=BackendKind.REMOTE,
        vocabulary_size=32000,
        endpoint=stub.endpoint,
        model_id="test-model",
        **kw,
    )
    return RemoteBackend(spec)


def test_remote_happy_path(completions_stub, monkeypatch):
    monkeypatch.setenv("GKT_API_TOKEN", "sekret")
    backend = _remote(completions_stub)
    out = backend.generate(
        "Q: 2+4?\nA:", GenerationSettings(temperature=0.8, top_p=0.9, max_new_tokens=32)
    )
    backend.close()
    assert out.text == " The answer is 6."
    assert out.token_count == 5  # from usage metadata
    assert out.finish_reason is FinishReason.STOP
    req = completions_stub.requests[0]
    assert req["path"] == "/v1/completions"
    assert req["body"] == {
        "model": "test-model",
        "prompt": "Q: 2+4?\nA:",
        "max_tokens": 32,
        "temperature": 0.8,
        "top_p": 0.9,
    }
    headers = {k.lower(): v for k, v in req["headers"].items()}
    assert headers.get("authorization") == "Bearer sekret"


def test_remote_counts_locally_without_usage(completions_stub):
    completions_stub.script = [(200, {"choices": [{"text": " ab cd efgh", "finish_reason": "length"}]})]
    backend = _remote(completions_stub)
    out = backend.generate("p", GenerationSettings(max_new_tokens=8))
    backend.close()
    assert out.token_count == 3
    assert out.finish_reason is FinishReason.LENGTH


def test_remote_retries_transient_errors(completions_stub):
    ok = {
        "choices": [{"text": " fine", "finish_reason": "stop"}],
        "usage": {"completion_tokens": 1},
    }
    completions_stub.script = [(500, {"error": "boom"}), (503, {"error": "boom"}), (200, ok)]
    backend = _remote(completions_stub)
    out = backend.generate("p", GenerationSettings(max_new_tokens=4))
    backend.close()
    assert out.text == " fine"
    assert len(completions_stub.requests) == 3


def test_remote_gives_up_after_three_attempts(completions_stub):
    completions_stub.script = [(500, {"error": "boom"})]
    backend = _remote(completions_stub)
    with pytest.raises(RemoteUnavailable):
        backend.generate("p", GenerationSettings(max_new_tokens=4))
    backend.close()
    assert len(completions_stub.requests) == 3


def test_remote_rejection_is_not_retried(completions_stub):
    completions_stub.script = [(400, {"error": "bad request"})]
    backend = _remote(completions_stub)
    with pytest.raises(RemoteRejected):
        backend.generate("p", GenerationSettings(max_new_tokens=4))
    backend.close()
    assert len(completions_stub.requests) == 1


def test_remote_connection_failure_raises_unavailable():
    spec = BackendSpec(
        name="nowhere",
        kind=BackendKind.REMOTE,
        vocabulary_size=32000,
        endpoint="http://127.0.0.1:9",
        model_id="m",
        retry_backoff_s=0.01,
        request_timeout_s=0.3,
    )
    backend = RemoteBackend(spec)
    with pytest.raises(RemoteUnavailable):
        backend.generate("p", GenerationSettings(max_new_tokens=4))
    backend.close()


def test_remote_context_overflow_is_client_side(completions_stub):
    backend = _remote(completions_stub, max_context_tokens=2)
    with pytest.raises(ContextOverflow):
        backend.generate("far too many words here", GenerationSettings(max_new_tokens=4))
    backend.close()
    assert completions_stub.requests == []
