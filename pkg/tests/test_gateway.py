from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from hdflow.gateway import (
    AuthMissing,
    BackendError,
    BackendUnavailable,
    ChatMessage,
    CompletionRequest,
    CompletionResult,
    HttpBackend,
    InvalidRequest,
    NoScriptMatch,
    RetryPolicy,
    ScriptEntry,
    ScriptedBackend,
    TokenUsage,
    TransientBackendError,
    accumulate,
    complete,
    contains_all,
    estimate_usage,
    make_scripted_backend,
    sum_usage,
)


def request(content="hello", **kwargs):
    return CompletionRequest("test-model", (ChatMessage("user", content),), **kwargs)


class TestTokenUsage:
    def test_identity(self):
        assert accumulate(TokenUsage(0, 0, 0), TokenUsage(5, 7, 12)) == TokenUsage(5, 7, 12)

    def test_componentwise(self):
        assert accumulate(TokenUsage(3, 4, 7), TokenUsage(1, 2, 3)) == TokenUsage(4, 6, 10)

    def test_fold_matches_closed_form(self):
        total = sum_usage(TokenUsage(10, 20, 30) for _ in range(10))
        assert total == TokenUsage(100, 200, 300)

    def test_total_computed_when_omitted(self):
        assert TokenUsage(3, 4).total == 7

    def test_inconsistent_total_rejected(self):
        with pytest.raises(ValueError):
            TokenUsage(3, 4, 99)

    @given(st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)), max_size=30))
    def test_aggregate_equals_componentwise_sum(self, counts):
        usages = [TokenUsage(p, c) for p, c in counts]
        total = sum_usage(usages)
        assert total.prompt == sum(p for p, _ in counts)
        assert total.completion == sum(c for _, c in counts)
        assert total.total == total.prompt + total.completion

    @given(
        st.tuples(st.integers(0, 100), st.integers(0, 100)),
        st.tuples(st.integers(0, 100), st.integers(0, 100)),
        st.tuples(st.integers(0, 100), st.integers(0, 100)),
    )
    def test_accumulate_associative_commutative(self, a, b, c):
        ua, ub, uc = TokenUsage(*a), TokenUsage(*b), TokenUsage(*c)
        assert accumulate(ua, ub) == accumulate(ub, ua)
        assert accumulate(accumulate(ua, ub), uc) == accumulate(ua, accumulate(ub, uc))

    def test_estimate_flags_itself(self):
        usage = estimate_usage("x" * 8, "y" * 5)
        assert (usage.prompt, usage.completion, usage.estimated) == (2, 2, True)


class TestScriptedBackend:
    def test_single_match(self):
        backend = make_scripted_backend([("Problem Reflection", "R1")])
        result = complete(request("please do the Problem Reflection now"), backend)
        assert result.text == "R1"

    def test_reply_ok_with_consistent_usage(self):
        backend = make_scripted_backend([(lambda _: True, "OK")])
        result = complete(request(), backend)
        assert result.text == "OK"
        assert result.usage.total == result.usage.prompt + result.usage.completion

    def test_sequenced_one_shot_entries(self):
        backend = make_scripted_backend(
            [ScriptEntry(lambda _: True, "first", once=True), ScriptEntry(lambda _: True, "second")]
        )
        assert complete(request(), backend).text == "first"
        assert complete(request(), backend).text == "second"
        assert complete(request(), backend).text == "second"

    def test_no_match_raises(self):
        backend = make_scripted_backend([("nope", "X")])
        with pytest.raises(NoScriptMatch):
            complete(request("unrelated"), backend)

    def test_empty_script_rejected(self):
        with pytest.raises(ValueError):
            make_scripted_backend([])

    def test_deterministic_across_instances(self):
        script = [("a", "A"), ("b", "B")]
        prompts = ["a then b", "b alone", "a again"]
        replies = []
        for _ in range(2):
            backend = make_scripted_backend(list(script))
            replies.append([complete(request(p), backend).text for p in prompts])
        assert replies[0] == replies[1]

    def test_matches_final_user_message_only(self):
        backend = make_scripted_backend([("needle", "hit"), (lambda _: True, "miss")])
        req = CompletionRequest(
            "m",
            (
                ChatMessage("user", "needle in the haystack"),
                ChatMessage("assistant", "reply"),
                ChatMessage("user", "nothing here"),
            ),
        )
        assert backend.send(req).text == "miss"

    def test_contains_all(self):
        matcher = contains_all("alpha", "beta")
        assert matcher("beta then alpha")
        assert not matcher("alpha only")


class FlakyBackend:
    """Fails with transient errors a fixed number of times, then succeeds."""

    backend_id = "flaky"

    def __init__(self, failures: int, fatal: Exception | None = None):
        self.failures = failures
        self.fatal = fatal
        self.attempts = 0

    def send(self, req):
        self.attempts += 1
        if self.fatal is not None:
            raise self.fatal
        if self.attempts <= self.failures:
            raise TransientBackendError("flaky")
        return CompletionResult("done", TokenUsage(1, 1), 0, self.backend_id)


class TestComplete:
    def test_empty_messages_invalid(self):
        backend = make_scripted_backend([(lambda _: True, "OK")])
        with pytest.raises(InvalidRequest):
            complete(CompletionRequest("m", ()), backend)

    def test_empty_user_content_invalid(self):
        backend = make_scripted_backend([(lambda _: True, "OK")])
        with pytest.raises(InvalidRequest):
            complete(request(""), backend)

    def test_temperature_range_enforced(self):
        backend = make_scripted_backend([(lambda _: True, "OK")])
        with pytest.raises(InvalidRequest):
            complete(request(temperature=2.5), backend)

    def test_two_failures_then_success_within_three_attempts(self):
        backend = FlakyBackend(failures=2)
        result = complete(request(), backend, RetryPolicy(3, ()), sleep=lambda _: None)
        assert result.text == "done"
        assert backend.attempts == 3

    def test_retries_exhausted(self):
        backend = FlakyBackend(failures=5)
        with pytest.raises(BackendUnavailable):
            complete(request(), backend, RetryPolicy(3, ()), sleep=lambda _: None)
        assert backend.attempts == 3

    def test_non_transient_error_not_retried(self):
        backend = FlakyBackend(failures=0, fatal=AuthMissing("no key"))
        with pytest.raises(AuthMissing):
            complete(request(), backend, RetryPolicy(3, ()), sleep=lambda _: None)
        assert backend.attempts == 1

    def test_backoff_schedule(self):
        delays = []
        backend = FlakyBackend(failures=2)
        complete(request(), backend, RetryPolicy(3, (0.5, 1.0, 2.0)), sleep=delays.append)
        assert delays == [0.5, 1.0]


class FakeResponse:
    def __init__(self, status_code=200, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        if self._payload is None:
            raise ValueError("not json")
        return self._payload


class FakeSession:
    def __init__(self, response):
        self.response = response
        self.requests = []

    def post(self, url, **kwargs):
        self.requests.append((url, kwargs))
        if isinstance(self.response, Exception):
            raise self.response
        return self.response


class TestHttpBackend:
    def test_auth_missing(self, monkeypatch):
        monkeypatch.delenv("HDFLOW_API_KEY", raising=False)
        backend = HttpBackend("https://api.example.com/v1", session=FakeSession(FakeResponse()))
        with pytest.raises(AuthMissing):
            backend.send(request())

    def test_reported_usage_used(self, monkeypatch):
        monkeypatch.setenv("HDFLOW_API_KEY", "k")
        payload = {
            "choices": [{"message": {"content": "hi"}}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 5, "total_tokens": 16},
        }
        backend = HttpBackend("https://api.example.com/v1", session=FakeSession(FakeResponse(payload=payload)))
        result = backend.send(request())
        assert result.text == "hi"
        assert result.usage == TokenUsage(11, 5)
        assert not result.usage.estimated

    def test_missing_usage_estimated(self, monkeypatch):
        monkeypatch.setenv("HDFLOW_API_KEY", "k")
        payload = {"choices": [{"message": {"content": "hi"}}]}
        backend = HttpBackend("https://api.example.com/v1", session=FakeSession(FakeResponse(payload=payload)))
        assert backend.send(request()).usage.estimated

    def test_5xx_transient_4xx_fatal(self, monkeypatch):
        monkeypatch.setenv("HDFLOW_API_KEY", "k")
        backend = HttpBackend("https://x", session=FakeSession(FakeResponse(status_code=503)))
        with pytest.raises(TransientBackendError):
            backend.send(request())
        backend = HttpBackend("https://x", session=FakeSession(FakeResponse(status_code=400)))
        with pytest.raises(BackendError):
            backend.send(request())
