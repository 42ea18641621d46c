import json

import httpx
import pytest

from flexnav.providers import (
    ChatAdapter,
    ProviderBinding,
    ProviderError,
    ReplayBook,
    ReplayMismatchError,
    request_hash,
)

REQ = {"messages": [{"role": "user", "content": "hi"}]}


def _adapter(handler, **kw):
    sleeps = []
    binding = ProviderBinding(endpoint="http://llm.test/v1", model="m", retries=3, backoff=0.5, **kw)
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return ChatAdapter(binding, api_key="k", client=client, sleep=sleeps.append), sleeps


def _ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})


def test_wire_format():
    seen = []

    def handler(req):
        seen.append(req)
        return _ok("hello")
    ad, _ = _adapter(handler)
    assert ad(REQ) == "hello"
    req = seen[0]
    assert str(req.url) == "http://llm.test/v1/chat/completions"
    assert req.headers["authorization"] == "Bearer k"
    body = json.loads(req.content)
    assert body == {"model": "m", "messages": REQ["messages"], "temperature": 0.0}


def test_retries_with_exponential_backoff():
    codes = iter([500, 429, 503])

    def handler(req):
        c = next(codes, None)
        return httpx.Response(c) if c else _ok("fine")
    ad, sleeps = _adapter(handler)
    assert ad(REQ) == "fine"
    assert sleeps == [0.5, 1.0, 2.0]
    assert ad.attempts == 4


def test_retry_budget_exhausted():
    ad, sleeps = _adapter(lambda r: httpx.Response(500))
    with pytest.raises(ProviderError, match="4 attempts"):
        ad(REQ)
    assert len(sleeps) == 3


def test_transport_error_retried():
    calls = []

    def handler(req):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ConnectError("down")
        return _ok("up")
    ad, _ = _adapter(handler)
    assert ad(REQ) == "up"


def test_client_error_not_retried():
    calls = []

    def handler(req):
        calls.append(1)
        return httpx.Response(401)
    ad, _ = _adapter(handler)
    with pytest.raises(ProviderError, match="rejected"):
        ad(REQ)
    assert len(calls) == 1


def test_env_base(monkeypatch):
    monkeypatch.setenv("FLEXNAV_API_BASE", "http://env.test/api/")
    monkeypatch.setenv("FLEXNAV_API_KEY", "secret")
    ad = ChatAdapter(ProviderBinding(), client=httpx.Client(transport=httpx.MockTransport(lambda r: _ok(""))))
    assert ad.url == "http://env.test/api/chat/completions"
    assert ad.api_key == "secret"


def test_needs_messages():
    ad, _ = _adapter(lambda r: _ok(""))
    with pytest.raises(ProviderError):
        ad({"pairs": []})


def test_request_hash_canonical():
    a = {"x": 1, "y": [1, 2]}
    b = {"y": [1, 2], "x": 1}
    assert request_hash("planner", a) == request_hash("planner", b)
    assert request_hash("planner", a) != request_hash("verifier", a)


def test_replay_in_recorded_order():
    h = request_hash("planner", REQ)
    book = ReplayBook([
        {"kind": "call", "role": "planner", "request_hash": h, "response": "one"},
        {"kind": "call", "role": "planner", "request_hash": h, "response": "two"},
        {"kind": "call", "role": "verifier", "request_hash": "zz", "error": "boom"},
        {"kind": "move"},
    ])
    p = book.provider("planner")
    assert [p(REQ), p(REQ)] == ["one", "two"]
    with pytest.raises(ReplayMismatchError):
        p(REQ)
    with pytest.raises(ReplayMismatchError):
        book.provider("planner")({"messages": []})


def test_replay_reraises_recorded_errors():
    book = ReplayBook([{"kind": "call", "role": "verifier", "request_hash": request_hash("verifier", REQ),
                        "error": "boom"}])
    with pytest.raises(ProviderError, match="boom"):
        book.provider("verifier")(REQ)
