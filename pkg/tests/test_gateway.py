"""Gateway tests: scripted queue semantics, cassette record/replay, digest
stability, and HTTP retry policy against a local stub server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from saarthi.gateway import (
    AuthError,
    CacheMissError,
    CassetteBackend,
    ChatRequest,
    ChatResponse,
    ContextOverflowError,
    HttpBackend,
    ProtocolError,
    ScriptExhaustedError,
    ScriptedBackend,
    TransientError,
    canonical_digest,
    complete,
)

# Frozen from the documented canonicalization (whitespace-normalized content,
# fixed field order, sha256). Guards against silent canonicalization drift.
GOLDEN_DIGEST = "8dae5ea9385e628052d0160e349c301a9425a9730cdfc53ee45e3ea60c764283"


def fixture_request(temperature: float = 0.2) -> ChatRequest:
    return ChatRequest.build(
        "gpt-4o",
        [
            ("system", "You are a verification engineer."),
            ("user", "Write a property for  req |-> gnt"),
        ],
        temperature=temperature,
        max_tokens=512,
    )


# ---------------------------------------------------------------------------
# canonical_digest
# ---------------------------------------------------------------------------

def test_identical_requests_same_digest():
    assert canonical_digest(fixture_request()) == canonical_digest(fixture_request())


def test_whitespace_normalization_in_digest():
    a = ChatRequest.build("m", [("user", "hello   world\n")])
    b = ChatRequest.build("m", [("user", "hello world")])
    assert canonical_digest(a) == canonical_digest(b)


def test_temperature_changes_digest():
    assert canonical_digest(fixture_request(0.2)) != canonical_digest(fixture_request(0.7))


def test_message_changes_digest():
    a = ChatRequest.build("m", [("user", "one")])
    b = ChatRequest.build("m", [("user", "two")])
    assert canonical_digest(a) != canonical_digest(b)


def test_golden_digest_frozen():
    assert canonical_digest(fixture_request()) == GOLDEN_DIGEST


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest.build("m", [])
    with pytest.raises(ValueError):
        ChatRequest.build("m", [("assistant", "hi")])


# ---------------------------------------------------------------------------
# Scripted backend
# ---------------------------------------------------------------------------

def test_scripted_queue_order():
    backend = ScriptedBackend(["A", "B"])
    assert complete(backend, fixture_request()).content == "A"
    assert complete(backend, fixture_request()).content == "B"
    with pytest.raises(ScriptExhaustedError):
        complete(backend, fixture_request())


def test_scripted_deterministic_sequence():
    replies = ["x", "y", "z"]
    runs = []
    for _ in range(2):
        backend = ScriptedBackend(list(replies))
        runs.append([complete(backend, fixture_request()).content for _ in replies])
    assert runs[0] == runs[1] == replies


def test_context_budget_fails_fast():
    backend = ScriptedBackend(["reply"], context_budget=3)
    with pytest.raises(ContextOverflowError, match="context overflow"):
        complete(backend, fixture_request())
    assert backend.calls == 0


# ---------------------------------------------------------------------------
# Cassette record/replay
# ---------------------------------------------------------------------------

def test_replay_miss_names_digest(tmp_path):
    backend = CassetteBackend(tmp_path / "cassette.json", mode="replay")
    digest = canonical_digest(fixture_request())
    with pytest.raises(CacheMissError) as err:
        complete(backend, fixture_request())
    assert digest in str(err.value)


def test_record_then_replay_round_trip(tmp_path):
    path = tmp_path / "cassette.json"
    recorder = CassetteBackend(path, mode="record", inner=ScriptedBackend(["recorded reply"]))
    first = complete(recorder, fixture_request())

    replayer = CassetteBackend(path, mode="replay")
    second = complete(replayer, fixture_request())
    assert second == first
    assert second.content == "recorded reply"


def test_cassette_file_is_json_array_of_entries(tmp_path):
    path = tmp_path / "cassette.json"
    recorder = CassetteBackend(path, mode="record", inner=ScriptedBackend(["r1", "r2"]))
    complete(recorder, fixture_request(0.2))
    complete(recorder, fixture_request(0.7))
    raw = json.loads(path.read_text())
    assert isinstance(raw, list) and len(raw) == 2
    assert {"request_digest", "response"} <= set(raw[0])


# ---------------------------------------------------------------------------
# HTTP backend against a local stub
# ---------------------------------------------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    script: list[tuple[int, dict | str]] = []
    hits: list[dict] = []

    def do_POST(self):  # noqa: N802  (http.server API)
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        type(self).hits.append(body)
        status, payload = self.script.pop(0) if self.script else (200, self._ok(body))
        data = payload if isinstance(payload, str) else json.dumps(payload)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(data.encode())

    @staticmethod
    def _ok(body: dict) -> dict:
        return {
            "choices": [{"message": {"role": "assistant", "content": "stub reply"}, "finish_reason": "stop"}],
            "usage": {"prompt_tokens": 7, "completion_tokens": 3},
        }

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    _StubHandler.script = []
    _StubHandler.hits = []
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _StubHandler
    server.shutdown()


def _no_sleep(_seconds: float) -> None:
    pass


def test_http_backend_parses_reply(stub_server):
    url, handler = stub_server
    backend = HttpBackend(base_url=url, api_key="k", sleep=_no_sleep)
    response = complete(backend, fixture_request())
    assert response == ChatResponse("stub reply", "stop", 7, 3)
    assert handler.hits[0]["model"] == "gpt-4o"


def test_http_retries_transient_then_succeeds(stub_server):
    url, handler = stub_server
    handler.script = [(500, {"error": "boom"}), (429, {"error": "slow down"})]
    slept: list[float] = []
    backend = HttpBackend(base_url=url, sleep=slept.append)
    response = complete(backend, fixture_request())
    assert response.content == "stub reply"
    assert slept == [1.0, 2.0]
    assert len(handler.hits) == 3


def test_http_gives_up_after_three_retries(stub_server):
    url, handler = stub_server
    handler.script = [(500, {})] * 4
    slept: list[float] = []
    backend = HttpBackend(base_url=url, sleep=slept.append)
    with pytest.raises(TransientError):
        complete(backend, fixture_request())
    assert slept == [1.0, 2.0, 4.0]
    assert len(handler.hits) == 4


def test_http_auth_error_never_retried(stub_server):
    url, handler = stub_server
    handler.script = [(401, {"error": "bad key"})]
    slept: list[float] = []
    backend = HttpBackend(base_url=url, sleep=slept.append)
    with pytest.raises(AuthError):
        complete(backend, fixture_request())
    assert slept == []
    assert len(handler.hits) == 1


def test_http_malformed_reply_is_protocol_error(stub_server):
    url, handler = stub_server
    handler.script = [(200, {"unexpected": "shape"})]
    backend = HttpBackend(base_url=url, sleep=_no_sleep)
    with pytest.raises(ProtocolError):
        complete(backend, fixture_request())


def test_record_mode_against_live_stub_then_offline_replay(stub_server, tmp_path):
    url, _handler = stub_server
    path = tmp_path / "live.json"
    recorder = CassetteBackend(path, mode="record", inner=HttpBackend(base_url=url, sleep=_no_sleep))
    live = complete(recorder, fixture_request())

    offline = CassetteBackend(path, mode="replay")
    replayed = complete(offline, fixture_request())
    assert replayed.content == live.content
    assert replayed == live
