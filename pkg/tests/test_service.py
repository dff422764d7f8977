"""Service tests: intervention broker semantics, HTTP surface, long-poll
pagination, and CLI-vs-HTTP run equivalence."""

from __future__ import annotations

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from saarthi import demo
from saarthi.cli import build_agents_and_tasks
from saarthi.config import RunConfig
from saarthi.conversation import HilChoice, HilDecision, HilMode
from saarthi.pipeline import HilSession, Outcome, run_pipeline
from saarthi.service import (
    AlreadyAnsweredError,
    DuplicateWaitingError,
    InterventionBroker,
    InterventionState,
    RunManager,
    create_app,
)

AGENTS, TASKS = build_agents_and_tasks(None, None)


def demo_config(tmp_path, **overrides) -> RunConfig:
    spec, rtl = demo.write_demo_inputs(tmp_path / "inputs")
    defaults = dict(
        spec_path=spec, model_id="mock", rtl_paths=[rtl],
        out_dir=tmp_path / "runs", hil_mode=HilMode.TERMINATE,
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


@pytest.fixture()
def service(tmp_path):
    broker = InterventionBroker()
    manager = RunManager(broker, agents=AGENTS, tasks=TASKS)
    app = create_app(manager, broker)
    client = TestClient(app)
    return client, manager, broker


def wait_for(predicate, timeout: float = 10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return False


# ---------------------------------------------------------------------------
# Broker semantics
# ---------------------------------------------------------------------------

def test_broker_exactly_once_delivery():
    broker = InterventionBroker()
    entry = broker.enqueue("r1", [], latest_draft="draft")
    results: list = []

    def parked():
        results.append(broker.wait(entry.intervention_id))

    thread = threading.Thread(target=parked)
    thread.start()
    broker.submit(entry.intervention_id, HilDecision(HilChoice.SKIP))
    thread.join(timeout=5)
    assert results == [HilDecision(HilChoice.SKIP)]
    with pytest.raises(AlreadyAnsweredError):
        broker.submit(entry.intervention_id, HilDecision(HilChoice.TERMINATE))


def test_broker_concurrent_duplicate_submissions_one_winner():
    broker = InterventionBroker()
    entry = broker.enqueue("r1", [])
    outcomes: list[str] = []
    lock = threading.Lock()
    barrier = threading.Barrier(8)

    def submitter(i: int):
        barrier.wait()
        try:
            broker.submit(entry.intervention_id, HilDecision(HilChoice.SKIP))
            with lock:
                outcomes.append("ok")
        except AlreadyAnsweredError:
            with lock:
                outcomes.append("conflict")

    threads = [threading.Thread(target=submitter, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert outcomes.count("ok") == 1
    assert outcomes.count("conflict") == 7
    assert broker.wait(entry.intervention_id) == HilDecision(HilChoice.SKIP)


def test_broker_one_waiting_per_run():
    broker = InterventionBroker()
    broker.enqueue("r1", [])
    with pytest.raises(DuplicateWaitingError):
        broker.enqueue("r1", [])
    broker.enqueue("r2", [])  # other runs unaffected


def test_broker_deadline_expires_to_skip():
    broker = InterventionBroker(deadline=0.05)
    entry = broker.enqueue("r1", [])
    decision = broker.wait(entry.intervention_id)
    assert decision.choice is HilChoice.SKIP
    assert broker.get(entry.intervention_id).state is InterventionState.EXPIRED


# ---------------------------------------------------------------------------
# HTTP surface
# ---------------------------------------------------------------------------

def test_get_runs_empty(service):
    client, _manager, _broker = service
    assert client.get("/runs").json() == []


def test_unknown_run_404(service):
    client, _m, _b = service
    assert client.get("/runs/nope").status_code == 404
    assert client.get("/runs/nope/transcript").status_code == 404
    assert client.get("/runs/nope/report").status_code == 404


def test_full_run_over_http(service, tmp_path):
    client, _m, _b = service
    config = demo_config(tmp_path)
    response = client.post("/runs", json=config.to_json())
    assert response.status_code == 200
    run_id = response.json()["run_id"]

    assert wait_for(lambda: not client.get(f"/runs/{run_id}").json()["active"])
    detail = client.get(f"/runs/{run_id}").json()
    assert detail["outcome"] == "SUCCESS"
    assert detail["record"]["kpi"]["n_properties"] == 4

    report = client.get(f"/runs/{run_id}/report")
    assert report.status_code == 200
    assert "# Verification run report" in report.json()["markdown"]


def test_post_run_rejects_missing_spec(service, tmp_path):
    client, _m, _b = service
    config = demo_config(tmp_path)
    payload = config.to_json()
    payload["spec_path"] = str(tmp_path / "missing.md")
    assert client.post("/runs", json=payload).status_code == 400


def test_transcript_long_poll_pagination(service, tmp_path):
    client, _m, _b = service
    config = demo_config(tmp_path)
    run_id = client.post("/runs", json=config.to_json()).json()["run_id"]
    assert wait_for(lambda: not client.get(f"/runs/{run_id}").json()["active"])

    # Page through with random-ish cadences; the union must be gapless and
    # duplicate-free regardless of chunk size.
    seen: list[int] = []
    since = 0
    while True:
        page = client.get(f"/runs/{run_id}/transcript", params={"since": since}).json()["messages"]
        if not page:
            break
        seqs = [m["seq"] for m in page[:3]]  # deliberately consume partial pages
        seen.extend(seqs)
        since = seqs[-1]
    assert seen == list(range(1, len(seen) + 1))
    full = client.get(f"/runs/{run_id}/transcript").json()["messages"]
    assert [m["seq"] for m in full] == list(range(1, len(full) + 1))
    assert len(full) == len(seen)
    # since=N returns strictly newer messages only
    tail = client.get(f"/runs/{run_id}/transcript", params={"since": len(full) - 2}).json()["messages"]
    assert [m["seq"] for m in tail] == [len(full) - 1, len(full)]


# ---------------------------------------------------------------------------
# Intervention flow over HTTP
# ---------------------------------------------------------------------------

def escalating_config(tmp_path) -> tuple[RunConfig, list[str]]:
    # One plan item whose drafts are always rejected: escalates after max_iter.
    config = demo_config(tmp_path, max_iter=2)
    fifo_reply = "```systemverilog\nassert property (@(posedge clk) push |-> !full);\n```"
    replies = ["1. the only property"]
    for _ in range(2):
        replies += [fifo_reply, "not convincing"]
    replies.append("NONE")  # coverage feedback after SKIP acceptance
    return config, replies


def make_service_with_script(tmp_path, replies):
    from saarthi.gateway import ScriptedBackend

    broker = InterventionBroker()
    manager = RunManager(
        broker, agents=AGENTS, tasks=TASKS,
        gateway_factory=lambda config: ScriptedBackend(list(replies)),
        prover_factory=lambda config: demo.demo_prover(),
    )
    return TestClient(create_app(manager, broker)), manager, broker


def test_intervention_intercept_resumes_run(tmp_path):
    config, replies = escalating_config(tmp_path)
    client, manager, broker = make_service_with_script(tmp_path, replies)
    run_id = client.post("/runs", json=config.to_json()).json()["run_id"]

    assert wait_for(lambda: client.get("/interventions").json())
    (entry,) = client.get("/interventions").json()
    assert entry["state"] == "WAITING"
    assert entry["run_id"] == run_id
    assert entry["property_id"] == "p1"
    assert entry["latest_draft"] and "assert property" in entry["latest_draft"]
    assert entry["prompt_context"]

    replacement = "p1: assert property (@(posedge clk) push |-> !full);"
    ack = client.post(
        f"/interventions/{entry['intervention_id']}/decision",
        json={"choice": "INTERCEPT", "replacement_content": replacement},
    )
    assert ack.status_code == 200

    assert wait_for(lambda: not client.get(f"/runs/{run_id}").json()["active"])
    record = client.get(f"/runs/{run_id}").json()["record"]
    assert record["outcome"] == "SUCCESS"
    (prop,) = record["properties"]
    assert prop["origin"] == "HUMAN_INTERCEPT"
    # The transcript shows the human reply
    messages = client.get(f"/runs/{run_id}/transcript").json()["messages"]
    assert any(m["sender"] == "human" for m in messages)


def test_intervention_terminate_aborts_run(tmp_path):
    config, replies = escalating_config(tmp_path)
    client, manager, broker = make_service_with_script(tmp_path, replies)
    run_id = client.post("/runs", json=config.to_json()).json()["run_id"]
    assert wait_for(lambda: client.get("/interventions").json())
    (entry,) = client.get("/interventions").json()
    client.post(f"/interventions/{entry['intervention_id']}/decision", json={"choice": "TERMINATE"})
    assert wait_for(lambda: not client.get(f"/runs/{run_id}").json()["active"])
    assert client.get(f"/runs/{run_id}").json()["outcome"] == "ABORTED"


def test_intervention_skip_accepts_latest_draft(tmp_path):
    config, replies = escalating_config(tmp_path)
    client, manager, broker = make_service_with_script(tmp_path, replies)
    run_id = client.post("/runs", json=config.to_json()).json()["run_id"]
    assert wait_for(lambda: client.get("/interventions").json())
    (entry,) = client.get("/interventions").json()
    client.post(f"/interventions/{entry['intervention_id']}/decision", json={"choice": "SKIP"})
    assert wait_for(lambda: not client.get(f"/runs/{run_id}").json()["active"])
    record = client.get(f"/runs/{run_id}").json()["record"]
    assert record["outcome"] == "SUCCESS"
    assert record["properties"][0]["origin"] == "AGENT"


def test_intercept_without_content_rejected(service):
    client, _m, broker = service
    entry = broker.enqueue("r1", [])
    response = client.post(
        f"/interventions/{entry.intervention_id}/decision", json={"choice": "INTERCEPT"}
    )
    assert response.status_code == 422
    assert broker.get(entry.intervention_id).state is InterventionState.WAITING


def test_double_submit_conflict(service):
    client, _m, broker = service
    entry = broker.enqueue("r1", [])
    first = client.post(f"/interventions/{entry.intervention_id}/decision", json={"choice": "SKIP"})
    second = client.post(f"/interventions/{entry.intervention_id}/decision", json={"choice": "SKIP"})
    assert first.status_code == 200
    assert second.status_code == 409


def test_unknown_intervention_404(service):
    client, _m, _b = service
    assert client.post("/interventions/zzz/decision", json={"choice": "SKIP"}).status_code == 404


# ---------------------------------------------------------------------------
# CLI-vs-HTTP equivalence
# ---------------------------------------------------------------------------

def normalized_record(payload: dict) -> str:
    payload = json.loads(json.dumps(payload))
    payload.pop("run_id", None)
    payload.get("config", {}).pop("out_dir", None)
    payload.get("config", {}).pop("spec_path", None)
    payload.get("config", {}).pop("rtl_paths", None)
    return json.dumps(payload, sort_keys=True)


def test_cli_and_http_runs_equivalent(tmp_path):
    # CLI-style direct invocation
    cli_config = demo_config(tmp_path / "cli")
    from saarthi.gateway import ScriptedBackend

    cli_record = run_pipeline(
        cli_config, AGENTS, TASKS, ScriptedBackend(demo.demo_replies()), demo.demo_prover(),
        HilSession.auto_skip(),
    )
    assert cli_record.outcome is Outcome.SUCCESS

    # Same scripted run over HTTP
    broker = InterventionBroker()
    manager = RunManager(broker, agents=AGENTS, tasks=TASKS)
    client = TestClient(create_app(manager, broker))
    http_config = demo_config(tmp_path / "http")
    run_id = client.post("/runs", json=http_config.to_json()).json()["run_id"]
    assert wait_for(lambda: not client.get(f"/runs/{run_id}").json()["active"])
    http_record = client.get(f"/runs/{run_id}").json()["record"]

    assert normalized_record(cli_record.to_json()) == normalized_record(http_record)
