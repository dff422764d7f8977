"""HTTP service: exposes runs and the pending-intervention queue so a human
can steer live runs from the dashboard.

The intervention broker is the rendezvous between the pipeline's synchronous
human callback and asynchronous web requests: the pipeline thread parks on
enqueue() until exactly one decision is delivered via submit().
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query
from pydantic import BaseModel

from saarthi.cli import build_agents_and_tasks, build_gateway, build_prover
from saarthi.config import AgentSpec, ConfigError, RunConfig, TaskSpec
from saarthi.conversation import HilChoice, HilDecision, Message
from saarthi.pipeline import HilSession, RunRecord, Stage, TranscriptLog, run_pipeline
from saarthi.runstore import create_run_dir

CONTEXT_MESSAGES = 10


class InterventionState(str, Enum):
    WAITING = "WAITING"
    ANSWERED = "ANSWERED"
    EXPIRED = "EXPIRED"


class BrokerError(RuntimeError):
    pass


class DuplicateWaitingError(BrokerError):
    pass


class AlreadyAnsweredError(BrokerError):
    pass


@dataclass
class PendingIntervention:
    intervention_id: str
    run_id: str
    property_id: str | None
    prompt_context: list[dict]
    latest_draft: str | None
    created: str
    state: InterventionState = InterventionState.WAITING
    decision: HilDecision | None = None
    _answered: threading.Event = field(default_factory=threading.Event, repr=False)

    def to_json(self) -> dict:
        return {
            "intervention_id": self.intervention_id,
            "run_id": self.run_id,
            "property_id": self.property_id,
            "prompt_context": self.prompt_context,
            "latest_draft": self.latest_draft,
            "created": self.created,
            "state": self.state.value,
        }


class InterventionBroker:
    """At most one WAITING intervention per run; each delivers exactly one
    decision to exactly one parked callback."""

    def __init__(self, deadline: float | None = None):
        self._entries: dict[str, PendingIntervention] = {}
        self._lock = threading.Lock()
        self.deadline = deadline

    def enqueue(
        self,
        run_id: str,
        prompt_context: list[dict],
        latest_draft: str | None = None,
        property_id: str | None = None,
    ) -> PendingIntervention:
        with self._lock:
            for entry in self._entries.values():
                if entry.run_id == run_id and entry.state is InterventionState.WAITING:
                    raise DuplicateWaitingError(f"run {run_id} already has a waiting intervention")
            entry = PendingIntervention(
                intervention_id=uuid.uuid4().hex[:12],
                run_id=run_id,
                property_id=property_id,
                prompt_context=prompt_context,
                latest_draft=latest_draft,
                created=datetime.now(timezone.utc).isoformat(),
            )
            self._entries[entry.intervention_id] = entry
        return entry

    def wait(self, intervention_id: str) -> HilDecision:
        entry = self.get(intervention_id)
        answered = entry._answered.wait(self.deadline)
        with self._lock:
            if not answered and entry.state is InterventionState.WAITING:
                # Deadline lapsed: treated as SKIP (documented extension).
                entry.state = InterventionState.EXPIRED
                entry.decision = HilDecision(HilChoice.SKIP)
            assert entry.decision is not None
            return entry.decision

    def submit(self, intervention_id: str, decision: HilDecision) -> None:
        with self._lock:
            entry = self._entries.get(intervention_id)
            if entry is None:
                raise KeyError(intervention_id)
            if entry.state is not InterventionState.WAITING:
                raise AlreadyAnsweredError(f"intervention {intervention_id} is {entry.state.value}")
            entry.state = InterventionState.ANSWERED
            entry.decision = decision
            entry._answered.set()

    def get(self, intervention_id: str) -> PendingIntervention:
        with self._lock:
            entry = self._entries.get(intervention_id)
        if entry is None:
            raise KeyError(intervention_id)
        return entry

    def list(self) -> list[PendingIntervention]:
        with self._lock:
            return list(self._entries.values())


@dataclass
class RunHandle:
    run_id: str
    config: RunConfig
    transcript: TranscriptLog
    created: str
    run_dir: Path
    stage: Stage = Stage.VPLAN
    record: RunRecord | None = None
    thread: threading.Thread | None = None

    @property
    def active(self) -> bool:
        return self.record is None

    def summary(self) -> dict:
        return {
            "run_id": self.run_id,
            "created": self.created,
            "active": self.active,
            "stage_reached": (self.record.stage_reached if self.record else self.stage).value,
            "outcome": self.record.outcome.value if self.record else None,
            "kpi": self.record.kpi.to_json() if self.record and self.record.kpi else None,
        }


class RunManager:
    """Owns live runs: spawns one pipeline thread per run, wiring its human
    callback to the intervention broker."""

    def __init__(
        self,
        broker: InterventionBroker,
        agents: dict[str, AgentSpec] | None = None,
        tasks: list[TaskSpec] | None = None,
        gateway_factory=build_gateway,
        prover_factory=build_prover,
    ):
        self.broker = broker
        if agents is None or tasks is None:
            agents, tasks = build_agents_and_tasks(None, None)
        self.agents = agents
        self.tasks = tasks
        self.gateway_factory = gateway_factory
        self.prover_factory = prover_factory
        self._handles: dict[str, RunHandle] = {}
        self._lock = threading.Lock()

    def start_run(self, config: RunConfig) -> RunHandle:
        config.validate()
        run_id, run_dir = create_run_dir(config.out_dir)
        transcript = TranscriptLog()
        handle = RunHandle(
            run_id=run_id,
            config=config,
            transcript=transcript,
            created=datetime.now(timezone.utc).isoformat(),
            run_dir=run_dir,
        )

        def human(message: Message) -> HilDecision:
            context = [m.to_json() for m in transcript.since(max(0, len(transcript) - CONTEXT_MESSAGES))]
            property_id = None
            if message.content.startswith("["):
                property_id = message.content[1:].split("]", 1)[0]
            latest_draft = None
            if "Latest draft:\n" in message.content:
                latest_draft = message.content.split("Latest draft:\n", 1)[1]
            entry = self.broker.enqueue(
                handle.run_id, context, latest_draft=latest_draft, property_id=property_id
            )
            return self.broker.wait(entry.intervention_id)

        hil = HilSession(mode=config.hil_mode, human=human)
        gateway = self.gateway_factory(config)
        prover = self.prover_factory(config)

        def worker() -> None:
            def on_stage(stage: Stage) -> None:
                handle.stage = stage

            record = run_pipeline(
                config,
                self.agents,
                self.tasks,
                gateway,
                prover,
                hil,
                run_dir=(run_id, run_dir),
                transcript=transcript,
                on_stage=on_stage,
            )
            handle.record = record

        thread = threading.Thread(target=worker, daemon=True, name=f"run-{run_id}")
        handle.thread = thread
        with self._lock:
            self._handles[run_id] = handle
        thread.start()
        return handle

    def get(self, run_id: str) -> RunHandle:
        with self._lock:
            handle = self._handles.get(run_id)
        if handle is None:
            raise KeyError(run_id)
        return handle

    def list(self) -> list[RunHandle]:
        with self._lock:
            return sorted(self._handles.values(), key=lambda h: h.created)


class DecisionBody(BaseModel):
    choice: str
    replacement_content: str | None = None


def create_app(
    manager: RunManager,
    broker: InterventionBroker,
    static_dir: Path | str | None = None,
    cors: bool = False,
) -> FastAPI:
    app = FastAPI(title="saarthi service")

    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )

    @app.post("/runs")
    def post_run(body: dict = Body(...)) -> dict:
        try:
            config = RunConfig.from_json(body)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad run config: {exc}") from exc
        try:
            handle = manager.start_run(config)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"run_id": handle.run_id}

    @app.get("/runs")
    def get_runs() -> list[dict]:
        return [handle.summary() for handle in manager.list()]

    def _handle_or_404(run_id: str) -> RunHandle:
        try:
            return manager.get(run_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}") from None

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        handle = _handle_or_404(run_id)
        payload = handle.summary()
        if handle.record is not None:
            payload["record"] = handle.record.to_json()
        return payload

    @app.get("/runs/{run_id}/transcript")
    def get_transcript(
        run_id: str,
        since: int = Query(default=0, ge=0),
        timeout: float = Query(default=0.0, ge=0.0, le=60.0),
    ) -> dict:
        handle = _handle_or_404(run_id)
        if timeout > 0:
            messages = handle.transcript.wait_since(since, timeout)
        else:
            messages = handle.transcript.since(since)
        return {"messages": [m.to_json() for m in messages]}

    @app.get("/runs/{run_id}/report")
    def get_report(run_id: str) -> dict:
        handle = _handle_or_404(run_id)
        report_path = handle.run_dir / "report.md"
        if not report_path.exists():
            raise HTTPException(status_code=404, detail="report not available")
        return {"markdown": report_path.read_text()}

    @app.get("/interventions")
    def get_interventions() -> list[dict]:
        return [entry.to_json() for entry in broker.list()]

    @app.post("/interventions/{intervention_id}/decision")
    def post_decision(intervention_id: str, body: DecisionBody) -> dict:
        try:
            choice = HilChoice(body.choice.upper())
        except ValueError:
            raise HTTPException(status_code=422, detail=f"unknown choice {body.choice!r}") from None
        try:
            decision = HilDecision(choice, body.replacement_content)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        try:
            broker.submit(intervention_id, decision)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown intervention {intervention_id}") from None
        except AlreadyAnsweredError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"ok": True, "intervention_id": intervention_id}

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app


def serve(
    config: RunConfig,
    agents: dict[str, AgentSpec],
    tasks: list[TaskSpec],
    host: str = "127.0.0.1",
    port: int = 8741,
    cors: bool = False,
) -> None:
    """Blocking entry point for `saarthi run --serve`."""
    import uvicorn

    broker = InterventionBroker()
    manager = RunManager(broker, agents=agents, tasks=tasks)
    static = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    app = create_app(manager, broker, static_dir=static if static.is_dir() else None, cors=cors)
    uvicorn.run(app, host=host, port=port, log_level="warning")
