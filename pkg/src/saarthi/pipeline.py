"""The verification engine: vPlan generation, per-property SVA generation
with a bounded critic reflection loop and HIL escalation, proving, CEX
analysis, coverage analysis, and one feedback round with re-prove.

Stages run strictly in order:
    vplan -> sva -> prove -> cex-analysis -> coverage -> feedback ->
    re-prove (at most once) -> report
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from saarthi import assets
from saarthi.config import AgentSpec, RunConfig, TaskSpec
from saarthi.conversation import (
    ConversationState,
    HilChoice,
    HilDecision,
    HilMode,
    HumanFn,
    Message,
    MessageKind,
    process_message,
)
from saarthi.formal.prover import AssertStatus, CexTrace, CoverStatus, ProverResult
from saarthi.formal.sva import (
    SvaBlock,
    ensure_label,
    extract_port_list,
    extract_sva_blocks,
    lint_sva,
    render_checker,
)
from saarthi.gateway import ChatRequest, complete
from saarthi.metrics import KpiSummary, format_pct
from saarthi.prompts import (
    cex_prompt,
    coverage_prompt,
    critique_prompt,
    property_prompt,
    system_prompt,
    vplan_prompt,
)
from saarthi.runstore import LogLevel, RunWriter, open_run

LIST_ITEM_RE = re.compile(r"^\s*(?:\d+[.)]|[-*•])\s+(.+?)\s*$")

ACCEPT_TOKEN = "ACCEPT"
ESCALATION_NOTE = "No conclusion reached within the iteration threshold; requesting a decision on the latest draft."


class Stage(str, Enum):
    VPLAN = "vplan"
    SVA = "sva"
    PROVE = "prove"
    CEX_ANALYSIS = "cex-analysis"
    COVERAGE = "coverage"
    FEEDBACK = "feedback"
    REPROVE = "re-prove"
    REPORT = "report"


class Outcome(str, Enum):
    SUCCESS = "SUCCESS"
    FAILED = "FAILED"
    ABORTED = "ABORTED"


class PlanStatus(str, Enum):
    OPEN = "OPEN"
    COVERED_BY_SVA = "COVERED_BY_SVA"
    DROPPED = "DROPPED"


class PropertyStatus(str, Enum):
    DRAFT = "DRAFT"
    ACCEPTED = "ACCEPTED"
    PROVEN = "PROVEN"
    CEX = "CEX"
    INCONCLUSIVE = "INCONCLUSIVE"


class Origin(str, Enum):
    AGENT = "AGENT"
    HUMAN_INTERCEPT = "HUMAN_INTERCEPT"
    VOTE = "VOTE"


class CexVerdict(str, Enum):
    RTL_BUG = "RTL_BUG"
    BAD_PROPERTY = "BAD_PROPERTY"
    INCONCLUSIVE = "INCONCLUSIVE"


class PipelineError(RuntimeError):
    def __init__(self, stage: Stage, message: str):
        super().__init__(f"{stage.value}: {message}")
        self.stage = stage


class AbortRun(Exception):
    """A human TERMINATE decision: stop the run, keep partial artifacts."""


@dataclass
class PlanItem:
    id: str
    description: str
    status: PlanStatus = PlanStatus.OPEN

    def to_json(self) -> dict:
        return {"id": self.id, "description": self.description, "status": self.status.value}


@dataclass
class VPlan:
    items: list[PlanItem] = field(default_factory=list)

    def open_items(self) -> list[PlanItem]:
        return [item for item in self.items if item.status is PlanStatus.OPEN]

    def next_id(self) -> str:
        return f"p{len(self.items) + 1}"

    def render_markdown(self) -> str:
        lines = ["# Verification plan", ""]
        for i, item in enumerate(self.items, start=1):
            lines.append(f"{i}. [{item.id}] {item.description} ({item.status.value})")
        return "\n".join(lines) + "\n"

    def to_json(self) -> list[dict]:
        return [item.to_json() for item in self.items]


@dataclass
class SvaProperty:
    id: str
    plan_item_id: str
    code: str
    revision: int = 0
    origin: Origin = Origin.AGENT
    status: PropertyStatus = PropertyStatus.DRAFT

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "plan_item_id": self.plan_item_id,
            "code": self.code,
            "revision": self.revision,
            "origin": self.origin.value,
            "status": self.status.value,
        }


@dataclass
class CritiqueVerdict:
    accept: bool
    feedback: str = ""

    def __post_init__(self) -> None:
        if not self.accept and not self.feedback:
            raise ValueError("a rejection must carry feedback")


@dataclass
class CexAnalysis:
    verdict: CexVerdict
    explanation: str
    revised_code: str | None = None


@dataclass
class CoverageReport:
    n_covered: int = 0
    n_unreachable: int = 0
    n_uncovered: int = 0
    covers: dict[str, str] = field(default_factory=dict)

    @property
    def rate(self) -> float:
        total = self.n_covered + self.n_unreachable + self.n_uncovered
        return 100.0 * self.n_covered / total if total else 0.0

    @staticmethod
    def from_prover(result: ProverResult) -> "CoverageReport":
        return CoverageReport(
            n_covered=result.n_covered,
            n_unreachable=result.n_unreachable,
            covers={cid: v.status.value for cid, v in result.covers.items()},
        )

    def to_json(self) -> dict:
        return {
            "covered": self.n_covered,
            "unreachable": self.n_unreachable,
            "uncovered": self.n_uncovered,
            "rate": self.rate,
            "covers": self.covers,
        }


@dataclass
class DesignSpec:
    text: str
    rtl_sources: list[dict] = field(default_factory=list)
    port_list: list[str] = field(default_factory=list)

    @staticmethod
    def load(spec_path: Path, rtl_paths: list[Path]) -> "DesignSpec":
        text = Path(spec_path).read_text()
        sources = [{"path": str(p), "content": Path(p).read_text()} for p in rtl_paths]
        ports: list[str] = []
        for source in sources:
            for name in extract_port_list(source["content"]):
                if name not in ports:
                    ports.append(name)
        return DesignSpec(text=text, rtl_sources=sources, port_list=ports)


@dataclass
class RunRecord:
    run_id: str
    config: RunConfig
    vplan: VPlan = field(default_factory=VPlan)
    properties: list[SvaProperty] = field(default_factory=list)
    prover_result: ProverResult | None = None
    coverage: CoverageReport = field(default_factory=CoverageReport)
    kpi: KpiSummary | None = None
    outcome: Outcome = Outcome.FAILED
    stage_reached: Stage = Stage.VPLAN
    findings: list[dict] = field(default_factory=list)
    run_dir: Path | None = None

    def to_json(self) -> dict:
        prover = None
        if self.prover_result is not None:
            prover = {
                "assertions": {
                    pid: {"status": v.status.value, "diagnostic": v.diagnostic}
                    for pid, v in self.prover_result.assertions.items()
                },
                "covers": {cid: v.status.value for cid, v in self.prover_result.covers.items()},
            }
        return {
            "run_id": self.run_id,
            "config": self.config.to_json(),
            "vplan": self.vplan.to_json(),
            "properties": [p.to_json() for p in self.properties],
            "prover_result": prover,
            "coverage": self.coverage.to_json(),
            "kpi": self.kpi.to_json() if self.kpi else None,
            "outcome": self.outcome.value,
            "stage_reached": self.stage_reached.value,
            "findings": self.findings,
        }


# ---------------------------------------------------------------------------
# Run plumbing
# ---------------------------------------------------------------------------

class TranscriptLog:
    """Thread-safe, seq-stamped message log with waiters for long-polling."""

    def __init__(self, writer: RunWriter | None = None):
        self._messages: list[Message] = []
        self._cond = threading.Condition()
        self.writer = writer

    def append(self, sender: str, recipient: str, content: str, kind: MessageKind) -> Message:
        with self._cond:
            message = Message(sender=sender, recipient=recipient, content=content, kind=kind)
            message.seq = len(self._messages) + 1
            self._messages.append(message)
            if self.writer is not None:
                self.writer.append_transcript(message)
            self._cond.notify_all()
            return message

    def since(self, seq: int) -> list[Message]:
        with self._cond:
            return list(self._messages[seq:])

    def wait_since(self, seq: int, timeout: float) -> list[Message]:
        with self._cond:
            if len(self._messages) <= seq:
                self._cond.wait(timeout)
            return list(self._messages[seq:])

    def __len__(self) -> int:
        with self._cond:
            return len(self._messages)


@dataclass
class HilSession:
    """Bundles the HIL mode with the human callback; exposes the most recent
    per-item conversation state so counter resets are observable."""

    mode: HilMode
    human: HumanFn
    last_state: ConversationState | None = None

    @staticmethod
    def auto_skip(mode: HilMode = HilMode.TERMINATE) -> "HilSession":
        return HilSession(mode=mode, human=lambda m: HilDecision(HilChoice.SKIP))

    @staticmethod
    def always_terminate(mode: HilMode = HilMode.TERMINATE) -> "HilSession":
        return HilSession(mode=mode, human=lambda m: HilDecision(HilChoice.TERMINATE))


@dataclass
class PipelineContext:
    config: RunConfig
    tasks: dict[str, TaskSpec]
    agents: dict[str, AgentSpec]
    gateway: object
    writer: RunWriter | None = None
    transcript: TranscriptLog | None = None

    def __post_init__(self) -> None:
        if self.transcript is None:
            self.transcript = TranscriptLog(self.writer)

    def task(self, name: str) -> TaskSpec:
        if name not in self.tasks:
            raise PipelineError(Stage.VPLAN, f"task configuration is missing {name!r}")
        return self.tasks[name]

    def agent_for(self, task: TaskSpec) -> AgentSpec:
        return self.agents[task.assigned_agent]

    def log(self, level: LogLevel, stage: Stage, message: str, agent: str | None = None) -> None:
        if self.writer is not None:
            self.writer.log(level, stage.value, message, agent)

    def ask(self, agent: AgentSpec, user_prompt: str, stage: Stage) -> str:
        assert self.transcript is not None
        self.transcript.append("orchestrator", agent.name, user_prompt, MessageKind.TASK)
        request_messages = [("system", system_prompt(agent)), ("user", user_prompt)]
        request = ChatRequest.build(
            self.config.model_id, request_messages, temperature=self.config.temperature
        )
        self.log(LogLevel.DEBUG, stage, f"request issued to {agent.name}", agent.name)
        response = complete(self.gateway, request)
        self.transcript.append(agent.name, "orchestrator", response.content, MessageKind.REPLY)
        return response.content


def parse_item_list(text: str) -> list[str]:
    """Numbered or bulleted lines -> item texts."""
    return [m.group(1) for line in text.splitlines() if (m := LIST_ITEM_RE.match(line))]


# ---------------------------------------------------------------------------
# Stage operations
# ---------------------------------------------------------------------------

def generate_vplan(spec: DesignSpec, lead: AgentSpec, gateway, *, ctx: PipelineContext) -> VPlan:
    """Ask the lead for the property list and parse its numbered reply."""
    task = ctx.task(assets.TASK_VPLAN)
    reply = ctx.ask(lead, vplan_prompt(task, spec.text, spec.port_list), Stage.VPLAN)
    descriptions = parse_item_list(reply)
    if not descriptions:
        raise PipelineError(Stage.VPLAN, "lead reply contained no parseable property list")
    items = [PlanItem(id=f"p{i}", description=d) for i, d in enumerate(descriptions, start=1)]
    return VPlan(items=items)


def _split_reply_blocks(reply: str) -> tuple[SvaBlock | None, list[SvaBlock]]:
    blocks = extract_sva_blocks(reply)
    asserts = [b for b in blocks if b.kind in ("assert", "assume")]
    covers = [b for b in blocks if b.kind == "cover"]
    return (asserts[0] if asserts else None), covers


def critique_reply_accepts(reply: str) -> CritiqueVerdict:
    for line in reply.splitlines():
        if line.strip():
            if line.strip().upper().startswith(ACCEPT_TOKEN):
                return CritiqueVerdict(accept=True)
            break
    return CritiqueVerdict(accept=False, feedback=reply.strip() or "rejected without feedback")


def generate_and_refine_sva(
    item: PlanItem,
    engineer: AgentSpec,
    critic: AgentSpec,
    gateway,
    hil: HilSession,
    max_iter: int,
    *,
    spec: DesignSpec,
    ctx: PipelineContext,
    initial_code: str | None = None,
    base_revision: int = 0,
) -> tuple[SvaProperty, list[SvaBlock]]:
    """Reflection loop: draft, critique, revise, up to max_iter rounds, then
    escalate through the HIL state machine.

    Every draft round is processed as one message with the critique as its
    auto-reply, so the conversation counter mirrors the iteration count and
    the human is consulted exactly when the threshold is exhausted. A lint or
    extraction failure consumes a round as machine feedback without invoking
    the critic.
    """
    state = ConversationState(mode=hil.mode, max_replies=max_iter)
    hil.last_state = state
    review_task = ctx.task(assets.TASK_REVIEW)
    property_task = ctx.task(assets.TASK_PROPERTY)

    feedback_history: list[str] = []
    rejections = 0
    draft_reply: str | None = initial_code
    last_block: SvaBlock | None = None
    last_covers: list[SvaBlock] = []
    evaluation: dict = {}

    def evaluate(m: Message) -> Message:
        nonlocal last_block, last_covers
        if m.kind is MessageKind.FEEDBACK:
            # Escalation resubmission: the auto path takes the latest draft.
            evaluation["accept"] = True
            evaluation["escalated_auto"] = True
            return Message(
                sender=critic.name, recipient=engineer.name,
                content=f"{ACCEPT_TOKEN} (latest draft taken after threshold)",
                kind=MessageKind.REPLY,
            )
        block, covers = _split_reply_blocks(m.content)
        if block is None:
            evaluation["accept"] = False
            evaluation["feedback"] = "no extractable SystemVerilog assertion block in the reply"
            return Message(
                sender=critic.name, recipient=engineer.name,
                content=evaluation["feedback"], kind=MessageKind.REPLY,
            )
        block = ensure_label(block, item.id)
        report = lint_sva(block, spec.port_list)
        if not report.ok:
            evaluation["accept"] = False
            evaluation["feedback"] = "lint diagnostics: " + "; ".join(
                d.message for d in report.diagnostics
            )
            return Message(
                sender=critic.name, recipient=engineer.name,
                content=evaluation["feedback"], kind=MessageKind.REPLY,
            )
        last_block, last_covers = block, covers
        critique = ctx.ask(
            ctx.agent_for(review_task),
            critique_prompt(review_task, item.id, item.description, block.code),
            Stage.SVA,
        )
        verdict = critique_reply_accepts(critique)
        evaluation["accept"] = verdict.accept
        evaluation["feedback"] = verdict.feedback
        return Message(
            sender=critic.name, recipient=engineer.name, content=critique, kind=MessageKind.REPLY
        )

    for _round in range(max_iter):
        if draft_reply is None:
            draft_reply = ctx.ask(
                engineer,
                property_prompt(
                    property_task, item.id, item.description, spec.port_list, feedback_history
                ),
                Stage.SVA,
            )
        evaluation.clear()
        process_message(
            state,
            Message(sender=engineer.name, recipient=critic.name, content=draft_reply, kind=MessageKind.TASK),
            evaluate,
            hil.human,
        )
        if evaluation.get("accept"):
            assert last_block is not None
            return (
                SvaProperty(
                    id=item.id,
                    plan_item_id=item.id,
                    code=last_block.code,
                    revision=base_revision + rejections,
                    origin=Origin.AGENT,
                    status=PropertyStatus.ACCEPTED,
                ),
                last_covers,
            )
        rejections += 1
        feedback_history.append(evaluation.get("feedback", "rejected"))
        draft_reply = None

    # Threshold exhausted: resubmit the latest draft for a decision.
    ctx.log(
        LogLevel.WARN, Stage.SVA,
        f"critic did not accept {item.id} within {max_iter} iterations; escalating",
    )
    evaluation.clear()
    escalation = Message(
        sender=engineer.name,
        recipient=critic.name,
        content=(
            f"[{item.id}] {ESCALATION_NOTE}\n\nLatest draft:\n"
            f"{last_block.code if last_block else '(no lint-clean draft)'}"
        ),
        kind=MessageKind.FEEDBACK,
    )
    assert ctx.transcript is not None
    ctx.transcript.append("orchestrator", "human", escalation.content, MessageKind.TASK)
    process_message(state, escalation, evaluate, hil.human)

    if not state.conversation_active:
        ctx.transcript.append("human", "orchestrator", "TERMINATE", MessageKind.TERMINATION)
        raise AbortRun(f"human terminated the run while refining {item.id}")

    reply = state.last_reply
    assert reply is not None
    ctx.transcript.append(reply.sender, "orchestrator", reply.content, reply.kind)
    if reply.sender == "human":
        block, covers = _split_reply_blocks(reply.content)
        code = block.code if block is not None else reply.content.strip()
        code_block = ensure_label(SvaBlock(code=code), item.id)
        intercept_lint = lint_sva(code_block, spec.port_list)
        if not intercept_lint.ok:
            # Human authority wins over the lint gate, but the diagnostics
            # are recorded so the override is auditable.
            ctx.log(
                LogLevel.WARN, Stage.SVA,
                f"human intercept for {item.id} carries lint diagnostics: "
                + "; ".join(d.message for d in intercept_lint.diagnostics),
            )
        return (
            SvaProperty(
                id=item.id,
                plan_item_id=item.id,
                code=code_block.code,
                revision=base_revision + rejections,
                origin=Origin.HUMAN_INTERCEPT,
                status=PropertyStatus.ACCEPTED,
            ),
            covers or last_covers,
        )

    # SKIP or NEVER mode: take the latest lint-clean draft.
    if last_block is None:
        raise PipelineError(Stage.SVA, f"no lint-clean draft produced for {item.id}")
    return (
        SvaProperty(
            id=item.id,
            plan_item_id=item.id,
            code=last_block.code,
            revision=base_revision + rejections,
            origin=Origin.AGENT,
            status=PropertyStatus.ACCEPTED,
        ),
        last_covers,
    )


def normalize_code(code: str) -> str:
    """Voting equivalence key: comment-stripped, whitespace-collapsed code."""
    from saarthi.formal.sva import strip_noncode

    return " ".join(strip_noncode(code).split())


def sample_and_vote(
    item: PlanItem,
    engineer: AgentSpec,
    gateway,
    n: int,
    *,
    spec: DesignSpec,
    ctx: PipelineContext,
) -> tuple[SvaProperty, list[SvaBlock]]:
    """Generate n candidates and return the majority representative, ties
    broken by lowest sample index."""
    if n < 1 or n % 2 == 0:
        raise PipelineError(Stage.SVA, f"vote sample count must be odd, got {n}")
    property_task = ctx.task(assets.TASK_PROPERTY)
    candidates: list[tuple[int, SvaBlock, list[SvaBlock]]] = []
    for i in range(n):
        reply = ctx.ask(
            engineer,
            property_prompt(property_task, item.id, item.description, spec.port_list, []),
            Stage.SVA,
        )
        block, covers = _split_reply_blocks(reply)
        if block is not None:
            candidates.append((i, ensure_label(block, item.id), covers))
    if not candidates:
        raise PipelineError(Stage.SVA, f"all {n} voted generations for {item.id} were unparseable")

    groups: dict[str, list[tuple[int, SvaBlock, list[SvaBlock]]]] = {}
    for entry in candidates:
        groups.setdefault(normalize_code(entry[1].code), []).append(entry)
    winner_key = max(groups, key=lambda key: (len(groups[key]), -groups[key][0][0]))
    index, block, covers = groups[winner_key][0]
    ctx.log(
        LogLevel.INFO, Stage.SVA,
        f"vote for {item.id}: {len(groups[winner_key])}/{len(candidates)} for sample {index}",
    )
    return (
        SvaProperty(
            id=item.id,
            plan_item_id=item.id,
            code=block.code,
            revision=0,
            origin=Origin.VOTE,
            status=PropertyStatus.ACCEPTED,
        ),
        covers,
    )


def prove_stage(
    properties: list[SvaProperty],
    rtl_sources: list[dict],
    adapter,
    *,
    cover_blocks: list[SvaBlock],
    ctx: PipelineContext,
    stage: Stage = Stage.PROVE,
) -> ProverResult:
    """Submit accepted assertions plus collected covers; map verdicts back
    onto property statuses."""
    blocks = [SvaBlock(code=p.code, kind="assert", label=p.id) for p in properties]
    blocks += cover_blocks
    try:
        result = adapter.prove(rtl_sources, blocks)
    except Exception as exc:  # adapter failure fails the run at this stage
        raise PipelineError(stage, f"prover adapter failed: {exc}") from exc
    status_map = {
        AssertStatus.PROVEN: PropertyStatus.PROVEN,
        AssertStatus.CEX: PropertyStatus.CEX,
        AssertStatus.INCONCLUSIVE: PropertyStatus.INCONCLUSIVE,
        AssertStatus.ERROR: PropertyStatus.INCONCLUSIVE,
    }
    for prop in properties:
        verdict = result.assertions[prop.id]
        prop.status = status_map[verdict.status]
    ctx.log(
        LogLevel.INFO, stage,
        f"prover verdicts: {result.n_proven} proven, {result.n_cex} cex, "
        f"{len(result.assertions) - result.n_proven - result.n_cex} other",
    )
    return result


VERDICT_LINE_RE = re.compile(r"^\s*(RTL_BUG|BAD_PROPERTY)\b[:.]?\s*(.*)$")


def analyze_cex(
    prop: SvaProperty,
    trace: CexTrace | None,
    analyst: AgentSpec,
    gateway,
    *,
    ctx: PipelineContext,
) -> CexAnalysis:
    """Ask the analyst for a verdict on a falsified assertion. Unparseable
    verdicts are recorded as INCONCLUSIVE and leave the property at CEX."""
    task = ctx.task(assets.TASK_CEX)
    reply = ctx.ask(analyst, cex_prompt(task, prop.id, prop.code, trace), Stage.CEX_ANALYSIS)
    first_line = next((line for line in reply.splitlines() if line.strip()), "")
    match = VERDICT_LINE_RE.match(first_line)
    if not match:
        return CexAnalysis(CexVerdict.INCONCLUSIVE, explanation=reply.strip())
    verdict = CexVerdict(match.group(1))
    if verdict is CexVerdict.BAD_PROPERTY:
        block, _covers = _split_reply_blocks(reply)
        if block is None:
            return CexAnalysis(CexVerdict.INCONCLUSIVE, explanation=reply.strip())
        return CexAnalysis(verdict, explanation=reply.strip(), revised_code=block.code)
    return CexAnalysis(verdict, explanation=reply.strip())


def coverage_feedback(
    coverage: CoverageReport,
    lead: AgentSpec,
    gateway,
    vplan: VPlan,
    *,
    ctx: PipelineContext,
) -> list[PlanItem]:
    """One bounded feedback round: full coverage asks for nothing; otherwise
    the lead may suggest new OPEN items, which are appended to the plan."""
    if coverage.rate >= 100.0:
        return []
    task = ctx.task(assets.TASK_COVERAGE)
    reply = ctx.ask(
        lead,
        coverage_prompt(
            task,
            coverage.n_covered,
            coverage.n_unreachable,
            coverage.rate,
            [item.description for item in vplan.items],
        ),
        Stage.FEEDBACK,
    )
    if reply.strip().upper().startswith("NONE"):
        return []
    new_items = []
    for description in parse_item_list(reply):
        item = PlanItem(id=vplan.next_id(), description=description)
        vplan.items.append(item)
        new_items.append(item)
    return new_items


# ---------------------------------------------------------------------------
# The full run
# ---------------------------------------------------------------------------

def render_report_md(record: RunRecord) -> str:
    lines = [
        "# Verification run report",
        "",
        f"- run id: {record.run_id}",
        f"- outcome: {record.outcome.value}",
        f"- stage reached: {record.stage_reached.value}",
        "",
        "## KPI summary",
        "",
    ]
    kpi = record.kpi
    if kpi is not None:
        lines += [
            "| properties | proven | proven rate | coverage rate |",
            "|---|---|---|---|",
            f"| {kpi.n_properties} | {kpi.n_proven} | {format_pct(kpi.proven_rate)} | {format_pct(kpi.coverage_rate)} |",
        ]
    else:
        lines.append("(no KPIs: run did not reach the report stage)")
    lines += ["", "## Properties", ""]
    if record.properties:
        lines += [
            "| id | status | revision | origin |",
            "|---|---|---|---|",
        ]
        for prop in record.properties:
            lines.append(f"| {prop.id} | {prop.status.value} | {prop.revision} | {prop.origin.value} |")
    else:
        lines.append("(none)")
    if record.findings:
        lines += ["", "## Findings", ""]
        for finding in record.findings:
            lines.append(f"- {finding['property_id']}: {finding['verdict']} - {finding['explanation']}")
    lines += [
        "",
        "## Coverage",
        "",
        f"- covered: {record.coverage.n_covered}",
        f"- unreachable: {record.coverage.n_unreachable}",
        f"- rate: {format_pct(record.coverage.rate)}",
        "",
    ]
    return "\n".join(lines)


def run_pipeline(
    config: RunConfig,
    agents: dict[str, AgentSpec],
    tasks: list[TaskSpec],
    gateway,
    adapter,
    hil: HilSession | None = None,
    *,
    run_dir: tuple[str, Path] | None = None,
    transcript: TranscriptLog | None = None,
    console_level: LogLevel = LogLevel.WARN,
    on_stage=None,
) -> RunRecord:
    """Execute the sequential verification flow end to end, persisting the
    run record and artifacts under the run directory."""
    config.validate()
    hil = hil or HilSession.auto_skip(config.hil_mode)
    if hil.mode is not config.hil_mode:
        hil = HilSession(mode=config.hil_mode, human=hil.human)

    if run_dir is None:
        writer = open_run(config.out_dir, console_level=console_level)
    else:
        run_id, path = run_dir
        writer = RunWriter(run_id, path, console_level=console_level)
    if transcript is None:
        transcript = TranscriptLog(writer)
    elif transcript.writer is None:
        transcript.writer = writer

    task_map = {t.name: t for t in tasks}
    ctx = PipelineContext(
        config=config, tasks=task_map, agents=agents, gateway=gateway,
        writer=writer, transcript=transcript,
    )
    record = RunRecord(run_id=writer.run_id, config=config, run_dir=writer.run_dir)

    cover_blocks: dict[str, SvaBlock] = {}

    def enter(stage: Stage) -> None:
        record.stage_reached = stage
        ctx.log(LogLevel.INFO, stage, "stage started")
        if on_stage is not None:
            on_stage(stage)

    try:
        try:
            enter(Stage.VPLAN)
            spec = DesignSpec.load(config.spec_path, config.rtl_paths)
            vplan_task = ctx.task(assets.TASK_VPLAN)
            lead = ctx.agent_for(vplan_task)
            record.vplan = generate_vplan(spec, lead, gateway, ctx=ctx)
            writer.save_artifact("vplan", record.vplan.render_markdown())

            enter(Stage.SVA)
            property_task = ctx.task(assets.TASK_PROPERTY)
            review_task = ctx.task(assets.TASK_REVIEW)
            engineer = ctx.agent_for(property_task)
            critic = ctx.agent_for(review_task)

            def produce(item: PlanItem) -> SvaProperty:
                if config.vote_samples > 0:
                    prop, covers = sample_and_vote(
                        item, engineer, gateway, config.vote_samples, spec=spec, ctx=ctx
                    )
                    vote_block = ensure_label(SvaBlock(code=prop.code), item.id)
                    if lint_sva(vote_block, spec.port_list).ok:
                        for cover in covers:
                            cover_blocks.setdefault(cover.label or f"c{len(cover_blocks) + 1}", cover)
                        return prop
                    ctx.log(
                        LogLevel.WARN, Stage.SVA,
                        f"vote winner for {item.id} failed lint; entering the critic loop",
                    )
                    prop, covers = generate_and_refine_sva(
                        item, engineer, critic, gateway, hil, config.max_iter,
                        spec=spec, ctx=ctx, initial_code=prop.code,
                    )
                else:
                    prop, covers = generate_and_refine_sva(
                        item, engineer, critic, gateway, hil, config.max_iter,
                        spec=spec, ctx=ctx,
                    )
                for cover in covers:
                    cover_blocks.setdefault(cover.label or f"c{len(cover_blocks) + 1}", cover)
                return prop

            for item in record.vplan.open_items():
                prop = produce(item)
                record.properties.append(prop)
                item.status = PlanStatus.COVERED_BY_SVA
            writer.save_artifact("vplan", record.vplan.render_markdown())

            enter(Stage.PROVE)
            result = prove_stage(
                record.properties, spec.rtl_sources, adapter,
                cover_blocks=list(cover_blocks.values()), ctx=ctx,
            )
            record.prover_result = result

            enter(Stage.CEX_ANALYSIS)
            cex_task = ctx.task(assets.TASK_CEX)
            analyst = ctx.agent_for(cex_task)
            revised_any = False
            for prop in record.properties:
                if prop.status is not PropertyStatus.CEX:
                    continue
                verdict = result.assertions[prop.id]
                if verdict.trace is not None:
                    writer.save_artifact(f"cex/{prop.id}", json.dumps(verdict.trace.to_json(), indent=2))
                analysis = analyze_cex(prop, verdict.trace, analyst, gateway, ctx=ctx)
                if analysis.verdict is CexVerdict.BAD_PROPERTY and analysis.revised_code:
                    prop.status = PropertyStatus.DRAFT
                    item = next(i for i in record.vplan.items if i.id == prop.plan_item_id)
                    revised, covers = generate_and_refine_sva(
                        item, engineer, critic, gateway, hil, config.max_iter,
                        spec=spec, ctx=ctx,
                        initial_code=analysis.revised_code,
                        base_revision=prop.revision + 1,
                    )
                    prop.code = revised.code
                    prop.revision = revised.revision
                    prop.origin = revised.origin
                    prop.status = PropertyStatus.ACCEPTED
                    for cover in covers:
                        cover_blocks.setdefault(cover.label or f"c{len(cover_blocks) + 1}", cover)
                    revised_any = True
                elif analysis.verdict is CexVerdict.RTL_BUG:
                    record.findings.append(
                        {
                            "property_id": prop.id,
                            "verdict": analysis.verdict.value,
                            "explanation": analysis.explanation,
                        }
                    )
                else:
                    ctx.log(
                        LogLevel.WARN, Stage.CEX_ANALYSIS,
                        f"analysis for {prop.id} inconclusive; property stays CEX",
                    )

            enter(Stage.COVERAGE)
            record.coverage = CoverageReport.from_prover(result)

            enter(Stage.FEEDBACK)
            new_items = coverage_feedback(record.coverage, lead, gateway, record.vplan, ctx=ctx)
            for item in new_items:
                prop = produce(item)
                record.properties.append(prop)
                item.status = PlanStatus.COVERED_BY_SVA
            if new_items:
                writer.save_artifact("vplan", record.vplan.render_markdown())

            if new_items or revised_any:
                enter(Stage.REPROVE)
                result = prove_stage(
                    record.properties, spec.rtl_sources, adapter,
                    cover_blocks=list(cover_blocks.values()), ctx=ctx,
                    stage=Stage.REPROVE,
                )
                record.prover_result = result
                record.coverage = CoverageReport.from_prover(result)

            enter(Stage.REPORT)
            n_properties = len(record.properties)
            n_proven = sum(1 for p in record.properties if p.status is PropertyStatus.PROVEN)
            record.kpi = KpiSummary.from_counts(
                n_properties, n_proven,
                coverage_rate=record.coverage.rate if n_properties else 0.0,
            )
            checker_blocks = [
                SvaBlock(code=p.code, kind="assert", label=p.id) for p in record.properties
            ] + list(cover_blocks.values())
            writer.save_artifact("properties", render_checker(checker_blocks))
            writer.save_artifact("coverage", json.dumps(record.coverage.to_json(), indent=2))
            record.outcome = Outcome.SUCCESS
            writer.save_artifact("report", render_report_md(record))
            ctx.log(LogLevel.INFO, Stage.REPORT, "run completed")
        except AbortRun as abort:
            record.outcome = Outcome.ABORTED
            ctx.log(LogLevel.WARN, record.stage_reached, str(abort))
        except PipelineError as err:
            record.outcome = Outcome.FAILED
            record.stage_reached = err.stage
            if record.kpi is None:
                record.kpi = KpiSummary(0, 0, 0.0, 0.0, run_success=False)
            ctx.log(LogLevel.ERROR, err.stage, str(err))
        except Exception as err:  # gateway/adapter failures fail the run at its current stage
            record.outcome = Outcome.FAILED
            if record.kpi is None:
                record.kpi = KpiSummary(0, 0, 0.0, 0.0, run_success=False)
            ctx.log(LogLevel.ERROR, record.stage_reached, f"{type(err).__name__}: {err}")
    finally:
        if record.kpi is not None:
            record.kpi.run_success = record.outcome is Outcome.SUCCESS
        writer.write_index(record.to_json())
        writer.close()
    return record
