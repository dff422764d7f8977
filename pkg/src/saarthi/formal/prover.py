"""Prover backends and the pinned result-file protocol.

A backend proves a set of lint-clean SVA blocks against RTL sources and
returns per-property verdicts. The mock backend serves fixtures; the
subprocess backend writes a task directory (design.f, props.sva, run.sh),
invokes a configured command, and parses results.txt:

    assert <id> proven|cex [trace=<path>]
    cover <id> covered|unreachable

Counterexample traces are JSON files: {failing_property, steps: [{time,
signals: {name: value}}]}.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from saarthi.formal.sva import SvaBlock, render_checker


class AssertStatus(str, Enum):
    PROVEN = "Proven"
    CEX = "Cex"
    INCONCLUSIVE = "Inconclusive"
    ERROR = "Error"


class CoverStatus(str, Enum):
    COVERED = "Covered"
    UNREACHABLE = "Unreachable"


class ProverError(RuntimeError):
    pass


class ProverLogError(ProverError):
    """Result-file syntax error, positioned at the offending line."""

    def __init__(self, line_no: int, line: str, reason: str):
        super().__init__(f"results line {line_no}: {reason}: {line!r}")
        self.line_no = line_no
        self.line = line


@dataclass
class CexTrace:
    failing_property: str
    steps: list[dict]  # [{"time": int, "signals": {name: value}}]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("CEX trace must have at least one step")
        times = [step["time"] for step in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("CEX trace cycle indices must be strictly increasing")

    def to_json(self) -> dict:
        return {"failing_property": self.failing_property, "steps": self.steps}

    @staticmethod
    def from_json(payload: dict) -> "CexTrace":
        return CexTrace(failing_property=payload["failing_property"], steps=payload["steps"])


@dataclass
class AssertionVerdict:
    status: AssertStatus
    trace: CexTrace | None = None
    trace_path: str | None = None
    diagnostic: str | None = None


@dataclass
class CoverVerdict:
    status: CoverStatus


@dataclass
class ProverResult:
    assertions: dict[str, AssertionVerdict] = field(default_factory=dict)
    covers: dict[str, CoverVerdict] = field(default_factory=dict)
    wall_time: float = field(default=0.0, compare=False)

    @property
    def n_proven(self) -> int:
        return sum(1 for v in self.assertions.values() if v.status is AssertStatus.PROVEN)

    @property
    def n_cex(self) -> int:
        return sum(1 for v in self.assertions.values() if v.status is AssertStatus.CEX)

    @property
    def n_covered(self) -> int:
        return sum(1 for v in self.covers.values() if v.status is CoverStatus.COVERED)

    @property
    def n_unreachable(self) -> int:
        return sum(1 for v in self.covers.values() if v.status is CoverStatus.UNREACHABLE)


def parse_prover_log(text: str) -> ProverResult:
    """Parse the pinned result format. Total over the grammar; an assert line
    with an unknown status word yields an Error verdict carrying the word as
    a diagnostic, while structurally invalid lines raise a positioned
    ProverLogError."""
    result = ProverResult()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        head = parts[0]
        if head == "assert":
            if len(parts) < 3:
                raise ProverLogError(line_no, raw, "expected 'assert <id> <status>'")
            pid, status_word = parts[1], parts[2]
            trace_path = None
            for extra in parts[3:]:
                if extra.startswith("trace="):
                    trace_path = extra[len("trace="):]
                else:
                    raise ProverLogError(line_no, raw, f"unexpected token {extra!r}")
            if status_word == "proven":
                verdict = AssertionVerdict(AssertStatus.PROVEN)
            elif status_word == "cex":
                verdict = AssertionVerdict(AssertStatus.CEX, trace_path=trace_path)
            elif status_word == "inconclusive":
                verdict = AssertionVerdict(AssertStatus.INCONCLUSIVE)
            else:
                verdict = AssertionVerdict(
                    AssertStatus.ERROR, diagnostic=f"unknown status word {status_word!r}"
                )
            result.assertions[pid] = verdict
        elif head == "cover":
            if len(parts) != 3:
                raise ProverLogError(line_no, raw, "expected 'cover <id> <status>'")
            cid, status_word = parts[1], parts[2]
            if status_word == "covered":
                result.covers[cid] = CoverVerdict(CoverStatus.COVERED)
            elif status_word == "unreachable":
                result.covers[cid] = CoverVerdict(CoverStatus.UNREACHABLE)
            else:
                raise ProverLogError(line_no, raw, f"unknown cover status {status_word!r}")
        else:
            raise ProverLogError(line_no, raw, f"unknown record type {head!r}")
    return result


def _split_ids(blocks: list[SvaBlock]) -> tuple[list[str], list[str]]:
    assert_ids: list[str] = []
    cover_ids: list[str] = []
    for i, block in enumerate(blocks):
        label = block.label or f"u{i}"
        if block.kind == "cover":
            cover_ids.append(label)
        else:
            assert_ids.append(label)
    return assert_ids, cover_ids


def _reconcile(
    result: ProverResult, assert_ids: list[str], cover_ids: list[str]
) -> ProverResult:
    """Force the result onto exactly the submitted id set: missing ids get
    Error verdicts, phantom ids are dropped."""
    out = ProverResult(wall_time=result.wall_time)
    for pid in assert_ids:
        out.assertions[pid] = result.assertions.get(
            pid, AssertionVerdict(AssertStatus.ERROR, diagnostic="missing from results")
        )
    for cid in cover_ids:
        if cid in result.covers:
            out.covers[cid] = result.covers[cid]
        else:
            out.covers[cid] = CoverVerdict(CoverStatus.UNREACHABLE)
    return out


class MockProver:
    """Scripted backend: verdicts come from a fixture map keyed by property
    id. Unmapped assertions default to Inconclusive (fail-safe), unmapped
    covers to Unreachable. A fixture value may be a list of verdicts consumed
    one per prove() call, letting tests script "CEX first, proven after the
    fix". Immutable after construction apart from list consumption."""

    def __init__(
        self,
        assert_fixture: dict[str, AssertStatus | list] | None = None,
        cover_fixture: dict[str, CoverStatus | list] | None = None,
        traces: dict[str, CexTrace] | None = None,
    ):
        self._asserts = dict(assert_fixture or {})
        self._covers = dict(cover_fixture or {})
        self._traces = dict(traces or {})

    def _next(self, fixture: dict, key: str):
        value = fixture.get(key)
        if isinstance(value, list):
            return value.pop(0) if value else None
        return value

    def prove(self, rtl_sources: list[dict], blocks: list[SvaBlock]) -> ProverResult:
        start = time.monotonic()
        assert_ids, cover_ids = _split_ids(blocks)
        result = ProverResult()
        for pid in assert_ids:
            status = self._next(self._asserts, pid) or AssertStatus.INCONCLUSIVE
            status = AssertStatus(status)
            trace = self._traces.get(pid) if status is AssertStatus.CEX else None
            result.assertions[pid] = AssertionVerdict(status, trace=trace)
        for cid in cover_ids:
            status = self._next(self._covers, cid) or CoverStatus.UNREACHABLE
            result.covers[cid] = CoverVerdict(CoverStatus(status))
        result.wall_time = time.monotonic() - start
        return result


class SubprocessProver:
    """Drives an external engine through the pinned task-directory protocol.

    Each prove() call gets an isolated task directory, so concurrent calls
    do not interfere processing.
    """

    def __init__(self, command: list[str], workdir: Path | str | None = None, timeout: float = 300.0):
        self.command = list(command)
        self.workdir = Path(workdir) if workdir else None
        self.timeout = timeout
        self._task_counter = 0

    def _new_task_dir(self) -> Path:
        import tempfile

        if self.workdir:
            self.workdir.mkdir(parents=True, exist_ok=True)
            return Path(tempfile.mkdtemp(prefix="task-", dir=self.workdir))
        return Path(tempfile.mkdtemp(prefix="saarthi-task-"))

    def prove(self, rtl_sources: list[dict], blocks: list[SvaBlock]) -> ProverResult:
        start = time.monotonic()
        task_dir = self._new_task_dir()
        rtl_dir = task_dir / "rtl"
        rtl_dir.mkdir(exist_ok=True)
        listed: list[str] = []
        for source in rtl_sources:
            name = Path(source["path"]).name
            (rtl_dir / name).write_text(source["content"])
            listed.append(f"rtl/{name}")
        (task_dir / "design.f").write_text("\n".join(listed) + ("\n" if listed else ""))
        (task_dir / "props.sva").write_text(render_checker(blocks))
        hook = "#!/bin/sh\nexec " + " ".join(shlex.quote(part) for part in self.command) + ' "$@"\n'
        run_sh = task_dir / "run.sh"
        run_sh.write_text(hook)
        run_sh.chmod(0o755)

        proc = subprocess.run(
            self.command + [str(task_dir)],
            capture_output=True,
            text=True,
            timeout=self.timeout,
        )
        results_path = task_dir / "results.txt"
        assert_ids, cover_ids = _split_ids(blocks)
        if not results_path.exists():
            if proc.returncode != 0:
                diag = f"prover exited {proc.returncode} without results: {proc.stderr.strip()[:200]}"
                result = ProverResult(
                    assertions={
                        pid: AssertionVerdict(AssertStatus.ERROR, diagnostic=diag) for pid in assert_ids
                    },
                    covers={cid: CoverVerdict(CoverStatus.UNREACHABLE) for cid in cover_ids},
                )
                result.wall_time = time.monotonic() - start
                return result
            raise ProverError(f"prover exited 0 but produced no results.txt in {task_dir}")

        parsed = parse_prover_log(results_path.read_text())
        for verdict in parsed.assertions.values():
            if verdict.trace_path and verdict.trace is None:
                trace_file = task_dir / verdict.trace_path
                if trace_file.exists():
                    verdict.trace = CexTrace.from_json(json.loads(trace_file.read_text()))
        result = _reconcile(parsed, assert_ids, cover_ids)
        result.wall_time = time.monotonic() - start
        return result
