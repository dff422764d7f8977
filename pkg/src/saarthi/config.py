"""Run configuration plus agent/task config loading.

Agent and task files use a restricted indentation-based key/value format:
a top-level ``name:`` opens an entry, indented ``key: value`` lines set
scalar fields, and ``key: >`` opens a folded text block whose deeper-indented
lines are joined with spaces. Unknown keys are rejected, and every config
error names the offending key and line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from saarthi.conversation import HilMode

DEFAULT_MAX_ITER = 5
DEFAULT_MAX_REPLIES = 3
DEFAULT_TEMPERATURE = 0.2


class Strategy(str, Enum):
    SEQUENTIAL = "sequential"


class ConfigError(RuntimeError):
    def __init__(self, source: str, line: int | None, message: str):
        location = f"{source}:{line}" if line is not None else source
        super().__init__(f"{location}: {message}")
        self.source = source
        self.line = line


@dataclass
class AgentSpec:
    name: str
    role: str
    goal: str
    backstory: str = ""
    allow_delegation: bool = False
    verbose: bool = False
    max_iter: int = DEFAULT_MAX_ITER


@dataclass
class TaskSpec:
    name: str
    description: str
    assigned_agent: str
    expected_output: str = ""


@dataclass
class RunConfig:
    spec_path: Path
    model_id: str
    rtl_paths: list[Path] = field(default_factory=list)
    strategy: Strategy = Strategy.SEQUENTIAL
    hil_mode: HilMode = HilMode.TERMINATE
    max_replies: int = DEFAULT_MAX_REPLIES
    max_iter: int = DEFAULT_MAX_ITER
    temperature: float = DEFAULT_TEMPERATURE
    vote_samples: int = 0
    out_dir: Path = Path("runs")
    service_mode: bool = False

    def validate(self) -> None:
        """Filesystem-level validation, run just before a run starts."""
        check_run_values(self.max_iter, self.max_replies, self.vote_samples, self.temperature)
        if not self.spec_path.exists():
            raise ConfigError(str(self.spec_path), None, "specification file does not exist")
        if not self.spec_path.read_text().strip():
            raise ConfigError(str(self.spec_path), None, "specification file is empty")
        for rtl in self.rtl_paths:
            if not rtl.exists():
                raise ConfigError(str(rtl), None, "RTL source does not exist")

    def to_json(self) -> dict:
        return {
            "spec_path": str(self.spec_path),
            "model_id": self.model_id,
            "rtl_paths": [str(p) for p in self.rtl_paths],
            "strategy": self.strategy.value,
            "hil_mode": self.hil_mode.value,
            "max_replies": self.max_replies,
            "max_iter": self.max_iter,
            "temperature": self.temperature,
            "vote_samples": self.vote_samples,
            "out_dir": str(self.out_dir),
            "service_mode": self.service_mode,
        }

    @staticmethod
    def from_json(payload: dict) -> "RunConfig":
        return RunConfig(
            spec_path=Path(payload["spec_path"]),
            model_id=payload["model_id"],
            rtl_paths=[Path(p) for p in payload.get("rtl_paths", [])],
            strategy=Strategy(payload.get("strategy", "sequential")),
            hil_mode=HilMode(payload.get("hil_mode", "TERMINATE")),
            max_replies=payload.get("max_replies", DEFAULT_MAX_REPLIES),
            max_iter=payload.get("max_iter", DEFAULT_MAX_ITER),
            temperature=payload.get("temperature", DEFAULT_TEMPERATURE),
            vote_samples=payload.get("vote_samples", 0),
            out_dir=Path(payload.get("out_dir", "runs")),
            service_mode=payload.get("service_mode", False),
        )


def check_run_values(max_iter: int, max_replies: int, vote_samples: int, temperature: float) -> None:
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if max_replies < 1:
        raise ValueError("max_replies must be >= 1")
    if vote_samples < 0 or (vote_samples > 0 and vote_samples % 2 == 0):
        raise ValueError("vote_samples must be 0 or odd")
    if not 0.0 <= temperature <= 2.0:
        raise ValueError("temperature must be in [0, 2]")


# ---------------------------------------------------------------------------
# Document parsing
# ---------------------------------------------------------------------------

_ENTRY_RE = re.compile(r"^([A-Za-z_][\w-]*)\s*:\s*$")
_KEY_RE = re.compile(r"^([A-Za-z_][\w-]*)\s*:\s*(.*)$")


def _parse_document(text: str, source: str) -> list[tuple[str, int, dict[str, tuple[str, int]]]]:
    """Parse the raw document into (entry name, line, {key: (value, line)})."""
    entries: list[tuple[str, int, dict[str, tuple[str, int]]]] = []
    names: set[str] = set()
    current: dict[str, tuple[str, int]] | None = None
    fold: tuple[str, int, int, list[str]] | None = None  # key, line, indent, parts

    def close_fold() -> None:
        nonlocal fold
        if fold is not None and current is not None:
            key, line, _indent, parts = fold
            current[key] = (" ".join(parts).strip(), line)
        fold = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        stripped = raw.strip()
        if stripped.startswith("#"):
            continue
        if fold is not None:
            if indent > fold[2]:
                fold[3].append(stripped)
                continue
            close_fold()
        if indent == 0:
            match = _ENTRY_RE.match(stripped)
            if not match:
                raise ConfigError(source, line_no, f"expected '<name>:' at top level, got {stripped!r}")
            name = match.group(1)
            if name in names:
                raise ConfigError(source, line_no, f"duplicate entry name {name!r}")
            names.add(name)
            current = {}
            entries.append((name, line_no, current))
        else:
            if current is None:
                raise ConfigError(source, line_no, "indented line before any entry")
            match = _KEY_RE.match(stripped)
            if not match:
                raise ConfigError(source, line_no, f"expected 'key: value', got {stripped!r}")
            key, value = match.group(1), match.group(2)
            if key in current:
                raise ConfigError(source, line_no, f"duplicate key {key!r}")
            if value in (">", ""):
                fold = (key, line_no, indent, [])
            else:
                current[key] = (value, line_no)
    close_fold()
    return entries


def _parse_bool(value: str, source: str, line: int, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes"):
        return True
    if lowered in ("false", "no"):
        return False
    raise ConfigError(source, line, f"key {key!r} expects true/false, got {value!r}")


def _parse_int(value: str, source: str, line: int, key: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise ConfigError(source, line, f"key {key!r} expects an integer, got {value!r}") from None


AGENT_KEYS = {"role", "goal", "backstory", "allow_delegation", "verbose", "max_iter"}
TASK_KEYS = {"description", "expected_output", "assigned_agent"}


def parse_agent_config(text: str, source: str = "<agents>") -> dict[str, AgentSpec]:
    """Order-insensitive agent map; every entry needs a non-empty role and
    goal, and unknown keys are rejected with their line number."""
    agents: dict[str, AgentSpec] = {}
    for name, entry_line, fields in _parse_document(text, source):
        for key, (_value, line) in fields.items():
            if key not in AGENT_KEYS:
                raise ConfigError(source, line, f"unknown agent key {key!r}")
        for required in ("role", "goal"):
            if required not in fields or not fields[required][0]:
                raise ConfigError(source, entry_line, f"agent {name!r} missing required key {required!r}")
        def bool_field(key: str, default: bool) -> bool:
            if key not in fields:
                return default
            value, line = fields[key]
            return _parse_bool(value, source, line, key)

        def int_field(key: str, default: int) -> int:
            if key not in fields:
                return default
            value, line = fields[key]
            return _parse_int(value, source, line, key)

        agents[name] = AgentSpec(
            name=name,
            role=fields["role"][0],
            goal=fields["goal"][0],
            backstory=fields.get("backstory", ("", entry_line))[0],
            allow_delegation=bool_field("allow_delegation", False),
            verbose=bool_field("verbose", False),
            max_iter=int_field("max_iter", DEFAULT_MAX_ITER),
        )
    return agents


def parse_task_config(
    text: str, agents: dict[str, AgentSpec], source: str = "<tasks>"
) -> list[TaskSpec]:
    """Order-preserving task list; assignment must resolve to a loaded agent."""
    tasks: list[TaskSpec] = []
    for name, entry_line, fields in _parse_document(text, source):
        for key, (_value, line) in fields.items():
            if key not in TASK_KEYS:
                raise ConfigError(source, line, f"unknown task key {key!r}")
        for required in ("description", "assigned_agent"):
            if required not in fields or not fields[required][0]:
                raise ConfigError(source, entry_line, f"task {name!r} missing required key {required!r}")
        assigned, assigned_line = fields["assigned_agent"]
        if assigned not in agents:
            raise ConfigError(source, assigned_line, f"task {name!r} references unknown agent {assigned!r}")
        tasks.append(
            TaskSpec(
                name=name,
                description=fields["description"][0],
                expected_output=fields.get("expected_output", ("", entry_line))[0],
                assigned_agent=assigned,
            )
        )
    return tasks


def load_agent_config(path: Path | str) -> dict[str, AgentSpec]:
    path = Path(path)
    return parse_agent_config(path.read_text(), source=str(path))


def load_task_config(path: Path | str, agents: dict[str, AgentSpec]) -> list[TaskSpec]:
    path = Path(path)
    return parse_task_config(path.read_text(), agents, source=str(path))
