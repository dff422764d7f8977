"""Timestamp-organized run persistence: directories, multi-level logs,
artifacts, and an index for listing and reloading runs.

Layout per run:
    <run_id>/{events.jsonl, transcript.jsonl, vplan.md, properties.sva,
              coverage.json, report.md, cex/*.json, index.json}

Artifact writes are atomic (temp file + rename), so readers never observe a
truncated file under its logical name.
"""

from __future__ import annotations

import json
import os
import secrets
import string
import sys
import tempfile
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from saarthi.conversation import Message

LOGICAL_FILES = {
    "vplan": "vplan.md",
    "properties": "properties.sva",
    "report": "report.md",
    "transcript": "transcript.jsonl",
    "coverage": "coverage.json",
}

_SUFFIX_ALPHABET = string.ascii_lowercase + string.digits


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARN = "WARN"
    ERROR = "ERROR"


_LEVEL_ORDER = {LogLevel.DEBUG: 0, LogLevel.INFO: 1, LogLevel.WARN: 2, LogLevel.ERROR: 3}


class RunStoreError(RuntimeError):
    pass


class CorruptRunError(RunStoreError):
    pass


@dataclass
class LogEvent:
    level: LogLevel
    stage: str
    message: str
    agent: str | None = None
    timestamp: str = ""

    def __post_init__(self) -> None:
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()

    def to_json(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "level": self.level.value,
            "agent": self.agent,
            "stage": self.stage,
            "message": self.message,
        }


@dataclass
class ArtifactIndex:
    run_id: str
    created: str
    files: dict[str, str] = field(default_factory=dict)
    record: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "created": self.created,
            "files": self.files,
            "record": self.record,
        }

    @staticmethod
    def from_json(payload: dict) -> "ArtifactIndex":
        return ArtifactIndex(
            run_id=payload["run_id"],
            created=payload["created"],
            files=payload.get("files", {}),
            record=payload.get("record", {}),
        )


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def create_run_dir(base: Path | str, now: datetime | None = None) -> tuple[str, Path]:
    """Create a collision-free run directory named
    <UTC yyyymmdd-HHMMSS>-<4-char suffix>."""
    base = Path(base)
    base.mkdir(parents=True, exist_ok=True)
    stamp = (now or utc_now()).astimezone(timezone.utc).strftime("%Y%m%d-%H%M%S")
    for _attempt in range(64):
        suffix = "".join(secrets.choice(_SUFFIX_ALPHABET) for _ in range(4))
        run_id = f"{stamp}-{suffix}"
        try:
            (base / run_id).mkdir()
        except FileExistsError:
            continue
        return run_id, base / run_id
    raise RunStoreError(f"could not allocate a unique run directory under {base}")


def atomic_write(path: Path, content: str) -> None:
    """Write-temp-then-rename so a crash mid-write never exposes a torn file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


class RunWriter:
    """Single-writer handle for one run directory."""

    def __init__(self, run_id: str, run_dir: Path, console_level: LogLevel = LogLevel.INFO):
        self.run_id = run_id
        self.run_dir = Path(run_dir)
        self.console_level = console_level
        self.created = utc_now().isoformat()
        self._open = True
        self._lock = threading.Lock()
        self._files: dict[str, str] = {}
        self._last_event_ts = ""

    def _require_open(self) -> None:
        if not self._open:
            raise RunStoreError(f"run {self.run_id} is closed")

    def append_log(self, event: LogEvent, console=sys.stderr) -> None:
        self._require_open()
        with self._lock:
            if self._last_event_ts and event.timestamp < self._last_event_ts:
                event.timestamp = self._last_event_ts
            self._last_event_ts = event.timestamp
            with (self.run_dir / "events.jsonl").open("a") as handle:
                handle.write(json.dumps(event.to_json()) + "\n")
        if _LEVEL_ORDER[event.level] >= _LEVEL_ORDER[self.console_level]:
            agent = f" [{event.agent}]" if event.agent else ""
            print(f"{event.timestamp} {event.level.value} {event.stage}{agent}: {event.message}", file=console)

    def log(self, level: LogLevel, stage: str, message: str, agent: str | None = None) -> None:
        self.append_log(LogEvent(level=level, stage=stage, message=message, agent=agent))

    def append_transcript(self, message: Message) -> None:
        self._require_open()
        with self._lock:
            with (self.run_dir / "transcript.jsonl").open("a") as handle:
                handle.write(json.dumps(message.to_json()) + "\n")
            self._files.setdefault("transcript", LOGICAL_FILES["transcript"])

    def save_artifact(self, name: str, content: str) -> Path:
        self._require_open()
        if name in LOGICAL_FILES:
            rel = LOGICAL_FILES[name]
        elif name.startswith("cex/"):
            rel = name if name.endswith(".json") else f"{name}.json"
        else:
            raise RunStoreError(f"unknown logical artifact name {name!r}")
        path = self.run_dir / rel
        atomic_write(path, content)
        with self._lock:
            self._files[name] = rel
        return path

    def write_index(self, record: dict) -> None:
        self._require_open()
        index = ArtifactIndex(
            run_id=self.run_id, created=self.created, files=dict(self._files), record=record
        )
        atomic_write(self.run_dir / "index.json", json.dumps(index.to_json(), indent=2))

    def close(self) -> None:
        self._open = False


def open_run(base: Path | str, console_level: LogLevel = LogLevel.INFO,
             now: datetime | None = None) -> RunWriter:
    run_id, run_dir = create_run_dir(base, now)
    return RunWriter(run_id, run_dir, console_level)


def load_index(run_dir: Path | str) -> ArtifactIndex:
    run_dir = Path(run_dir)
    index_path = run_dir / "index.json"
    if not index_path.exists():
        raise CorruptRunError(f"{run_dir}: missing index.json")
    try:
        return ArtifactIndex.from_json(json.loads(index_path.read_text()))
    except (ValueError, KeyError) as exc:
        raise CorruptRunError(f"{run_dir}: unreadable index.json: {exc}") from exc


def load_run(run_dir: Path | str) -> dict:
    """Reconstruct the persisted run record from index + files.

    SUCCESS runs must have every mandatory logical artifact on disk; partial
    (aborted/failed) runs load with whatever artifacts exist.
    """
    run_dir = Path(run_dir)
    index = load_index(run_dir)
    record = dict(index.record)
    record.setdefault("run_id", index.run_id)
    outcome = record.get("outcome")
    if outcome == "SUCCESS":
        for logical in ("vplan", "properties", "report", "transcript", "coverage"):
            rel = index.files.get(logical, LOGICAL_FILES[logical])
            if not (run_dir / rel).exists():
                raise CorruptRunError(f"{run_dir}: SUCCESS run missing artifact {logical} ({rel})")
    artifacts = {}
    for logical, rel in index.files.items():
        path = run_dir / rel
        if path.exists():
            artifacts[logical] = path.read_text()
    record["artifacts"] = artifacts
    record["run_dir"] = str(run_dir)
    return record


def list_runs(base: Path | str) -> list[dict]:
    base = Path(base)
    if not base.exists():
        return []
    runs = []
    for child in sorted(base.iterdir()):
        if child.is_dir() and (child / "index.json").exists():
            try:
                index = load_index(child)
            except CorruptRunError:
                continue
            runs.append(
                {
                    "run_id": index.run_id,
                    "created": index.created,
                    "outcome": index.record.get("outcome"),
                    "stage_reached": index.record.get("stage_reached"),
                    "run_dir": str(child),
                }
            )
    return runs
