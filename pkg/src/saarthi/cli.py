"""Command-line entry point.

    saarthi run --spec <path> [--rtl <path>...] --model <id>
                [--strategy sequential] [--hil never|terminate]
                [--max-replies N] [--max-iter N] [--temperature F]
                [--vote N] [--out DIR] [--serve]
    saarthi report --runs DIR
    saarthi bench --suite <manifest>

Model ids select the gateway: ``mock`` runs the bundled offline demo
backend, ``script:<file>`` replays a JSON list of replies, ``cassette:<file>``
replays a recorded cassette, anything else goes to the OpenAI-compatible
HTTP backend (SAARTHI_API_KEY / SAARTHI_BASE_URL). The prover defaults to
the mock; SAARTHI_PROVER_CMD switches to the subprocess adapter and
SAARTHI_PROVER_FIXTURE loads a mock fixture file.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from pathlib import Path

from saarthi import assets, demo
from saarthi.config import (
    DEFAULT_MAX_ITER,
    DEFAULT_MAX_REPLIES,
    DEFAULT_TEMPERATURE,
    RunConfig,
    Strategy,
    check_run_values,
    load_agent_config,
    load_task_config,
    parse_agent_config,
    parse_task_config,
)
from saarthi.conversation import HilChoice, HilDecision, HilMode
from saarthi.formal.prover import AssertStatus, CexTrace, CoverStatus, MockProver, SubprocessProver
from saarthi.gateway import CassetteBackend, HttpBackend, ScriptedBackend
from saarthi.metrics import (
    BenchmarkMatrix,
    Complexity,
    KpiSummary,
    format_pct,
    render_report,
    success_rate,
)
from saarthi.pipeline import HilSession, Outcome, run_pipeline
from saarthi.runstore import RunStoreError, list_runs, load_run


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", required=True, help="design specification file")
    parser.add_argument("--rtl", action="append", default=[], help="RTL source (repeatable)")
    parser.add_argument("--model", required=True, help="chat model id")
    parser.add_argument("--strategy", default="sequential", choices=["sequential"])
    parser.add_argument("--hil", default="terminate", choices=["never", "terminate"])
    parser.add_argument("--max-replies", type=int, default=DEFAULT_MAX_REPLIES)
    parser.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    parser.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE)
    parser.add_argument("--vote", type=int, default=0, help="sampling-and-voting count (0 disables)")
    parser.add_argument("--out", default="runs", help="run output directory")
    parser.add_argument("--serve", action="store_true", help="start the HTTP service instead of one run")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8741)
    parser.add_argument("--cors", action="store_true", help="permissive CORS for the dashboard")
    parser.add_argument("--agents", default=None, help="agent config file (default: built-in)")
    parser.add_argument("--tasks", default=None, help="task config file (default: built-in)")


def _namespace_to_config(parser: argparse.ArgumentParser, ns: argparse.Namespace) -> RunConfig:
    try:
        check_run_values(ns.max_iter, ns.max_replies, ns.vote, ns.temperature)
    except ValueError as exc:
        parser.error(str(exc))
    return RunConfig(
        spec_path=Path(ns.spec),
        model_id=ns.model,
        rtl_paths=[Path(p) for p in ns.rtl],
        strategy=Strategy(ns.strategy),
        hil_mode=HilMode.NEVER if ns.hil == "never" else HilMode.TERMINATE,
        max_replies=ns.max_replies,
        max_iter=ns.max_iter,
        temperature=ns.temperature,
        vote_samples=ns.vote,
        out_dir=Path(ns.out),
        service_mode=ns.serve,
    )


def parse_cli_args(argv: list[str]) -> RunConfig:
    """Parse run-command flags into a RunConfig. Usage errors exit nonzero."""
    parser = argparse.ArgumentParser(prog="saarthi run")
    _add_run_flags(parser)
    ns = parser.parse_args(argv)
    return _namespace_to_config(parser, ns)


def config_to_argv(config: RunConfig) -> list[str]:
    """Inverse of parse_cli_args: flags that parse back to an equal config."""
    argv = [
        "--spec", str(config.spec_path),
        "--model", config.model_id,
        "--strategy", config.strategy.value,
        "--hil", config.hil_mode.value.lower(),
        "--max-replies", str(config.max_replies),
        "--max-iter", str(config.max_iter),
        "--temperature", str(config.temperature),
        "--vote", str(config.vote_samples),
        "--out", str(config.out_dir),
    ]
    for rtl in config.rtl_paths:
        argv += ["--rtl", str(rtl)]
    if config.service_mode:
        argv.append("--serve")
    return argv


# ---------------------------------------------------------------------------
# Backend factories (shared by CLI and service)
# ---------------------------------------------------------------------------

def build_gateway(config: RunConfig):
    model = config.model_id
    if model == "mock":
        return ScriptedBackend(demo.demo_replies())
    if model.startswith("script:"):
        replies = json.loads(Path(model[len("script:"):]).read_text())
        return ScriptedBackend(list(replies))
    if model.startswith("cassette:"):
        return CassetteBackend(Path(model[len("cassette:"):]), mode="replay")
    return HttpBackend.from_env()


def _load_prover_fixture(path: Path) -> MockProver:
    payload = json.loads(path.read_text())

    def statuses(raw, enum):
        if isinstance(raw, list):
            return [enum(v) for v in raw]
        return enum(raw)

    return MockProver(
        assert_fixture={k: statuses(v, AssertStatus) for k, v in payload.get("assertions", {}).items()},
        cover_fixture={k: statuses(v, CoverStatus) for k, v in payload.get("covers", {}).items()},
        traces={k: CexTrace.from_json(v) for k, v in payload.get("traces", {}).items()},
    )


def build_prover(config: RunConfig):
    command = os.environ.get("SAARTHI_PROVER_CMD")
    if command:
        return SubprocessProver(shlex.split(command))
    fixture = os.environ.get("SAARTHI_PROVER_FIXTURE")
    if fixture:
        return _load_prover_fixture(Path(fixture))
    if config.model_id == "mock":
        return demo.demo_prover()
    return MockProver()


def build_agents_and_tasks(agents_path: str | None, tasks_path: str | None):
    if agents_path:
        agents = load_agent_config(agents_path)
    else:
        agents = parse_agent_config(assets.DEFAULT_AGENTS_CFG, source="<built-in agents>")
    if tasks_path:
        tasks = load_task_config(tasks_path, agents)
    else:
        tasks = parse_task_config(assets.DEFAULT_TASKS_CFG, agents, source="<built-in tasks>")
    return agents, tasks


def interactive_hil(mode: HilMode, stdin=None, stdout=None) -> HilSession:
    """Terminal HIL: prompt the operator on escalation. On a non-interactive
    stdin the escalation auto-SKIPs (keeps the flow moving) with a notice."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def human(message) -> HilDecision:
        if not hasattr(stdin, "isatty") or not stdin.isatty():
            print("[hil] non-interactive session: SKIP (accepting latest draft)", file=sys.stderr)
            return HilDecision(HilChoice.SKIP)
        print("\n[hil] intervention requested:\n" + message.content, file=stdout)
        print("[hil] choose: terminate / skip / intercept", file=stdout)
        while True:
            choice = stdin.readline().strip().lower()
            if choice in ("terminate", "t"):
                return HilDecision(HilChoice.TERMINATE)
            if choice in ("skip", "s"):
                return HilDecision(HilChoice.SKIP)
            if choice in ("intercept", "i"):
                print("[hil] enter replacement SVA, end with a lone '.'", file=stdout)
                lines = []
                while True:
                    line = stdin.readline()
                    if not line or line.strip() == ".":
                        break
                    lines.append(line.rstrip("\n"))
                return HilDecision(HilChoice.INTERCEPT, "\n".join(lines) or "TERMINATE")
            print("[hil] please answer terminate, skip, or intercept", file=stdout)

    return HilSession(mode=mode, human=human)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_run(parser: argparse.ArgumentParser, ns: argparse.Namespace) -> int:
    config = _namespace_to_config(parser, ns)
    config.validate()
    agents, tasks = build_agents_and_tasks(ns.agents, ns.tasks)

    if config.service_mode:
        from saarthi.service import serve

        serve(config, agents, tasks, host=ns.host, port=ns.port, cors=ns.cors)
        return 0

    gateway = build_gateway(config)
    prover = build_prover(config)
    hil = interactive_hil(config.hil_mode)
    record = run_pipeline(config, agents, tasks, gateway, prover, hil)
    print(f"run {record.run_id}: {record.outcome.value} (stage {record.stage_reached.value})")
    if record.kpi:
        print(
            f"properties={record.kpi.n_properties} proven={record.kpi.n_proven} "
            f"proven_rate={format_pct(record.kpi.proven_rate)} "
            f"coverage={format_pct(record.kpi.coverage_rate)}"
        )
    print(f"artifacts: {record.run_dir}")
    return 0 if record.outcome is Outcome.SUCCESS else 1


def cmd_report(ns: argparse.Namespace) -> int:
    runs = list_runs(Path(ns.runs))
    if not runs:
        print(f"no runs under {ns.runs}")
        return 1
    outcomes = []
    print(f"{'run id':24} {'outcome':8} {'stage':12} props proven coverage")
    for entry in runs:
        try:
            record = load_run(entry["run_dir"])
        except RunStoreError as exc:
            print(f"{entry['run_id']:24} (unreadable: {exc})")
            continue
        kpi = record.get("kpi") or {}
        outcomes.append(record.get("outcome") == "SUCCESS")
        print(
            f"{record['run_id']:24} {record.get('outcome', '?'):8} "
            f"{record.get('stage_reached', '?'):12} "
            f"{kpi.get('n_properties', 0):5} {kpi.get('n_proven', 0):6} "
            f"{format_pct(kpi.get('coverage_rate', 0.0)):>8}"
        )
    if not outcomes:
        print("no readable runs")
        return 1
    print(f"\nsuccess rate: {format_pct(success_rate(outcomes))} over {len(outcomes)} runs")
    return 0


def cmd_bench(ns: argparse.Namespace) -> int:
    manifest_path = Path(ns.suite)
    payload = json.loads(manifest_path.read_text())
    if isinstance(payload, list):
        designs, models, attempts = payload, ["mock"], 1
    else:
        designs = payload["designs"]
        models = payload.get("models", ["mock"])
        attempts = payload.get("attempts", 1)

    base = manifest_path.parent
    out_dir = Path(ns.out)
    matrix = BenchmarkMatrix()
    outcomes: dict[tuple[str, str, int], str] = {}
    run_outcomes: list[bool] = []
    for entry in designs:
        design = entry["design"]
        complexity = Complexity(entry["complexity"])
        spec_path = base / entry["spec"]
        rtl_paths = [base / p for p in entry.get("rtl", [])]
        for model in entry.get("models", models):
            for attempt in range(1, entry.get("attempts", attempts) + 1):
                config = RunConfig(
                    spec_path=spec_path,
                    model_id=model,
                    rtl_paths=rtl_paths,
                    out_dir=out_dir / "runs",
                    hil_mode=HilMode.NEVER,
                )
                agents, tasks = build_agents_and_tasks(ns.agents, ns.tasks)
                record = run_pipeline(
                    config, agents, tasks, build_gateway(config), build_prover(config),
                    HilSession.auto_skip(HilMode.NEVER),
                )
                kpi = record.kpi or KpiSummary(0, 0, 0.0, 0.0, run_success=False)
                matrix.add(design, model, attempt, kpi, complexity)
                outcomes[(design, model, attempt)] = record.outcome.value
                run_outcomes.append(record.outcome is Outcome.SUCCESS)
    rendered = render_report(matrix, outcomes)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "benchmark.md").write_text(rendered["markdown"])
    (out_dir / "benchmark.csv").write_text(rendered["csv"])
    print(rendered["markdown"])
    print(f"success rate: {format_pct(success_rate(run_outcomes))}")
    print(f"benchmark written to {out_dir}")
    return 0


def cmd_demo(ns: argparse.Namespace) -> int:
    """Write the bundled FIFO demo inputs (and prover fixture) to a directory."""
    target = Path(ns.dir)
    spec_path, rtl_path = demo.write_demo_inputs(target)
    (target / "prover_fixture.json").write_text(demo.demo_prover_fixture_json())
    print(f"demo inputs written to {target}")
    print(f"try: saarthi run --spec {spec_path} --rtl {rtl_path} --model mock --out {target / 'runs'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="saarthi")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="execute one verification run (or serve)")
    _add_run_flags(run_parser)

    report_parser = sub.add_parser("report", help="summarize persisted runs")
    report_parser.add_argument("--runs", required=True, help="runs directory")

    bench_parser = sub.add_parser("bench", help="run a benchmark suite")
    bench_parser.add_argument("--suite", required=True, help="benchmark manifest (JSON)")
    bench_parser.add_argument("--out", default="bench-out")
    bench_parser.add_argument("--agents", default=None)
    bench_parser.add_argument("--tasks", default=None)

    demo_parser = sub.add_parser("demo", help="write the bundled FIFO demo inputs")
    demo_parser.add_argument("--dir", default="demo")

    ns = parser.parse_args(argv)
    if ns.command == "run":
        return cmd_run(run_parser, ns)
    if ns.command == "report":
        return cmd_report(ns)
    if ns.command == "bench":
        return cmd_bench(ns)
    if ns.command == "demo":
        return cmd_demo(ns)
    parser.error(f"unknown command {ns.command!r}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
