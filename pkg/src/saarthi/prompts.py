"""Fixed prompt templates.

Prompts are assembled from agent role/goal/backstory plus task
description/expected_output and the stage payload. They contain no volatile
data (timestamps, run ids), so identical runs issue identical requests and
cassette replay works.
"""

from __future__ import annotations

from saarthi.config import AgentSpec, TaskSpec
from saarthi.formal.prover import CexTrace


def system_prompt(agent: AgentSpec) -> str:
    parts = [agent.role.strip(), agent.goal.strip()]
    if agent.backstory.strip():
        parts.append(agent.backstory.strip())
    return "\n\n".join(parts)


def _task_header(task: TaskSpec) -> str:
    header = task.description.strip()
    if task.expected_output.strip():
        header += f"\n\nExpected output: {task.expected_output.strip()}"
    return header


def vplan_prompt(task: TaskSpec, spec_text: str, port_list: list[str]) -> str:
    ports = ", ".join(port_list) if port_list else "(none extracted)"
    return (
        f"{_task_header(task)}\n\n"
        f"Design specification:\n{spec_text.strip()}\n\n"
        f"Design signals: {ports}\n"
    )


def property_prompt(
    task: TaskSpec,
    item_id: str,
    description: str,
    port_list: list[str],
    feedback_history: list[str],
) -> str:
    ports = ", ".join(port_list) if port_list else "(none extracted)"
    text = (
        f"{_task_header(task)}\n\n"
        f"Property {item_id}: {description.strip()}\n\n"
        f"Available signals: {ports}\n"
    )
    if feedback_history:
        text += "\nEarlier attempts were rejected with this feedback:\n"
        for i, feedback in enumerate(feedback_history, start=1):
            text += f"{i}. {feedback.strip()}\n"
        text += "\nRevise the assertion accordingly.\n"
    return text


def critique_prompt(task: TaskSpec, item_id: str, description: str, code: str) -> str:
    return (
        f"{_task_header(task)}\n\n"
        f"Property {item_id}: {description.strip()}\n\n"
        f"Candidate assertion:\n```systemverilog\n{code}\n```\n"
    )


def render_trace_table(trace: CexTrace) -> str:
    signals: list[str] = []
    for step in trace.steps:
        for name in step["signals"]:
            if name not in signals:
                signals.append(name)
    header = "| cycle | " + " | ".join(signals) + " |"
    divider = "|" + "---|" * (len(signals) + 1)
    rows = []
    for step in trace.steps:
        cells = [str(step["signals"].get(name, "-")) for name in signals]
        rows.append(f"| {step['time']} | " + " | ".join(cells) + " |")
    return "\n".join([header, divider] + rows)


def cex_prompt(task: TaskSpec, property_id: str, code: str, trace: CexTrace | None) -> str:
    table = render_trace_table(trace) if trace else "(no trace available)"
    return (
        f"{_task_header(task)}\n\n"
        f"Failing assertion {property_id}:\n```systemverilog\n{code}\n```\n\n"
        f"Counterexample trace:\n{table}\n"
    )


def coverage_prompt(
    task: TaskSpec,
    covered: int,
    unreachable: int,
    rate: float,
    plan_descriptions: list[str],
) -> str:
    plan = "\n".join(f"- {d}" for d in plan_descriptions)
    return (
        f"{_task_header(task)}\n\n"
        f"Coverage summary: {covered} covered, {unreachable} unreachable "
        f"({rate:.2f}% coverage).\n\n"
        f"Properties already planned:\n{plan}\n"
    )
