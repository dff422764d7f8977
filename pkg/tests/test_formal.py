"""Formal-adapter tests: extraction, lint, result-file parsing, and the mock
and subprocess prover backends."""

from __future__ import annotations

import json
import random
import sys

import pytest

from saarthi.formal import (
    AssertStatus,
    CexTrace,
    CoverStatus,
    MockProver,
    ProverLogError,
    SubprocessProver,
    ensure_label,
    extract_port_list,
    extract_sva_blocks,
    lint_sva,
    parse_prover_log,
    render_checker,
    render_fences,
)
from saarthi.formal.sva import SvaBlock

PORTS = ["clk", "rst_n", "req", "gnt", "full", "empty", "count"]

SIMPLE_ASSERT = "assert property (@(posedge clk) req |-> ##[1:3] gnt);"


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def test_tagged_fence_single_assert():
    reply = f"Here is the property.\n\n```systemverilog\n{SIMPLE_ASSERT}\n```\nDone."
    blocks = extract_sva_blocks(reply)
    assert len(blocks) == 1
    assert blocks[0].kind == "assert"
    assert blocks[0].code == SIMPLE_ASSERT


def test_prose_only_yields_empty_list():
    assert extract_sva_blocks("I could not produce a property for this item.") == []


def test_tag_preference_over_first_fence():
    reply = (
        "```text\nsome prose notes\n```\n\n"
        f"```sv\n{SIMPLE_ASSERT}\n```\n"
    )
    blocks = extract_sva_blocks(reply)
    assert len(blocks) == 1
    assert blocks[0].code == SIMPLE_ASSERT


def test_untagged_first_fence_fallback():
    reply = f"```\n{SIMPLE_ASSERT}\n```\n```\ncover property (@(posedge clk) full);\n```"
    blocks = extract_sva_blocks(reply)
    assert len(blocks) == 1
    assert blocks[0].code == SIMPLE_ASSERT


def test_no_fence_fallback_scans_property_region():
    reply = (
        "The property below checks grant latency.\n"
        "property p_gnt;\n"
        "  @(posedge clk) req |-> ##[1:3] gnt;\n"
        "endproperty\n"
        "gnt_latency: assert property (p_gnt);\n"
        "Hope this helps!\n"
    )
    blocks = extract_sva_blocks(reply)
    assert len(blocks) == 1
    assert "property p_gnt;" in blocks[0].code
    assert blocks[0].code.endswith("assert property (p_gnt);")
    assert blocks[0].label == "gnt_latency"


def test_split_on_multiple_assertions():
    reply = (
        "```systemverilog\n"
        "p1: assert property (@(posedge clk) req |-> gnt);\n"
        "c1: cover property (@(posedge clk) full);\n"
        "p2: assume property (@(posedge clk) !rst_n |-> !req);\n"
        "```\n"
    )
    blocks = extract_sva_blocks(reply)
    assert [b.kind for b in blocks] == ["assert", "cover", "assume"]
    assert [b.label for b in blocks] == ["p1", "c1", "p2"]


def test_property_decl_stays_attached_to_assert():
    code = (
        "property p_full;\n"
        "  @(posedge clk) full |-> !req;\n"
        "endproperty\n"
        "a_full: assert property (p_full);\n"
        "c_full: cover property (@(posedge clk) full);"
    )
    blocks = extract_sva_blocks(f"```systemverilog\n{code}\n```")
    assert len(blocks) == 2
    assert blocks[0].code.startswith("property p_full;")
    assert blocks[0].kind == "assert"
    assert blocks[1].kind == "cover"


def test_extraction_render_round_trip():
    codes = [
        SIMPLE_ASSERT,
        "property p;\n  @(posedge clk) req |-> gnt;\nendproperty\nlbl: assert property (p);",
        "cover property (@(posedge clk) full && empty);",
    ]
    blocks = [extract_sva_blocks(f"```systemverilog\n{c}\n```")[0] for c in codes]
    rendered = render_fences(blocks)
    again = extract_sva_blocks(rendered)
    assert [b.code for b in again] == [b.code for b in blocks]


def test_fence_wrapping_fuzz_round_trip():
    rng = random.Random(7)
    prose = ["Sure!", "Explanation follows.", "- bullet", "Final notes.", ""]
    block = extract_sva_blocks(f"```systemverilog\n{SIMPLE_ASSERT}\n```")[0]
    for _ in range(200):
        head = "\n".join(rng.choices(prose, k=rng.randint(0, 3)))
        tail = "\n".join(rng.choices(prose, k=rng.randint(0, 3)))
        tag = rng.choice(["systemverilog", "verilog", "sv"])
        doc = f"{head}\n```{tag}\n{block.code}\n```\n{tail}"
        got = extract_sva_blocks(doc)
        assert len(got) == 1 and got[0].code == block.code


# ---------------------------------------------------------------------------
# Lint
# ---------------------------------------------------------------------------

def test_lint_clean_block():
    block = extract_sva_blocks(f"```systemverilog\n{SIMPLE_ASSERT}\n```")[0]
    report = lint_sva(block, PORTS)
    assert report.ok
    assert report.diagnostics == []


def test_lint_unknown_signal():
    block = extract_sva_blocks(f"```systemverilog\n{SIMPLE_ASSERT}\n```")[0]
    report = lint_sva(block, ["clk", "req"])
    assert not report.ok
    assert "UNKNOWN_SIGNAL" in report.codes()
    assert any("gnt" in d.message for d in report.diagnostics)


def test_lint_missing_endproperty():
    block = SvaBlock(code="property p; a |-> b")
    report = lint_sva(block, ["a", "b"])
    assert "UNBALANCED_PROPERTY" in report.codes()


def test_lint_unbalanced_parens():
    block = SvaBlock(code="assert property (@(posedge clk) req |-> gnt;")
    assert "UNBALANCED_PARENS" in lint_sva(block, PORTS).codes()


def test_lint_multiple_assertions():
    block = SvaBlock(code="a1: assert property (@(posedge clk) req); a2: assert property (@(posedge clk) gnt);")
    assert "MULTIPLE_ASSERTIONS" in lint_sva(block, PORTS).codes()


def test_lint_no_assertion():
    block = SvaBlock(code="property p;\n @(posedge clk) req |-> gnt;\nendproperty")
    assert "NO_ASSERTION" in lint_sva(block, PORTS).codes()


def test_lint_missing_clock_on_concurrent_assertion():
    block = SvaBlock(code="assert property (req |-> gnt);")
    assert "MISSING_CLOCK" in lint_sva(block, PORTS).codes()


def test_lint_local_declarations_are_known():
    code = (
        "property p_latency;\n"
        "  @(posedge clk) req |-> ##[1:3] gnt;\n"
        "endproperty\n"
        "lbl_latency: assert property (p_latency);"
    )
    report = lint_sva(SvaBlock(code=code), PORTS)
    assert report.ok, report.diagnostics


def test_lint_ignores_literals_and_system_functions():
    code = "assert property (@(posedge clk) $rose(req) |-> count == 4'b0010);"
    report = lint_sva(SvaBlock(code=code), PORTS)
    assert report.ok, report.diagnostics


def test_lint_never_accepts_unbalanced_property_fuzz():
    import re as _re

    base = (
        "property p_x;\n"
        "  @(posedge clk) req |-> gnt;\n"
        "endproperty\n"
        "x: assert property (p_x);"
    )
    rng = random.Random(3)
    for _ in range(300):
        # Delete a random slice that injures the property/endproperty pairing
        target = rng.choice(["property p_x;", "endproperty"])
        start = base.find(target)
        cut = rng.randint(1, len(target))
        mutated = base[:start] + base[start + cut:]
        n_decl = len(_re.findall(r"\bproperty\s+[A-Za-z_]", mutated))
        n_end = len(_re.findall(r"\bendproperty\b", mutated))
        if n_decl != n_end:
            report = lint_sva(SvaBlock(code=mutated), PORTS)
            assert "UNBALANCED_PROPERTY" in report.codes(), mutated


# ---------------------------------------------------------------------------
# Port extraction and labeling
# ---------------------------------------------------------------------------

RTL = """
module sync_fifo #(parameter DEPTH = 8, parameter WIDTH = 8) (
  input  logic clk,
  input  logic rst_n,
  input  logic push,
  input  logic pop,
  input  logic [WIDTH-1:0] din,
  output logic [WIDTH-1:0] dout,
  output logic full,
  output logic empty,
  output logic [3:0] count
);
  // body not scanned
  logic [3:0] wr_ptr;
endmodule
"""


def test_extract_port_list_from_module_header():
    ports = extract_port_list(RTL)
    for expected in ["clk", "rst_n", "push", "pop", "din", "dout", "full", "empty", "count"]:
        assert expected in ports
    assert "wr_ptr" not in ports
    assert "sync_fifo" not in ports


def test_ensure_label_replaces_existing():
    block = extract_sva_blocks("```systemverilog\nold: assert property (@(posedge clk) req);\n```")[0]
    relabeled = ensure_label(block, "p7")
    assert relabeled.label == "p7"
    assert relabeled.code.startswith("p7: assert")


def test_ensure_label_prepends_when_missing():
    block = SvaBlock(code=SIMPLE_ASSERT)
    relabeled = ensure_label(block, "p1")
    assert relabeled.code.startswith("p1: assert property")


def test_render_checker_wraps_blocks():
    blocks = [SvaBlock(code=SIMPLE_ASSERT, label="p1")]
    text = render_checker(blocks)
    assert text.startswith("checker saarthi_properties;")
    assert text.rstrip().endswith("endchecker")
    assert SIMPLE_ASSERT in text


# ---------------------------------------------------------------------------
# parse_prover_log
# ---------------------------------------------------------------------------

def test_parse_two_verdicts():
    result = parse_prover_log("assert p1 proven\nassert p2 cex trace=cex/p2.json\n")
    assert result.assertions["p1"].status is AssertStatus.PROVEN
    assert result.assertions["p2"].status is AssertStatus.CEX
    assert result.assertions["p2"].trace_path == "cex/p2.json"


def test_parse_cover_unreachable():
    result = parse_prover_log("cover c1 unreachable\n")
    assert result.covers["c1"].status is CoverStatus.UNREACHABLE


def test_parse_empty_input():
    result = parse_prover_log("")
    assert result.assertions == {} and result.covers == {}


def test_parse_unknown_assert_status_becomes_error_verdict():
    result = parse_prover_log("assert p1 maybe\n")
    assert result.assertions["p1"].status is AssertStatus.ERROR
    assert "maybe" in (result.assertions["p1"].diagnostic or "")


def test_parse_malformed_line_positions_error():
    with pytest.raises(ProverLogError) as err:
        parse_prover_log("assert p1 proven\ngarbage here now\n")
    assert err.value.line_no == 2


def test_parse_short_assert_line_positions_error():
    with pytest.raises(ProverLogError) as err:
        parse_prover_log("\n\nassert p1\n")
    assert err.value.line_no == 3


# ---------------------------------------------------------------------------
# Mock prover
# ---------------------------------------------------------------------------

def labeled(kind: str, label: str) -> SvaBlock:
    stmt = {
        "assert": f"{label}: assert property (@(posedge clk) req |-> gnt);",
        "cover": f"{label}: cover property (@(posedge clk) full);",
    }[kind]
    return SvaBlock(code=stmt, kind=kind, label=label)


def test_mock_fixture_verdicts():
    prover = MockProver({"p1": AssertStatus.PROVEN, "p2": AssertStatus.CEX})
    result = prover.prove([], [labeled("assert", "p1"), labeled("assert", "p2")])
    assert result.assertions["p1"].status is AssertStatus.PROVEN
    assert result.assertions["p2"].status is AssertStatus.CEX


def test_mock_unmapped_defaults_inconclusive():
    prover = MockProver({})
    result = prover.prove([], [labeled("assert", "px")])
    assert result.assertions["px"].status is AssertStatus.INCONCLUSIVE


def test_mock_covers_exactly_submitted_set():
    prover = MockProver({"p1": AssertStatus.PROVEN, "phantom": AssertStatus.PROVEN})
    result = prover.prove([], [labeled("assert", "p1"), labeled("assert", "p2")])
    assert set(result.assertions) == {"p1", "p2"}


def test_mock_sequenced_verdicts():
    prover = MockProver({"p1": [AssertStatus.CEX, AssertStatus.PROVEN]})
    blocks = [labeled("assert", "p1")]
    assert prover.prove([], blocks).assertions["p1"].status is AssertStatus.CEX
    assert prover.prove([], blocks).assertions["p1"].status is AssertStatus.PROVEN


def test_mock_table1_zero_shot_counts():
    # 7 assertions: 3 proven / 4 CEX; 8 covers: 1 unreachable / 7 covered
    asserts = {f"p{i}": AssertStatus.PROVEN if i <= 3 else AssertStatus.CEX for i in range(1, 8)}
    covers = {f"c{i}": CoverStatus.UNREACHABLE if i == 8 else CoverStatus.COVERED for i in range(1, 9)}
    blocks = [labeled("assert", f"p{i}") for i in range(1, 8)]
    blocks += [labeled("cover", f"c{i}") for i in range(1, 9)]
    result = MockProver(asserts, covers).prove([], blocks)
    assert (result.n_proven, result.n_cex) == (3, 4)
    assert (result.n_covered, result.n_unreachable) == (7, 1)


# ---------------------------------------------------------------------------
# CexTrace
# ---------------------------------------------------------------------------

def test_trace_requires_steps():
    with pytest.raises(ValueError):
        CexTrace(failing_property="p1", steps=[])


def test_trace_requires_increasing_cycles():
    with pytest.raises(ValueError):
        CexTrace(failing_property="p1", steps=[{"time": 2, "signals": {}}, {"time": 2, "signals": {}}])


def test_trace_json_round_trip():
    trace = CexTrace("p2", [{"time": 0, "signals": {"req": "1"}}, {"time": 1, "signals": {"gnt": "0"}}])
    assert CexTrace.from_json(trace.to_json()) == trace


# ---------------------------------------------------------------------------
# Subprocess prover + fake engine
# ---------------------------------------------------------------------------

FAKE_PROVER_CMD = [sys.executable, "-m", "saarthi.formal.fake_prover"]


def test_subprocess_default_fake_prover_round_trip(tmp_path):
    prover = SubprocessProver(FAKE_PROVER_CMD, workdir=tmp_path)
    blocks = [labeled("assert", "p1"), labeled("cover", "c1")]
    result = prover.prove([{"path": "top.sv", "content": RTL}], blocks)
    assert result.assertions["p1"].status is AssertStatus.PROVEN
    assert result.covers["c1"].status is CoverStatus.COVERED


def test_subprocess_canned_results_golden(tmp_path, monkeypatch):
    canned_dir = tmp_path / "canned"
    (canned_dir / "cex").mkdir(parents=True)
    trace = CexTrace("p2", [{"time": 0, "signals": {"push": "1", "full": "1"}}])
    (canned_dir / "cex" / "p2.json").write_text(json.dumps(trace.to_json()))
    canned_text = "assert p1 proven\nassert p2 cex trace=cex/p2.json\ncover c1 covered\n"
    canned_file = canned_dir / "results.txt"
    canned_file.write_text(canned_text)
    monkeypatch.setenv("FAKE_PROVER_RESULTS", str(canned_file))

    prover = SubprocessProver(FAKE_PROVER_CMD, workdir=tmp_path / "work")
    blocks = [labeled("assert", "p1"), labeled("assert", "p2"), labeled("cover", "c1")]
    result = prover.prove([{"path": "top.sv", "content": RTL}], blocks)

    expected = parse_prover_log(canned_text)
    assert result.assertions["p1"] == expected.assertions["p1"]
    assert result.assertions["p2"].status is AssertStatus.CEX
    assert result.assertions["p2"].trace == trace
    assert result.covers == expected.covers


def test_subprocess_task_dir_layout(tmp_path):
    workdir = tmp_path / "tasks"
    prover = SubprocessProver(FAKE_PROVER_CMD, workdir=workdir)
    prover.prove([{"path": "top.sv", "content": RTL}], [labeled("assert", "p1")])
    task_dirs = list(workdir.iterdir())
    assert len(task_dirs) == 1
    entries = {p.name for p in task_dirs[0].iterdir()}
    assert {"design.f", "props.sva", "run.sh", "results.txt", "rtl"} <= entries


def test_subprocess_nonzero_exit_without_results_gives_error_verdicts(tmp_path):
    prover = SubprocessProver([sys.executable, "-c", "import sys; sys.exit(3)"], workdir=tmp_path)
    result = prover.prove([], [labeled("assert", "p1"), labeled("assert", "p2")])
    assert all(v.status is AssertStatus.ERROR for v in result.assertions.values())
    assert set(result.assertions) == {"p1", "p2"}


def test_subprocess_missing_ids_filled_with_error(tmp_path, monkeypatch):
    canned_file = tmp_path / "partial.txt"
    canned_file.write_text("assert p1 proven\n")
    monkeypatch.setenv("FAKE_PROVER_RESULTS", str(canned_file))
    prover = SubprocessProver(FAKE_PROVER_CMD, workdir=tmp_path / "w")
    result = prover.prove([], [labeled("assert", "p1"), labeled("assert", "p2")])
    assert result.assertions["p1"].status is AssertStatus.PROVEN
    assert result.assertions["p2"].status is AssertStatus.ERROR
