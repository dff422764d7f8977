"""Bundled synchronous-FIFO demo: an offline, fully deterministic end-to-end
run. The scripted replies walk the whole flow, including one critic
rejection, one counterexample fixed as a bad property, and one coverage
feedback round that lifts coverage to 100%.
"""

from __future__ import annotations

import json
from pathlib import Path

from saarthi.formal.prover import AssertStatus, CexTrace, CoverStatus, MockProver
from saarthi.gateway import CassetteBackend, ScriptedBackend

DEMO_SPEC_TEXT = """\
# Synchronous FIFO

An 8-entry synchronous FIFO with one clock (clk) and an active-low reset
(rst_n). A push request (push) writes din when the FIFO is not full; a pop
request (pop) reads dout when the FIFO is not empty. The occupancy counter
(count) reports the number of stored entries. The flags full and empty
reflect count equal to 8 and 0 respectively.

Requirements:
- The FIFO must never overflow: a push while full and not popping is ignored.
- The FIFO must never underflow: a pop while empty and not pushing is ignored.
- The occupancy counter tracks pushes and pops exactly.
- After reset, the FIFO is empty.
"""

DEMO_RTL = """\
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
  logic [WIDTH-1:0] mem [DEPTH];
  logic [2:0] wr_ptr, rd_ptr;

  assign full  = (count == DEPTH);
  assign empty = (count == 0);

  always_ff @(posedge clk or negedge rst_n) begin
    if (!rst_n) begin
      wr_ptr <= '0; rd_ptr <= '0; count <= '0;
    end else begin
      if (push && !full)  begin mem[wr_ptr] <= din; wr_ptr <= wr_ptr + 1; end
      if (pop  && !empty) begin rd_ptr <= rd_ptr + 1; end
      count <= count + (push && !full) - (pop && !empty);
    end
  end
  assign dout = mem[rd_ptr];
endmodule
"""

_VPLAN_REPLY = """\
Here is the verification plan for the synchronous FIFO:

1. The FIFO never overflows: when full, a push without a pop must not increase count.
2. The FIFO never underflows: when empty, a pop without a push must not decrease count.
3. The occupancy counter increments by one after a push without a pop.
"""

_P1_REPLY = """\
The overflow property with a companion cover:

```systemverilog
p1: assert property (@(posedge clk) disable iff (!rst_n)
  (full && push && !pop) |=> count == $past(count));
c1: cover property (@(posedge clk) disable iff (!rst_n) full && push);
```
"""

_P2_DRAFT1 = """\
```systemverilog
p2: assert property (@(posedge clk)
  (empty && pop && !push) |=> count == $past(count));
```
"""

_P2_CRITIQUE = """\
The assertion ignores reset: without a disable iff (!rst_n) guard the
property fires during reset cycles. Add the reset guard and keep the rest.
"""

_P2_DRAFT2 = """\
Revised with the reset guard and a cover for the empty corner:

```systemverilog
p2: assert property (@(posedge clk) disable iff (!rst_n)
  (empty && pop && push) |=> count == $past(count));
c2: cover property (@(posedge clk) disable iff (!rst_n) empty && pop);
```
"""

_P3_REPLY = """\
```systemverilog
p3: assert property (@(posedge clk) disable iff (!rst_n)
  (push && !pop && !full) |=> count == $past(count) + 1);
c3: cover property (@(posedge clk) disable iff (!rst_n) count == 4);
```
"""

_CEX_REPLY = """\
BAD_PROPERTY: the antecedent requires pop and push together, so the
underflow case (pop while empty without a push) is not what the trace
falsifies; at cycle 1 the counter stays at zero while the property expects
the past value after a lone pop. The corrected assertion guards the
pop-only case:

```systemverilog
p2: assert property (@(posedge clk) disable iff (!rst_n)
  (empty && pop && !push) |=> count == $past(count));
```
"""

_COVERAGE_REPLY = """\
The unreachable cover shows the mid-occupancy corner is never planned for.

1. The data output holds its value while no pop occurs.
"""

_P4_REPLY = """\
```systemverilog
p4: assert property (@(posedge clk) disable iff (!rst_n)
  (!pop) |=> $stable(dout));
```
"""

_ACCEPT = "ACCEPT"


def demo_replies() -> list[str]:
    """Scripted gateway replies in exact pipeline call order."""
    return [
        _VPLAN_REPLY,   # 1 vplan_gen (lead)
        _P1_REPLY,      # 2 property_gen p1
        _ACCEPT,        # 3 property_review p1
        _P2_DRAFT1,     # 4 property_gen p2 (first draft)
        _P2_CRITIQUE,   # 5 property_review p2 -> reject
        _P2_DRAFT2,     # 6 property_gen p2 (revised)
        _ACCEPT,        # 7 property_review p2
        _P3_REPLY,      # 8 property_gen p3
        _ACCEPT,        # 9 property_review p3
        _CEX_REPLY,     # 10 cex_analysis p2
        _ACCEPT,        # 11 property_review p2 (revision from analyst)
        _COVERAGE_REPLY,  # 12 coverage_review (lead)
        _P4_REPLY,      # 13 property_gen p4
        _ACCEPT,        # 14 property_review p4
    ]


def demo_trace() -> CexTrace:
    return CexTrace(
        failing_property="p2",
        steps=[
            {"time": 0, "signals": {"rst_n": "1", "empty": "1", "pop": "1", "push": "1", "count": "0"}},
            {"time": 1, "signals": {"rst_n": "1", "empty": "1", "pop": "0", "push": "0", "count": "0"}},
        ],
    )


def demo_prover() -> MockProver:
    """First prove: p2 falsified, c3 unreachable. Re-prove after the fix and
    the feedback property: everything proven and covered."""
    return MockProver(
        assert_fixture={
            "p1": [AssertStatus.PROVEN, AssertStatus.PROVEN],
            "p2": [AssertStatus.CEX, AssertStatus.PROVEN],
            "p3": [AssertStatus.PROVEN, AssertStatus.PROVEN],
            "p4": AssertStatus.PROVEN,
        },
        cover_fixture={
            "c1": [CoverStatus.COVERED, CoverStatus.COVERED],
            "c2": [CoverStatus.COVERED, CoverStatus.COVERED],
            "c3": [CoverStatus.UNREACHABLE, CoverStatus.COVERED],
        },
        traces={"p2": demo_trace()},
    )


def write_demo_inputs(directory: Path | str) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    spec_path = directory / "fifo_spec.md"
    rtl_path = directory / "sync_fifo.sv"
    spec_path.write_text(DEMO_SPEC_TEXT)
    rtl_path.write_text(DEMO_RTL)
    return spec_path, rtl_path


def demo_prover_fixture_json() -> str:
    """The demo prover fixture in the SAARTHI_PROVER_FIXTURE file format."""
    return json.dumps(
        {
            "assertions": {
                "p1": ["Proven", "Proven"],
                "p2": ["Cex", "Proven"],
                "p3": ["Proven", "Proven"],
                "p4": "Proven",
            },
            "covers": {
                "c1": ["Covered", "Covered"],
                "c2": ["Covered", "Covered"],
                "c3": ["Unreachable", "Covered"],
            },
            "traces": {"p2": demo_trace().to_json()},
        },
        indent=2,
    )


def build_demo_cassette(path: Path | str) -> CassetteBackend:
    """Record the scripted demo replies into a cassette by wrapping the
    scripted queue; a subsequent replay run reproduces them offline."""
    return CassetteBackend(Path(path), mode="record", inner=ScriptedBackend(demo_replies()))
