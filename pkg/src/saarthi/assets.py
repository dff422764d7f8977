"""Built-in agent and task definitions plus the fixed prompt templates.

These are versioned text assets: changing any wording changes the canonical
request digests of recorded cassettes, so edits should be deliberate.
"""

from __future__ import annotations

DEFAULT_AGENTS_CFG = """\
formal_verification_lead:
  role: >
    Formal Verification Lead
  goal: >
    Study the register-transfer-level design and its specification, then define the complete
    set of formal properties needed to verify its functionality.
  backstory: >
    A senior verification engineer who owns the verification plan for every design under
    verification. Reads the specification, reasons about corner cases, and writes each required
    property as a single plain-English sentence.
  allow_delegation: false
  verbose: true
  max_iter: 5

property_engineer:
  role: >
    Formal Verification Engineer
  goal: >
    Turn one plain-English property description into a correct SystemVerilog assertion that
    references only signals present in the design.
  backstory: >
    A hands-on assertion writer. Produces one concurrent assertion per request, always with an
    explicit clocking event, and revises it when given critique or tool diagnostics.
  allow_delegation: false
  verbose: false
  max_iter: 5

property_critic:
  role: >
    Assertion Critic
  goal: >
    Review a candidate SystemVerilog assertion against its property description and either
    accept it or explain precisely what must change.
  backstory: >
    A meticulous reviewer. Checks clocking, reset handling, signal names, and temporal
    operators. Replies ACCEPT when the assertion is right, otherwise starts with the problem.
  allow_delegation: false
  verbose: false
  max_iter: 5

cex_analyst:
  role: >
    Counterexample Analyst
  goal: >
    Explain why the prover falsified an assertion and decide whether the design or the
    property is at fault.
  backstory: >
    Reads waveform tables from failed proofs. Opens every reply with a verdict line, either
    RTL_BUG or BAD_PROPERTY, and supplies a corrected assertion when the property is wrong.
  allow_delegation: false
  verbose: false
  max_iter: 5
"""

DEFAULT_TASKS_CFG = """\
vplan_gen:
  description: >
    Analyze the design specification and produce the list of properties, written in plain
    English, required to formally verify the design. Number each property.
  expected_output: >
    A numbered list of single-sentence property descriptions covering the design behavior.
  assigned_agent: formal_verification_lead

property_gen:
  description: >
    Write the SystemVerilog assertion for the given property description. Use only signals
    from the provided port list and include an explicit clocking event.
  expected_output: >
    One fenced systemverilog code block containing exactly one assertion, optionally with
    companion cover properties.
  assigned_agent: property_engineer

property_review:
  description: >
    Review the candidate assertion against the property description. Reply ACCEPT if it is
    correct; otherwise describe the defect and what to change.
  expected_output: >
    Either the single word ACCEPT or a short critique.
  assigned_agent: property_critic

cex_analysis:
  description: >
    A proof attempt produced the counterexample trace below. Explain the failure and give a
    verdict: RTL_BUG if the design misbehaves, or BAD_PROPERTY with a corrected assertion.
  expected_output: >
    A verdict line (RTL_BUG or BAD_PROPERTY) followed by the explanation and, for
    BAD_PROPERTY, a fenced systemverilog block with the fix.
  assigned_agent: cex_analyst

coverage_review:
  description: >
    Formal coverage is below target. Review the coverage summary and list any missing
    properties, one numbered plain-English sentence each. Reply NONE if nothing is missing.
  expected_output: >
    A numbered list of new property descriptions, or NONE.
  assigned_agent: formal_verification_lead
"""

# Names the pipeline resolves from the task list
TASK_VPLAN = "vplan_gen"
TASK_PROPERTY = "property_gen"
TASK_REVIEW = "property_review"
TASK_CEX = "cex_analysis"
TASK_COVERAGE = "coverage_review"
