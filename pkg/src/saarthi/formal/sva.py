"""Lexical SVA handling: pull assertion blocks out of agent replies, validate
them against the RTL port list, and render them back out.

Everything here is deliberately lexical. The failure classes worth catching
at this boundary (unbalanced structure, unknown signals, missing clocks) are
lexical; full HDL parsing is disproportionate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

FENCE_RE = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.DOTALL)
SVA_FENCE_TAGS = {"systemverilog", "verilog", "sv"}

IDENT_RE = re.compile(r"(?<![\w$'])[A-Za-z_][\w$]*")
BASED_LITERAL_RE = re.compile(r"\d*\s*'\s*[sS]?[bBdDhHoO][0-9a-fA-F_xXzZ?]+")
LINE_COMMENT_RE = re.compile(r"//[^\n]*")
BLOCK_COMMENT_RE = re.compile(r"/\*.*?\*/", re.DOTALL)
STRING_RE = re.compile(r'"(?:[^"\\]|\\.)*"')

DIRECTIVE_WORDS = ("assert", "assume", "cover")

# Words that may appear in assertion code without being design signals.
SV_KEYWORDS = frozenset(
    """
    assert assume cover restrict property endproperty sequence endsequence
    posedge negedge edge disable iff not and or implies within intersect
    throughout first_match if else begin end module endmodule checker
    endchecker input output inout logic wire reg bit byte int integer
    shortint longint signed unsigned parameter localparam genvar generate
    endgenerate always always_ff always_comb always_latch initial final
    function endfunction task endtask return void let var const automatic
    static default clocking endclocking global local unique priority case
    casex casez endcase for foreach while repeat do forever
    eventually s_eventually nexttime s_nexttime always until s_until
    until_with s_until_with strong weak accept_on reject_on sync_accept_on
    sync_reject_on expect bind assign wait time realtime real enum struct
    typedef union packed string null this super new
    """.split()
)


@dataclass
class SvaBlock:
    """One assertion-bearing code block: exactly one top-level assert /
    assume / cover statement plus any property declarations it relies on."""

    code: str
    kind: str = "assert"  # assert | assume | cover
    label: str | None = None
    declared_names: list[str] = field(default_factory=list)


@dataclass
class LintDiagnostic:
    code: str
    message: str


@dataclass
class LintReport:
    ok: bool
    diagnostics: list[LintDiagnostic] = field(default_factory=list)

    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]


def strip_noncode(text: str) -> str:
    """Blank out comments and string literals.

    Offset-preserving: every non-newline character of stripped regions
    becomes a space, so positions in the result map 1:1 onto the input.
    """

    def blank(m: re.Match) -> str:
        return "".join(c if c == "\n" else " " for c in m.group(0))

    text = BLOCK_COMMENT_RE.sub(blank, text)
    text = LINE_COMMENT_RE.sub(blank, text)
    return STRING_RE.sub(blank, text)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def extract_sva_blocks(reply: str) -> list[SvaBlock]:
    """Pull SVA blocks out of an agent reply.

    Preference order: fenced blocks tagged systemverilog/verilog, then the
    first fenced block of any tag, then (no fences) the raw region between
    the first SVA keyword and the last assertion terminator. The collected
    code is split so each block carries one top-level assertion statement.
    An unextractable reply yields an empty list.
    """
    fences = FENCE_RE.findall(reply)
    if fences:
        tagged = [code for tag, code in fences if tag.lower() in SVA_FENCE_TAGS]
        sources = tagged if tagged else [fences[0][1]]
    else:
        region = _bare_sva_region(reply)
        sources = [region] if region else []

    blocks: list[SvaBlock] = []
    for source in sources:
        for chunk in _split_statements(source):
            blocks.append(_make_block(chunk))
    return blocks


def _bare_sva_region(text: str) -> str | None:
    stripped = strip_noncode(text)
    lines = text.splitlines()
    start = None
    end = None
    for i, line in enumerate(stripped.splitlines()):
        if start is None and re.search(
            r"\b(property\s+[A-Za-z_]|assert\b|assume\b|cover\b)", line
        ):
            start = i
        if start is not None and re.search(r"(;\s*$|\bendproperty\b)", line):
            end = i
    if start is None or end is None or end < start:
        return None
    return "\n".join(lines[start : end + 1])


def _split_statements(code: str) -> list[str]:
    """Split code on top-level assertion statements.

    property/endproperty declarations stay attached to the assertion that
    follows them. Trailing content containing SVA keywords becomes a final
    (possibly malformed) block for the linter to judge.
    """
    shadow = strip_noncode(code)
    boundaries: list[int] = []
    depth = 0
    in_property = False
    has_directive = False
    token_iter = re.finditer(r"[A-Za-z_][\w$]*|[();]", shadow)
    prev_word = ""
    for match in token_iter:
        tok = match.group(0)
        if tok == "(":
            depth += 1
        elif tok == ")":
            depth = max(0, depth - 1)
        elif tok == ";":
            if depth == 0 and not in_property and has_directive:
                boundaries.append(match.end())
                has_directive = False
        elif tok == "property":
            if prev_word not in DIRECTIVE_WORDS and prev_word != "restrict":
                in_property = True
            prev_word = tok
        elif tok == "endproperty":
            in_property = False
            prev_word = tok
        else:
            if tok in DIRECTIVE_WORDS and not in_property:
                has_directive = True
            prev_word = tok

    chunks: list[str] = []
    last = 0
    for pos in boundaries:
        chunk = code[last:pos].strip("\n").strip()
        if chunk:
            chunks.append(chunk)
        last = pos
    tail = code[last:].strip("\n").strip()
    if tail and re.search(r"\b(property|assert|assume|cover)\b", strip_noncode(tail)):
        chunks.append(tail)
    return chunks


def _make_block(chunk: str) -> SvaBlock:
    shadow = strip_noncode(chunk)
    kind = "assert"
    directive = re.search(r"\b(assert|assume|cover)\b", shadow)
    if directive:
        kind = directive.group(1)
    label = None
    label_match = re.search(r"(?:^|[\n;])\s*([A-Za-z_][\w$]*)\s*:\s*(?:assert|assume|cover)\b", shadow)
    if label_match:
        label = label_match.group(1)
    return SvaBlock(code=chunk, kind=kind, label=label, declared_names=referenced_names(chunk))


def referenced_names(code: str) -> list[str]:
    """Identifiers referenced by the code, minus keywords and literals."""
    shadow = BASED_LITERAL_RE.sub(" ", strip_noncode(code))
    seen: list[str] = []
    for match in IDENT_RE.finditer(shadow):
        name = match.group(0)
        if name in SV_KEYWORDS or name in seen:
            continue
        seen.append(name)
    return seen


def _local_names(code: str) -> set[str]:
    shadow = strip_noncode(code)
    local: set[str] = set()
    for match in re.finditer(r"\b(?:property|sequence)\s+([A-Za-z_][\w$]*)", shadow):
        local.add(match.group(1))
    for match in re.finditer(r"([A-Za-z_][\w$]*)\s*:\s*(?:assert|assume|cover)\b", shadow):
        local.add(match.group(1))
    for match in re.finditer(
        r"\b(?:logic|bit|int|integer|reg|wire)\s+(?:\[[^\]]*\]\s*)?([A-Za-z_][\w$]*)", shadow
    ):
        local.add(match.group(1))
    return local


# ---------------------------------------------------------------------------
# Lint
# ---------------------------------------------------------------------------

def lint_sva(block: SvaBlock, port_list: list[str]) -> LintReport:
    """Lexical validation: balanced structure, exactly one assertion
    directive, no references to signals absent from the RTL, and an explicit
    clocking event on concurrent assertions."""
    diagnostics: list[LintDiagnostic] = []
    shadow = strip_noncode(block.code)

    if shadow.count("(") != shadow.count(")"):
        diagnostics.append(
            LintDiagnostic("UNBALANCED_PARENS", f"{shadow.count('(')} '(' vs {shadow.count(')')} ')'")
        )
    if shadow.count("[") != shadow.count("]"):
        diagnostics.append(
            LintDiagnostic("UNBALANCED_BRACKETS", f"{shadow.count('[')} '[' vs {shadow.count(']')} ']'")
        )

    begins = len(re.findall(r"\bbegin\b", shadow))
    ends = len(re.findall(r"\bend\b", shadow))
    if begins != ends:
        diagnostics.append(LintDiagnostic("UNBALANCED_BEGIN_END", f"{begins} begin vs {ends} end"))

    prop_decls = len(re.findall(r"\bproperty\s+[A-Za-z_]", shadow))
    prop_ends = len(re.findall(r"\bendproperty\b", shadow))
    if prop_decls != prop_ends:
        diagnostics.append(
            LintDiagnostic(
                "UNBALANCED_PROPERTY", f"{prop_decls} property declarations vs {prop_ends} endproperty"
            )
        )

    directives = re.findall(r"\b(assert|assume|cover)\b", shadow)
    if not directives:
        diagnostics.append(LintDiagnostic("NO_ASSERTION", "no assert/assume/cover statement"))
    elif len(directives) > 1:
        diagnostics.append(
            LintDiagnostic("MULTIPLE_ASSERTIONS", f"{len(directives)} assertion directives in one block")
        )

    concurrent = re.search(r"\b(?:assert|assume|cover)\s+property\b", shadow)
    if concurrent and "@(" not in shadow.replace(" ", ""):
        diagnostics.append(
            LintDiagnostic("MISSING_CLOCK", "concurrent assertion without an explicit clocking event")
        )

    known = set(port_list) | _local_names(block.code)
    for name in referenced_names(block.code):
        if name not in known:
            diagnostics.append(LintDiagnostic("UNKNOWN_SIGNAL", f"UNKNOWN_SIGNAL({name})"))

    return LintReport(ok=not diagnostics, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Port extraction and rendering
# ---------------------------------------------------------------------------

PORT_KEYWORDS = frozenset(
    """
    input output inout logic wire reg bit byte int integer shortint longint
    signed unsigned parameter localparam real time var supply0 supply1 tri
    """.split()
)


def extract_port_list(rtl_text: str) -> list[str]:
    """Identifiers declared in module headers (port and parameter lists).

    A lexical scan: finds each ``module name ... ;`` header and collects the
    identifiers inside its parenthesized groups, minus keywords and the
    module name itself.
    """
    shadow = strip_noncode(rtl_text)
    names: list[str] = []
    for header in re.finditer(r"\bmodule\s+([A-Za-z_][\w$]*)(.*?);", shadow, re.DOTALL):
        module_name = header.group(1)
        body = header.group(2)
        for match in IDENT_RE.finditer(BASED_LITERAL_RE.sub(" ", body)):
            name = match.group(0)
            if name in PORT_KEYWORDS or name == module_name or name in names:
                continue
            names.append(name)
    return names


def ensure_label(block: SvaBlock, label: str) -> SvaBlock:
    """Return a copy of the block whose assertion statement carries the given
    label, replacing any existing one."""
    shadow = strip_noncode(block.code)
    existing = re.search(
        r"(?:^|[\n;])\s*([A-Za-z_][\w$]*)(\s*:\s*)(?=(?:assert|assume|cover)\b)", shadow
    )
    if existing:
        start, end = existing.span(1)
        code = block.code[:start] + label + block.code[end:]
    else:
        directive = re.search(r"\b(assert|assume|cover)\b", shadow)
        if directive is None:
            code = block.code
        else:
            pos = directive.start()
            code = block.code[:pos] + f"{label}: " + block.code[pos:]
    return SvaBlock(code=code, kind=block.kind, label=label, declared_names=referenced_names(code))


def render_fences(blocks: list[SvaBlock]) -> str:
    """Render blocks as tagged fenced code, the inverse of extraction."""
    return "\n\n".join(f"```systemverilog\n{b.code}\n```" for b in blocks)


def render_checker(blocks: list[SvaBlock], name: str = "saarthi_properties") -> str:
    """Concatenate blocks into one checker module for the prover."""
    lines = [f"checker {name};"]
    for block in blocks:
        for line in block.code.splitlines():
            lines.append(f"  {line}" if line.strip() else "")
        lines.append("")
    while lines and not lines[-1].strip():
        lines.pop()
    lines.append("endchecker")
    return "\n".join(lines) + "\n"
