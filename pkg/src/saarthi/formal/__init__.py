"""Formal-prover boundary: SVA extraction and lexical validation, mock and
subprocess prover backends, and prover-log parsing."""

from saarthi.formal.prover import (  # noqa: F401
    AssertionVerdict,
    AssertStatus,
    CexTrace,
    CoverStatus,
    CoverVerdict,
    MockProver,
    ProverLogError,
    ProverResult,
    SubprocessProver,
    parse_prover_log,
)
from saarthi.formal.sva import (  # noqa: F401
    LintReport,
    SvaBlock,
    ensure_label,
    extract_port_list,
    extract_sva_blocks,
    lint_sva,
    render_checker,
    render_fences,
)
