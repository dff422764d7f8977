"""Stand-in prover engine for tests and offline demos.

Usage: ``python -m saarthi.formal.fake_prover <task_dir>``

If FAKE_PROVER_RESULTS names a canned results file, it is copied into the
task directory as results.txt (together with any trace files it references,
resolved relative to the canned file). Otherwise every labeled assertion in
props.sva is reported proven and every cover covered.
"""

from __future__ import annotations

import os
import re
import shutil
import sys
from pathlib import Path

LABEL_RE = re.compile(r"([A-Za-z_][\w$]*)\s*:\s*(assert|assume|cover)\b")


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: fake_prover <task_dir>", file=sys.stderr)
        return 2
    task_dir = Path(args[0])
    if not task_dir.is_dir():
        print(f"fake_prover: no such task dir: {task_dir}", file=sys.stderr)
        return 2

    canned = os.environ.get("FAKE_PROVER_RESULTS")
    if canned:
        canned_path = Path(canned)
        text = canned_path.read_text()
        for match in re.finditer(r"trace=(\S+)", text):
            rel = match.group(1)
            src = canned_path.parent / rel
            if src.exists():
                dst = task_dir / rel
                dst.parent.mkdir(parents=True, exist_ok=True)
                shutil.copy(src, dst)
        (task_dir / "results.txt").write_text(text)
        return 0

    props = task_dir / "props.sva"
    if not props.exists():
        print("fake_prover: task dir has no props.sva", file=sys.stderr)
        return 1
    lines = []
    for label, directive in LABEL_RE.findall(props.read_text()):
        if directive == "cover":
            lines.append(f"cover {label} covered")
        else:
            lines.append(f"assert {label} proven")
    (task_dir / "results.txt").write_text("\n".join(lines) + ("\n" if lines else ""))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
