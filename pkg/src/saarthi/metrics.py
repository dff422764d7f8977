"""KPI arithmetic, benchmark matrices, and report rendering.

Three KPIs: success rate (runs completing end-to-end), proven rate
(assertions the prover establishes), and coverage rate (tool-reported formal
coverage). Percentages render at two decimals with round-half-up. The
zero-shot/few-shot workflow comparison is the one place that instead floors
the leading column and complements the paired column, because its published
column pairs sum to exactly 100.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_FLOOR, ROUND_HALF_UP, Decimal
from enum import Enum


class Complexity(str, Enum):
    BASIC = "Basic"
    INTERMEDIATE = "Intermediate"
    ADVANCED = "Advanced"


class MetricsError(RuntimeError):
    pass


@dataclass
class KpiSummary:
    n_properties: int
    n_proven: int
    proven_rate: float
    coverage_rate: float
    run_success: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.proven_rate <= 100 or not 0 <= self.coverage_rate <= 100:
            raise ValueError("rates must lie in [0, 100]")
        if self.n_properties == 0 and (self.proven_rate or self.coverage_rate):
            raise ValueError("zero-property runs must have zero rates")

    @staticmethod
    def from_counts(
        n_properties: int,
        n_proven: int,
        coverage_rate: float,
        run_success: bool = True,
    ) -> "KpiSummary":
        return KpiSummary(
            n_properties=n_properties,
            n_proven=n_proven,
            proven_rate=proven_rate(n_proven, n_properties),
            coverage_rate=coverage_rate if n_properties else 0.0,
            run_success=run_success,
        )

    def to_json(self) -> dict:
        return {
            "n_properties": self.n_properties,
            "n_proven": self.n_proven,
            "proven_rate": self.proven_rate,
            "coverage_rate": self.coverage_rate,
            "run_success": self.run_success,
        }

    @staticmethod
    def from_json(payload: dict) -> "KpiSummary":
        return KpiSummary(
            n_properties=payload["n_properties"],
            n_proven=payload["n_proven"],
            proven_rate=payload["proven_rate"],
            coverage_rate=payload["coverage_rate"],
            run_success=payload.get("run_success", True),
        )


def proven_rate(n_proven: int, n_properties: int) -> float:
    """Percentage of generated assertions the prover established; 0 for
    zero-property runs."""
    if n_proven > n_properties:
        raise MetricsError(f"n_proven {n_proven} exceeds n_properties {n_properties}")
    if n_properties == 0:
        return 0.0
    return 100.0 * n_proven / n_properties


def success_rate(outcomes: list[bool]) -> float:
    """Share of successful runs out of all runs."""
    if not outcomes:
        raise MetricsError("success_rate over an empty run list is undefined")
    return 100.0 * sum(1 for o in outcomes if o) / len(outcomes)


def format_pct(value: float, decimals: int = 2) -> str:
    """Two-decimal fixed rendering with round-half-up, e.g. '45.45%'."""
    quantum = Decimal(10) ** -decimals
    return f"{Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_UP)}%"


def _floor_pct(value: float, decimals: int = 2) -> Decimal:
    quantum = Decimal(10) ** -decimals
    return Decimal(str(value)).quantize(quantum, rounding=ROUND_FLOOR)


def workflow_comparison_rows(
    rows: list[tuple[str, int, int, int, int]],
) -> list[dict[str, str]]:
    """Zero-shot/few-shot style comparison from raw prover counts.

    Each row is (workflow, n_proven, n_assertions, n_unreachable, n_covers).
    Column pairs are complements: proved% is floored at two decimals and CEX%
    is 100 minus it; likewise unreachable/covered.
    """
    def trim(value: Decimal) -> str:
        text = f"{value:.2f}".rstrip("0").rstrip(".")
        return f"{text or '0'}%"

    rendered = []
    for workflow, n_proven, n_assertions, n_unreachable, n_covers in rows:
        proved = _floor_pct(100.0 * n_proven / n_assertions) if n_assertions else Decimal("0.00")
        unreachable = _floor_pct(100.0 * n_unreachable / n_covers) if n_covers else Decimal("0.00")
        rendered.append(
            {
                "workflow": workflow,
                "proved": trim(proved),
                "cex": trim(Decimal(100) - proved),
                "unreachable": trim(unreachable),
                "covered": trim(Decimal(100) - unreachable),
            }
        )
    return rendered


# ---------------------------------------------------------------------------
# Benchmark matrix
# ---------------------------------------------------------------------------

@dataclass
class BenchmarkMatrix:
    cells: dict[tuple[str, str, int], KpiSummary] = field(default_factory=dict)
    complexity: dict[str, Complexity] = field(default_factory=dict)

    def add(self, design: str, model_id: str, attempt: int, kpi: KpiSummary, complexity: Complexity) -> None:
        if attempt < 1:
            raise MetricsError("attempts are numbered from 1")
        existing = self.complexity.get(design)
        if existing is not None and existing is not complexity:
            raise MetricsError(f"design {design!r} already registered as {existing.value}")
        self.cells[(design, model_id, attempt)] = kpi
        self.complexity[design] = complexity

    def models(self) -> list[str]:
        return sorted({model for (_d, model, _k) in self.cells})

    def designs(self) -> list[str]:
        order = {c: i for i, c in enumerate(Complexity)}
        return sorted(self.complexity, key=lambda d: (order[self.complexity[d]], d))

    def max_attempt(self, model_id: str | None = None) -> int:
        attempts = [k for (_d, m, k) in self.cells if model_id is None or m == model_id]
        return max(attempts, default=0)

    def check_contiguous(self) -> None:
        seen: dict[tuple[str, str], set[int]] = {}
        for (design, model, attempt) in self.cells:
            seen.setdefault((design, model), set()).add(attempt)
        for (design, model), attempts in seen.items():
            expected = set(range(1, max(attempts) + 1))
            if attempts != expected:
                missing = sorted(expected - attempts)
                raise MetricsError(
                    f"attempts for ({design}, {model}) are not contiguous; missing {missing}"
                )


def aggregate_by_complexity(
    matrix: BenchmarkMatrix, model_id: str
) -> dict[Complexity, dict[str, float]]:
    """Unweighted arithmetic mean of proven/coverage over every
    (design, attempt) cell of each complexity level for one model."""
    max_k = matrix.max_attempt(model_id)
    missing = [
        (design, model_id, k)
        for design in matrix.designs()
        for k in range(1, max_k + 1)
        if (design, model_id, k) not in matrix.cells
    ]
    if missing:
        raise MetricsError(f"matrix incomplete for model {model_id!r}: missing cells {missing}")

    groups: dict[Complexity, list[KpiSummary]] = {}
    for (design, model, _k), kpi in matrix.cells.items():
        if model != model_id:
            continue
        groups.setdefault(matrix.complexity[design], []).append(kpi)
    return {
        complexity: {
            "proven_rate": sum(c.proven_rate for c in cells) / len(cells),
            "coverage_rate": sum(c.coverage_rate for c in cells) / len(cells),
        }
        for complexity, cells in groups.items()
    }


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

CSV_COLUMNS = [
    "design",
    "complexity",
    "model",
    "attempt",
    "n_properties",
    "n_proven",
    "proven_rate",
    "coverage_rate",
    "outcome",
]


def render_report(matrix: BenchmarkMatrix, outcomes: dict[tuple[str, str, int], str] | None = None):
    """Render the benchmark matrix as markdown tables plus a flat CSV.

    Markdown layout follows the per-complexity benchmark tables (designs x
    metrics across attempts and models) with an aggregate means table; the
    CSV carries one row per cell with identical numeric values.
    """
    outcomes = outcomes or {}
    models = matrix.models()
    max_k = matrix.max_attempt()
    lines: list[str] = ["# Benchmark report", ""]

    for complexity in Complexity:
        designs = [d for d in matrix.designs() if matrix.complexity[d] is complexity]
        lines.append(f"## {complexity.value} designs")
        lines.append("")
        header = ["Design", "Metric"]
        for k in range(1, max_k + 1):
            for model in models:
                header.append(f"Pass@{k} {model}")
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        for design in designs:
            rows = {
                "# Properties": [],
                "% Proven": [],
                "% Coverage": [],
            }
            for k in range(1, max_k + 1):
                for model in models:
                    cell = matrix.cells.get((design, model, k))
                    if cell is None:
                        for row in rows.values():
                            row.append("-")
                        continue
                    rows["# Properties"].append(str(cell.n_properties))
                    rows["% Proven"].append(format_pct(cell.proven_rate))
                    rows["% Coverage"].append(format_pct(cell.coverage_rate))
            for metric, values in rows.items():
                label = design if metric == "# Properties" else ""
                lines.append("| " + " | ".join([label, metric] + values) + " |")
        lines.append("")

    lines.append("## Aggregate means per complexity")
    lines.append("")
    agg_header = ["Model"] + [f"{c.value} proven" for c in Complexity] + [
        f"{c.value} coverage" for c in Complexity
    ]
    lines.append("| " + " | ".join(agg_header) + " |")
    lines.append("|" + "---|" * len(agg_header))
    for model in models:
        aggregates = aggregate_by_complexity(matrix, model)
        row = [model]
        for c in Complexity:
            row.append(format_pct(aggregates[c]["proven_rate"]) if c in aggregates else "-")
        for c in Complexity:
            row.append(format_pct(aggregates[c]["coverage_rate"]) if c in aggregates else "-")
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    markdown = "\n".join(lines)

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for (design, model, attempt) in sorted(matrix.cells):
        kpi = matrix.cells[(design, model, attempt)]
        writer.writerow(
            {
                "design": design,
                "complexity": matrix.complexity[design].value,
                "model": model,
                "attempt": attempt,
                "n_properties": kpi.n_properties,
                "n_proven": kpi.n_proven,
                "proven_rate": format_pct(kpi.proven_rate).rstrip("%"),
                "coverage_rate": format_pct(kpi.coverage_rate).rstrip("%"),
                "outcome": outcomes.get((design, model, attempt), "SUCCESS" if kpi.run_success else "FAILED"),
            }
        )
    return {"markdown": markdown, "csv": buffer.getvalue()}
