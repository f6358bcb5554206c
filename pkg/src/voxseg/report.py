"""Model comparison tables: per-region Dice and HD95 with best-in-column
marking, rendered as text, CSV, and a LaTeX fragment.

Columns are fixed: Dice for TC, WT, ET, then HD95 for TC, WT, ET.  Best is
the maximum for Dice and the minimum for HD95; every row attaining the best
value is marked (ties share the bold).  Missing values (undefined HD95)
never win a column.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .volume import Region

_REGIONS = (Region.TC, Region.WT, Region.ET)
# (metric key, region) in display order.
COLUMNS: tuple[tuple[str, Region], ...] = tuple(
    (metric, region) for metric in ("dice", "hd95") for region in _REGIONS
)


@dataclass(frozen=True)
class ModelSummary:
    """One comparison row: a model's mean Dice/HD95 per region."""

    name: str
    dice: Mapping[Region, float]
    hd95: Mapping[Region, float | None]

    def value(self, metric: str, region: Region) -> float | None:
        table = self.dice if metric == "dice" else self.hd95
        return table.get(region)

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "ModelSummary":
        return cls(
            name=str(d["name"]),
            dice={r: float(d["dice"][r.name]) for r in _REGIONS},
            hd95={
                r: (None if d["hd95"].get(r.name) is None else float(d["hd95"][r.name]))
                for r in _REGIONS
            },
        )


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ModelSummary, ...]
    # (row index, column index into COLUMNS) pairs marked as best.
    bold: frozenset[tuple[int, int]]

    def is_bold(self, row: int, metric: str, region: Region) -> bool:
        return (row, COLUMNS.index((metric, region))) in self.bold

    @property
    def text(self) -> str:
        return render_text(self)

    @property
    def csv(self) -> str:
        return render_csv(self)

    @property
    def latex(self) -> str:
        return render_latex(self)


def build_comparison_table(rows: Sequence[ModelSummary]) -> ComparisonTable:
    """Mark the best value per column; ties are all marked."""
    if not rows:
        raise ValueError("need at least one model summary")
    bold = set()
    for col, (metric, region) in enumerate(COLUMNS):
        values = [r.value(metric, region) for r in rows]
        present = [v for v in values if v is not None]
        if not present:
            continue
        best = max(present) if metric == "dice" else min(present)
        bold.update((i, col) for i, v in enumerate(values) if v == best)
    return ComparisonTable(rows=tuple(rows), bold=frozenset(bold))


def render_comparison_table(records: Sequence[ModelSummary]) -> ComparisonTable:
    """Build the marked table; renderings are the result's .text, .csv,
    and .latex properties."""
    return build_comparison_table(records)


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else format(value, "g")


def render_text(table: ComparisonTable) -> str:
    """Fixed-width table; best values wrapped in asterisks."""
    header = ["Model"] + [f"{m.upper()}-{r.name}" for m, r in COLUMNS]
    body = []
    for i, row in enumerate(table.rows):
        cells = [row.name]
        for col, (metric, region) in enumerate(COLUMNS):
            text = _fmt(row.value(metric, region))
            cells.append(f"*{text}*" if (i, col) in table.bold else text)
        body.append(cells)
    widths = [max(len(line[c]) for line in [header] + body) for c in range(len(header))]
    out = io.StringIO()
    for line in [header, ["-" * w for w in widths]] + body:
        out.write("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() + "\n")
    return out.getvalue()


def render_csv(table: ComparisonTable) -> str:
    """Plain data export; the bold mask is structural, not part of the CSV."""
    lines = ["model," + ",".join(f"{m}_{r.name.lower()}" for m, r in COLUMNS)]
    for row in table.rows:
        cells = [row.name] + [_fmt(row.value(m, r)) for m, r in COLUMNS]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_latex(table: ComparisonTable) -> str:
    """Tabular fragment with best values in \\textbf."""
    lines = [
        "\\begin{tabular}{l" + "c" * len(COLUMNS) + "}",
        "\\hline",
        "Model & " + " & ".join(f"{m.upper()}-{r.name}" for m, r in COLUMNS) + " \\\\",
        "\\hline",
    ]
    for i, row in enumerate(table.rows):
        cells = []
        for col, (metric, region) in enumerate(COLUMNS):
            text = _fmt(row.value(metric, region))
            cells.append(f"\\textbf{{{text}}}" if (i, col) in table.bold else text)
        lines.append(row.name + " & " + " & ".join(cells) + " \\\\")
    lines += ["\\hline", "\\end{tabular}"]
    return "\n".join(lines) + "\n"
