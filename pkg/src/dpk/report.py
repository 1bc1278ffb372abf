"""Deterministic text rendering of command results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


def fmt(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (float, int)) and not isinstance(value, bool):
        if isinstance(value, float):
            if math.isinf(value):
                return "inf" if value > 0 else "-inf"
            text = f"{value:.6g}"
            return "0" if text == "-0" else text
        return str(value)
    return str(value)


@dataclass
class Table:
    """Rows of values under unit-bearing column names such as ``freq_MHz``."""

    columns: Sequence[str]
    rows: list[Sequence] = field(default_factory=list)
    title: str = ""


@dataclass
class Report:
    """Scalars (``name_unit -> value``), notes and tables of one command."""

    scalars: dict[str, object] = field(default_factory=dict)
    tables: list[Table] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
    return [line(header), line(["-" * w for w in widths])] + [line(r) for r in rows]


def emit_report(report: Report, format: str = "plain") -> str:
    """Render ``report`` as ``plain`` (comment-prefixed headers) or ``table`` text.

    Scalars are listed in sorted key order; tables keep their row order.
    Numbers are printed with six significant digits.
    """
    if format not in ("plain", "table"):
        raise ValueError(f"unknown format {format!r}")
    out = [f"# {n}" for n in report.notes]
    keys = sorted(report.scalars)
    if format == "plain":
        out += [f"{k} = {fmt(report.scalars[k])}" for k in keys]
    elif keys:
        out += _aligned(["quantity", "value"], [[k, fmt(report.scalars[k])] for k in keys])
    for table in report.tables:
        if out:
            out.append("")
        if table.title:
            out.append(f"# [{table.title}]")
        cells = [[fmt(v) for v in row] for row in table.rows]
        if format == "plain":
            out.append("# " + " ".join(table.columns))
            out += [" ".join(r) for r in cells]
        else:
            out += _aligned(list(table.columns), cells)
    return "\n".join(out) + "\n" if out else ""
