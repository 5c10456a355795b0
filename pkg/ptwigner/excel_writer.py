"""Generate an XLSX workbook from result rows."""

from __future__ import annotations

import io
import json
from collections.abc import Sequence

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter


HEADER_FONT = Font(bold=True, color="FFFFFF", size=11)
HEADER_FILL = PatternFill(start_color="2F5496", end_color="2F5496", fill_type="solid")

COLUMN_WIDTHS = {
    "epsilon": 14,
    "class": 14,
    "detail": 80,
    "growth_history": 60,
    "check": 28,
}
DEFAULT_WIDTH = 22
NUMBER_FORMAT = "0.000000000000E+00"


def _header(ws, columns: Sequence[tuple[str, int]]) -> None:
    for col_idx, (col_name, width) in enumerate(columns, start=1):
        cell = ws.cell(row=1, column=col_idx, value=col_name)
        cell.font = HEADER_FONT
        cell.fill = HEADER_FILL
        cell.alignment = Alignment(horizontal="center")
        ws.column_dimensions[cell.column_letter].width = width
    ws.freeze_panes = "A2"


def build_xlsx(
    rows: Sequence[dict],
    columns: Sequence[str],
    meta: dict | None = None,
    report: Sequence[dict] | None = None,
) -> bytes:
    """Create an XLSX file in memory and return its bytes.

    Args:
        rows: Result row dicts keyed by `columns`.
        columns: Column order of the data sheet.
        meta: Config echo, written as key/value pairs on the "Run" sheet.
        report: Soft problems ({"source", "message"}) for the "Report" sheet:
            drift flags, unclassified levels, failed checks.

    Returns:
        Raw bytes of the .xlsx file.
    """
    wb = Workbook()
    ws = wb.active
    ws.title = "Results"

    _header(ws, [(c, COLUMN_WIDTHS.get(c, DEFAULT_WIDTH)) for c in columns])
    for row_idx, row in enumerate(rows, start=2):
        for col_idx, col_name in enumerate(columns, start=1):
            value = row.get(col_name, "")
            if isinstance(value, list):
                value = json.dumps(value)
            cell = ws.cell(row=row_idx, column=col_idx, value=value)
            if isinstance(value, float):
                cell.number_format = NUMBER_FORMAT
                cell.alignment = Alignment(horizontal="right")

    if rows:
        ws.auto_filter.ref = f"A1:{get_column_letter(len(columns))}{len(rows) + 1}"

    # --- Report sheet ---
    ws_report = wb.create_sheet("Report")
    _header(ws_report, [("Source", 24), ("Message", 100)])
    if report:
        for row_idx, item in enumerate(report, start=2):
            ws_report.cell(row=row_idx, column=1, value=item.get("source", ""))
            ws_report.cell(row=row_idx, column=2, value=item.get("message", ""))
    else:
        ws_report.cell(row=2, column=1, value="")
        ws_report.cell(row=2, column=2, value="No problems reported")

    # --- Run sheet ---
    ws_run = wb.create_sheet("Run")
    _header(ws_run, [("Key", 24), ("Value", 100)])
    for row_idx, (key, value) in enumerate(sorted((meta or {}).items()), start=2):
        ws_run.cell(row=row_idx, column=1, value=key)
        ws_run.cell(row=row_idx, column=2, value=json.dumps(value, sort_keys=True))

    buf = io.BytesIO()
    wb.save(buf)
    buf.seek(0)
    return buf.read()
