"""Flatten results into rows and write them as deterministic CSV / JSON files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .flow import CirculationResult, FlowField
from .spectrum import EpResult, SweepRecord
from .wigner import WignerField

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = ["epsilon", "level", "re_e", "im_e", "class", "branch", "n_max"]
EP_COLUMNS = ["eps_ep", "bracket_lo", "bracket_hi", "branch_a", "branch_b", "n_max", "tol", "iterations"]
WIGNER_COLUMNS = ["x", "p", "w"]
FLOW_COLUMNS = ["x", "p", "w", "jx", "jp", "norm"]
CIRCULATION_COLUMNS = ["epsilon", "state", "circulation", "r_final", "re_e", "im_e", "growth_history"]
VALIDATION_COLUMNS = ["check", "passed", "value", "threshold", "detail"]


def format_value(value: Any) -> str:
    """17 significant digits for floats so every value round-trips exactly."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def _json_value(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null."""
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value


# ── Record flattening ─────────────────────────────────────────────────────


def spectrum_rows(records: Sequence[SweepRecord], levels: int | None = None) -> list[dict]:
    """One row per (eps, level), levels in Spectrum order.

    Args:
        records: Output of spectrum.sweep, in eps order.
        levels: Keep only the lowest `levels` eigenvalues of each record.

    Returns:
        Row dicts keyed by SPECTRUM_COLUMNS.
    """
    rows: list[dict] = []
    for record in records:
        pairs = record.spectrum.pairs[:levels]
        for level, (pair, branch) in enumerate(zip(pairs, record.branch_ids)):
            rows.append({
                "epsilon": record.epsilon,
                "level": level,
                "re_e": pair.value.real,
                "im_e": pair.value.imag,
                "class": pair.classification.value,
                "branch": branch,
                "n_max": record.n_max,
            })
    return rows


def ep_rows(result: EpResult) -> list[dict]:
    return [{
        "eps_ep": result.eps_ep,
        "bracket_lo": result.bracket[0],
        "bracket_hi": result.bracket[1],
        "branch_a": result.branch_pair[0],
        "branch_b": result.branch_pair[1],
        "n_max": result.n_max,
        "tol": result.tol,
        "iterations": result.iterations,
    }]


def field_rows(w: WignerField, flow: FlowField | None = None) -> list[dict]:
    """Grid nodes in x-major order."""
    x, p = w.grid.x, w.grid.p
    rows: list[dict] = []
    for i in range(w.grid.n_x):
        for j in range(w.grid.n_p):
            row = {"x": x[i], "p": p[j], "w": w.values[i, j]}
            if flow is not None:
                row.update(jx=flow.jx[i, j], jp=flow.jp[i, j], norm=flow.norm[i, j])
            rows.append(row)
    return rows


def circulation_rows(results: Sequence[CirculationResult]) -> list[dict]:
    rows: list[dict] = []
    for r in results:
        rows.append({
            "epsilon": r.epsilon,
            "state": r.state_index,
            "circulation": r.value,
            "r_final": r.R,
            "re_e": r.energy.real,
            "im_e": r.energy.imag,
            "growth_history": [[radius, value] for radius, value in r.growth_history],
        })
    return rows


# ── Encoding ──────────────────────────────────────────────────────────────


def _csv_cell(value: Any) -> str:
    if isinstance(value, list):
        # "R:value;R:value" for nested histories
        return ";".join(":".join(format_value(v) for v in item) for item in value)
    return format_value(value)


def serialize(rows: Sequence[dict], columns: Sequence[str], fmt: str, meta: dict | None = None) -> bytes:
    """Encode rows as CSV (header + rows) or JSON ({"meta", "data"}); identical input gives identical bytes."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(col)) for col in columns])
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        payload = {
            "meta": _json_value(meta or {}),
            "data": [{col: _json_value(row.get(col)) for col in columns} for row in rows],
        }
        return (json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")
    raise ValueError(f"unsupported format {fmt!r}")


def parse_csv(data: bytes) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(data.decode("utf-8"))))


def write_atomic(path: Path, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_output(
    path: Path,
    rows: Sequence[dict],
    columns: Sequence[str],
    fmt: str,
    meta: dict,
    report: Sequence[dict] | None = None,
) -> list[Path]:
    """Write one result set; CSV gets a '<path>.meta.json' sidecar with the config echo.

    Returns:
        The paths written.
    """
    path = Path(path)
    written: list[Path] = []
    if fmt == "xlsx":
        from .excel_writer import build_xlsx

        write_atomic(path, build_xlsx(rows, columns, meta=meta, report=report))
        written.append(path)
    else:
        write_atomic(path, serialize(rows, columns, fmt, meta))
        written.append(path)
        if fmt == "csv":
            sidecar = meta_path(path)
            write_atomic(sidecar, serialize([], [], "json", meta))
            written.append(sidecar)
    logger.info("Wrote %d rows to %s", len(rows), path)
    return written
