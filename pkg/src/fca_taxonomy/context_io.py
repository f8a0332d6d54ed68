from __future__ import annotations

import csv
import io
from pathlib import Path

from fca_taxonomy.context import ContextFormatError, FormalContext

CXT_INCIDENT = "X"
CXT_EMPTY = "."


def parse_cxt(text: str) -> FormalContext:
    """Parse a Burmeister CXT document."""
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 5 or lines[0].strip() != "B":
        raise ContextFormatError("CXT document must start with a 'B' line.")
    if lines[1].strip():
        raise ContextFormatError("CXT line 2 must be empty.")
    n_objects = _parse_count(lines[2], "object")
    n_attributes = _parse_count(lines[3], "attribute")
    if lines[4].strip():
        raise ContextFormatError("CXT line 5 must be empty.")

    body = lines[5:]
    expected = n_objects * 2 + n_attributes
    if len(body) < expected:
        raise ContextFormatError(
            f"CXT body has {len(body)} lines, expected {expected} for {n_objects}x{n_attributes}."
        )
    if any(line.strip() for line in body[expected:]):
        raise ContextFormatError("CXT has trailing content after the incidence matrix.")

    object_names = body[:n_objects]
    attribute_names = body[n_objects : n_objects + n_attributes]
    rows: list[int] = []
    for g, line in enumerate(body[n_objects + n_attributes : expected]):
        cells = line.rstrip()
        if len(cells) != n_attributes:
            raise ContextFormatError(
                f"CXT row {g + 1} has {len(cells)} cells, expected {n_attributes}."
            )
        row = 0
        for m, cell in enumerate(cells):
            if cell in (CXT_INCIDENT, "x"):
                row |= 1 << m
            elif cell != CXT_EMPTY:
                raise ContextFormatError(f"CXT row {g + 1} has invalid cell {cell!r}.")
        rows.append(row)
    return FormalContext.from_rows(object_names, attribute_names, rows)


def dump_cxt(ctx: FormalContext) -> str:
    lines = ["B", "", str(ctx.n_objects), str(ctx.n_attributes), ""]
    lines.extend(ctx.object_names)
    lines.extend(ctx.attribute_names)
    for g in range(ctx.n_objects):
        lines.append(
            "".join(
                CXT_INCIDENT if ctx.incident(g, m) else CXT_EMPTY
                for m in range(ctx.n_attributes)
            )
        )
    return "\n".join(lines) + "\n"


def parse_context_csv(text: str) -> FormalContext:
    """Parse the CSV form: attribute header row, object name in column one, 1/0 cells."""
    try:
        records = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise ContextFormatError(f"Context CSV is malformed: {exc}") from exc
    if not records:
        raise ContextFormatError("Context CSV is empty.")
    header = records[0]
    attribute_names = [name.strip() for name in header[1:]]

    object_names: list[str] = []
    rows: list[int] = []
    for line_no, record in enumerate(records[1:], start=2):
        if not record or not any(cell.strip() for cell in record):
            continue
        if len(record) != len(header):
            raise ContextFormatError(
                f"Context CSV line {line_no} has {len(record)} fields, expected {len(header)}."
            )
        row = 0
        for m, cell in enumerate(record[1:]):
            value = cell.strip()
            if value == "1":
                row |= 1 << m
            elif value != "0":
                raise ContextFormatError(f"Context CSV line {line_no} has invalid cell {value!r}.")
        object_names.append(record[0].strip())
        rows.append(row)
    return FormalContext.from_rows(object_names, attribute_names, rows)


def load_context(path: Path) -> FormalContext:
    """Read a context file, choosing the CSV reader for ``.csv`` and CXT otherwise."""
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ContextFormatError(f"{path} is not valid UTF-8 (byte offset {exc.start}).") from exc
    if path.suffix.lower() == ".csv":
        return parse_context_csv(text)
    return parse_cxt(text)


def save_cxt(ctx: FormalContext, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_cxt(ctx), encoding="utf-8", newline="\n")


def _parse_count(value: str, kind: str) -> int:
    try:
        count = int(value.strip())
    except ValueError as exc:
        raise ContextFormatError(f"CXT {kind} count is not an integer: {value!r}") from exc
    if count < 0:
        raise ContextFormatError(f"CXT {kind} count must be non-negative: {count}")
    return count
