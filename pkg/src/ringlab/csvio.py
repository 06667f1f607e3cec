"""CSV reading/writing with strict schemas and round-trip fidelity.

Files are UTF-8, comma-separated, one header row naming the columns
exactly; lines starting with '#' are comments and are skipped.  Floats
are written with 17 significant digits so finite values survive a
write/read round trip bit-for-bit.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable

from .errors import DataError


def format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    return str(value)


def load_csv(path: str | Path, columns: dict[str, type]) -> list[dict]:
    """Read rows under a strict schema {column name -> float | str | int}.

    The header must contain exactly the schema's columns (any order);
    errors name the offending column and row.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"data file: {exc}") from None
    return parse_csv(text, columns, source=str(path))


def parse_csv(text: str, columns: dict[str, type], source: str = "<string>") -> list[dict]:
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{source}: empty file (no header row)")
    reader = csv.reader(lines)
    header = [cell.strip() for cell in next(reader)]
    for name in columns:
        if name not in header:
            raise DataError(f"{source}: missing column {name!r}")
    for name in header:
        if name not in columns:
            raise DataError(f"{source}: unexpected column {name!r}")
    rows = []
    for row_number, cells in enumerate(reader, start=2):
        if len(cells) != len(header):
            raise DataError(f"{source}: row {row_number}: expected {len(header)} cells, got {len(cells)}")
        row = {}
        for name, cell in zip(header, cells):
            kind = columns[name]
            cell = cell.strip()
            if kind is str:
                row[name] = cell
                continue
            try:
                value = kind(cell)
            except ValueError:
                raise DataError(
                    f"{source}: row {row_number}, column {name!r}: not numeric: {cell!r}"
                ) from None
            if kind is float and not math.isfinite(value):
                raise DataError(f"{source}: row {row_number}, column {name!r}: non-finite value")
            row[name] = value
        rows.append(row)
    return rows


def write_csv(stream: io.TextIOBase, columns: list[str], rows: Iterable,
              comments: Iterable[str] = ()) -> None:
    """Write optional '#' comment lines, the header, then the rows.

    Rows may be mappings (looked up by column name) or sequences in
    column order.  Output is deterministic for identical input.
    """
    for comment in comments:
        stream.write(f"# {comment}\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        if isinstance(row, dict):
            cells = [format_value(row[name]) for name in columns]
        else:
            cells = [format_value(value) for value in row]
        stream.write(",".join(cells) + "\n")


def write_csv_file(path: str | Path, columns: list[str], rows: Iterable,
                   comments: Iterable[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as stream:
        write_csv(stream, columns, rows, comments)
