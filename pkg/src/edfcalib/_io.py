"""Small CSV/JSON writing helpers shared by result types."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path


def fmt_value(x) -> str:
    """Format a cell; floats use shortest round-trip representation."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def write_csv(dest, header, rows) -> None:
    """Write rows (iterables of cells) to a path or file-like object."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_csv(fh, header, rows)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_value(x) for x in row])


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()


def write_json(dest, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False)
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text + "\n")
    else:
        dest.write(text + "\n")
