"""Small deterministic file-writing helpers shared across modules."""

from __future__ import annotations

import json
from pathlib import Path

__all__ = ["fmt_float", "write_csv", "write_json"]


def fmt_float(x: float) -> str:
    """Format a float with 17 significant digits (exact double round-trip)."""
    return f"{float(x):.17g}"


def write_csv(path, header: list[str], rows) -> None:
    """Write pre-formatted rows under a header; values must be plain strings."""
    lines = [",".join(header)]
    lines.extend(",".join(str(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    """Dump JSON with sorted keys so identical content gives identical bytes."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
