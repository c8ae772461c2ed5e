"""Deterministic text serialization helpers.

Floats are rendered with repr() (shortest round-trip form), JSON keys are
sorted, and lines end with a plain newline, so identical inputs always
produce byte-identical CSV/JSON artifacts.
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int,)):
        return str(value)
    if value is None:
        return ""
    if isinstance(value, float):
        # repr round-trips exactly and renders non-finite values as inf/nan
        return repr(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
