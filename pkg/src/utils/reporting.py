"""
Output helpers: exact rational strings, display-only decimals, JSON
documents and the versioned decay-bin CSV.
"""

import csv
import json
from datetime import datetime, timezone
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from pydantic import BaseModel

from src.utils.logger import get_logger

logger = get_logger(__name__)

DECAY_CSV_HEADER = "# bolic-decay-bins v1"
DECAY_CSV_COLUMNS = ("d_bin", "max_defect", "samples")

Rational = Union[Fraction, int, float, str]


def rational_str(value: Rational) -> str:
    """Exact "numerator/denominator" (integers without a denominator)."""
    if isinstance(value, float):
        value = Fraction(repr(value))
    return str(Fraction(value))


def decimal_str(value: Rational, digits: int) -> str:
    """Decimal rendering with ``digits`` fractional digits (display only)."""
    q = Fraction(value) if not isinstance(value, float) else Fraction(repr(value))
    with localcontext() as ctx:
        ctx.prec = max(28, digits + len(str(abs(q.numerator) // q.denominator)) + 2)
        exact = Decimal(q.numerator) / Decimal(q.denominator)
        return str(exact.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN))


def render_value(value: Rational, decimal: Optional[int] = None) -> str:
    """Exact value, followed by a marked decimal when ``decimal`` is set."""
    text = rational_str(value)
    if decimal is None:
        return text
    return f"{text}  (≈ {decimal_str(value, decimal)}, display only)"


def add_decimals(constants: Dict[str, Any], digits: int) -> Dict[str, Any]:
    """Copy of a dumped ConstantsRecord with a display-only decimal per entry."""
    out = dict(constants)
    entries = {}
    for name, entry in constants.get("entries", {}).items():
        entry = dict(entry)
        if entry.get("value") is not None:
            entry["decimal_display_only"] = decimal_str(entry["value"], digits)
        entries[name] = entry
    out["entries"] = entries
    return out


def _default(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump()
    if isinstance(obj, Fraction):
        return rational_str(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def to_json(doc: Dict[str, Any]) -> str:
    """Deterministic JSON (sorted keys, two-space indent)."""
    return json.dumps(doc, indent=2, sort_keys=True, default=_default, ensure_ascii=False)


def write_json(path: Path, doc: Dict[str, Any], timestamp: bool = True) -> Path:
    """
    Write a JSON output document.

    ``written_at`` is the only field that differs between identical runs.
    """
    doc = dict(doc)
    if timestamp:
        doc["written_at"] = datetime.now(timezone.utc).isoformat()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(doc) + "\n", encoding="utf-8")
    logger.info(f"📝 Wrote {path}")
    return path


def write_decay_csv(path: Path, series: Iterable[tuple]) -> Path:
    """
    Write decay bins as CSV.

    Args:
        path: Output file
        series: (series id, bins) pairs; bins are objects with d_bin,
            max_defect and samples attributes. Each series starts with a
            "# series: <id>" comment line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(DECAY_CSV_HEADER + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DECAY_CSV_COLUMNS)
        for name, bins in series:
            handle.write(f"# series: {name}\n")
            for row in bins:
                writer.writerow([row.d_bin, row.max_defect, row.samples])
    logger.info(f"📝 Wrote decay bins to {path}")
    return path
