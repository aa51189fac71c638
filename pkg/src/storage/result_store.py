"""
Result Store - Write sweep tables and reports
CSV for sweeps, JSON for single-state reports; file or stdout
"""

import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_cell(value: Any) -> str:
    """CSV cell text: empty for missing values, repr-precision floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class ResultStore:
    """
    Emit results to a file or stdout.

    Output carries no timestamps so identical runs give identical bytes.
    """

    def __init__(self, out: Optional[str] = None):
        """
        Initialize result store.

        Args:
            out: Output file path; None writes to stdout
        """
        self.out = Path(out) if out else None

    def _emit(self, text: str):
        if self.out is None:
            sys.stdout.write(text)
            sys.stdout.flush()
            return

        self.out.parent.mkdir(parents=True, exist_ok=True)
        with open(self.out, "w", newline="") as f:
            f.write(text)
        logger.info(f"[OK] Wrote {self.out}")

    def write_json(self, data: Any):
        self._emit(json.dumps(_plain(data), indent=2) + "\n")

    def write_csv(self, header: Sequence[str], rows: Iterable[Sequence[Any]]):
        """Header row first, then one line per row, in the given order."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
            count += 1
        self._emit(buffer.getvalue())
        logger.debug(f"CSV: {count} rows")


def read_csv(path: str) -> List[dict]:
    """Read back a CSV written by ResultStore."""
    with open(path, "r", newline="") as f:
        return list(csv.DictReader(f))
