"""Deterministic JSON and CSV reports."""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from src.slopes.slope_estimate import encode_ext

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def bracketed(value: float) -> Dict[str, Any]:
    """An exact value in the {value, lower, upper} shape of every numeric report field."""
    encoded = encode_ext(float(value))
    return {"value": encoded, "lower": encoded, "upper": encoded}


def _sanitize(data: Any) -> Any:
    """Replace non-finite floats by their string encodings so the output is strict JSON."""
    if isinstance(data, dict):
        return {str(k): _sanitize(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_sanitize(v) for v in data]
    if isinstance(data, float) and not math.isfinite(data):
        return encode_ext(data) if not math.isnan(data) else None
    return data


def render_json(payload: Dict[str, Any]) -> str:
    document = {"schema_version": SCHEMA_VERSION, **payload}
    return json.dumps(_sanitize(document), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(rows: List[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """Header row plus one line per row; RFC-4180 quoting, '.' decimals."""
    frame = pd.DataFrame([_sanitize(row) for row in rows], columns=columns)
    return frame.to_csv(index=False, lineterminator="\n")


def write_text(text: str, out: Optional[Path]) -> None:
    """Write to ``out``, or to stdout when no path is given."""
    if out is None:
        print(text, end="")
        return
    out = Path(out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        f.write(text)
    logger.info(f"report written to {out}")
