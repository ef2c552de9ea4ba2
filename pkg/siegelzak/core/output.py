import csv
import json
import logging
import math
import os
from typing import Any, Dict, List, Sequence

import numpy as np

logger = logging.getLogger("output")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, complex):
        return {"re": _jsonable(value.real), "im": _jsonable(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _prepare(path: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    return f"{path}.tmp"


def write_json_atomic(path: str, payload: Dict[str, Any]) -> str:
    """Write `payload` as sorted, indented JSON via a temp file and rename."""
    tmp = _prepare(path)
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(_jsonable(payload), f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
    logger.info(f"Report written to {path}")
    return path


def write_csv_atomic(path: str, header: Sequence[str], rows: List[Sequence[str]]) -> str:
    tmp = _prepare(path)
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
    logger.info(f"CSV with {len(rows)} rows written to {path}")
    return path
