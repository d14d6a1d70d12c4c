"""Line-delimited JSON metrics, one record per training iteration."""

from __future__ import annotations

import json
import math
from pathlib import Path

from throwcatch.errors import NonFiniteError


def append_metrics(path, record: dict) -> None:
    for key, value in record.items():
        if isinstance(value, float) and not math.isfinite(value):
            raise NonFiniteError(f"metrics field {key} is {value}")
    line = json.dumps(record, allow_nan=False)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()


def read_metrics(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
