"""CSV and JSON writers with reproducible formatting."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .field_ops import SampleBatch

__all__ = ["format_value", "write_csv", "write_json", "write_sample_batch_csv", "write_kernel_csv"]


def format_value(v) -> str:
    """Floats with 17 significant digits; integers and strings unchanged."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (float, np.floating)):
        o = float(o)
        return o if math.isfinite(o) else str(o)
    return o


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_sample_batch_csv(path, batch: SampleBatch) -> Path:
    """Long format ``draw_index,point_index,coord_index,value``."""
    c, m, d = batch.values.shape
    idx = np.indices((c, m, d)).reshape(3, -1).T
    vals = batch.values.reshape(-1)
    with open(path, "w", newline="") as fh:
        fh.write("draw_index,point_index,coord_index,value\n")
        fh.writelines(f"{a},{b},{e},{format(v, '.17g')}\n" for (a, b, e), v in zip(idx, vals))
    return Path(path)


def write_kernel_csv(path, entries: np.ndarray) -> Path:
    """Kernel matrix as ``i,j,value`` rows."""
    m = entries.shape[0]
    rows = ((i, j, entries[i, j]) for i in range(m) for j in range(m))
    return write_csv(path, ["i", "j", "value"], rows)
