"""
CSV packaging of experiment results.

Floats are written with repr (shortest round-trip form) so that a fixed
configuration always produces the same bytes.
"""
import csv
import io
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from src.models.experiment import MetricsRow
from src.storage.trace_store import atomic_write
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

METRICS_COLUMNS = [
    "T", "alpha", "seed", "mode", "fairness_online", "fairness_offline",
    "c_alpha_regret", "surrogate_regret", "min_rate", "max_rate",
]
RAW_COLUMNS = ["fairness_online_raw", "c_alpha_regret_raw"]
INTEGRAL_COLUMNS = ["fairness_realized", "max_realized_gap", "hoeffding_radius"]


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def metrics_header(m: int, integral: bool = False) -> List[str]:
    header = METRICS_COLUMNS + [f"R_{i}" for i in range(1, m + 1)] + RAW_COLUMNS
    return header + INTEGRAL_COLUMNS if integral else header


def metrics_records(rows: Sequence[MetricsRow]) -> List[List[str]]:
    integral = any(r.mode == "integral" for r in rows)
    out = []
    for r in rows:
        record = [getattr(r, c) for c in METRICS_COLUMNS] + list(r.R) + [getattr(r, c) for c in RAW_COLUMNS]
        if integral:
            record += [getattr(r, c) for c in INTEGRAL_COLUMNS]
        out.append([format_value(v) for v in record])
    return out


def model_records(rows: Sequence[BaseModel]) -> List[List[str]]:
    return [[format_value(v) for v in row.model_dump().values()] for row in rows]


def model_header(rows: Sequence[BaseModel]) -> List[str]:
    return list(type(rows[0]).model_fields) if rows else []


def render_csv(header: Sequence[str], records: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(records)
    return buf.getvalue()


def write_csv(path: Union[str, Path], header: Sequence[str], records: Iterable[Sequence[str]]) -> None:
    """Write a CSV file atomically; nothing is left behind on failure."""
    with atomic_write(path, newline="") as f:
        f.write(render_csv(header, records))
    logger.info("CSV written", path=str(path))


def metrics_csv(rows: Sequence[MetricsRow], m: int, path: Optional[Union[str, Path]] = None) -> str:
    """Render metrics rows; also write them to path when given."""
    integral = any(r.mode == "integral" for r in rows)
    header, records = metrics_header(m, integral), metrics_records(rows)
    if path is not None:
        write_csv(path, header, records)
    return render_csv(header, records)


def table_csv(rows: Sequence[BaseModel], path: Optional[Union[str, Path]] = None) -> str:
    """Render any list of flat pydantic rows; also write them to path when given."""
    header, records = model_header(rows), model_records(rows)
    if path is not None:
        write_csv(path, header, records)
    return render_csv(header, records)
