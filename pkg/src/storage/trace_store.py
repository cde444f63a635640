"""
Trace file persistence.

Format: a header line

    # fairalloc-trace v1 N=<n> m=<m> family=<tag>

then one line per round with m fields separated by '|'. A field is either a
1-indexed file id (one-hot demand) or N comma-separated reals (dense demand).
Reals are written with repr, so a save/load round trip is bit-exact.
"""
import math
import os
import re
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator, List, Union

import numpy as np

from src.models.allocation import DemandTrace
from src.utils.errors import DataError, DimensionError, TraceFormatError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

_HEADER = re.compile(r"^# fairalloc-trace v1 N=(\d+) m=(\d+) family=(cache|sched|match)\s*$")


@contextmanager
def atomic_write(path: Union[str, Path], newline: str = "\n") -> Iterator[IO[str]]:
    """Write to a temporary file beside path and rename it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline=newline) as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def save_trace(trace: DemandTrace, path: Union[str, Path]) -> None:
    """Write a trace; the file appears only once complete."""
    with atomic_write(path) as f:
        f.write(f"# fairalloc-trace v1 N={trace.N} m={trace.m} family={trace.family}\n")
        if trace.is_one_hot:
            for row in trace.one_hot + 1:
                f.write("|".join(str(int(j)) for j in row) + "\n")
        else:
            for X in trace.dense:
                f.write("|".join(",".join(repr(float(v)) for v in X[:, i]) for i in range(trace.m)) + "\n")
    logger.info("trace saved", path=str(path), T=trace.horizon)


def _parse_real(text: str, line: int, field: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TraceFormatError(f"not a number: {text!r}", line, str(field)) from None
    if not math.isfinite(value):
        raise TraceFormatError(f"non-finite value {text!r}", line, str(field))
    return value


def load_trace(path: Union[str, Path]) -> DemandTrace:
    """
    Read a trace file.

    Raises:
        DataError: The file cannot be read
        TraceFormatError: Malformed header or field, with line and field number
        DimensionError: A line whose field count or vector length disagrees with the header
    """
    try:
        with open(path, "r") as f:
            lines = f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read trace file {path}: {getattr(e, 'strerror', None) or e}") from e
    if not lines:
        raise TraceFormatError("empty file", 1, "header")
    match = _HEADER.match(lines[0])
    if not match:
        raise TraceFormatError(f"bad header {lines[0]!r}", 1, "header")
    N, m, family = int(match.group(1)), int(match.group(2)), match.group(3)
    if N < 1 or m < 1:
        raise TraceFormatError("N and m must be positive", 1, "header")

    rounds: List[list] = []
    dense = False
    for lineno, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        fields = text.split("|")
        if len(fields) != m:
            raise DimensionError(f"expected {m} fields, found {len(fields)}", line=lineno)
        row = []
        for i, raw in enumerate(fields, start=1):
            raw = raw.strip()
            if not raw:
                raise TraceFormatError("empty field", lineno, str(i))
            if "," in raw or "." in raw or "e" in raw.lower():
                values = [_parse_real(v, lineno, i) for v in raw.split(",")]
                if len(values) != N:
                    raise DimensionError(f"field {i} has {len(values)} entries, expected N={N}", line=lineno)
                row.append(values)
                dense = True
            else:
                try:
                    j = int(raw)
                except ValueError:
                    raise TraceFormatError(f"not a file id: {raw!r}", lineno, str(i)) from None
                if not 1 <= j <= N:
                    raise TraceFormatError(f"file id {j} outside [1, {N}]", lineno, str(i))
                row.append(j)
        rounds.append(row)
    if not rounds:
        raise TraceFormatError("no rounds after header", len(lines), None)

    if not dense:
        return DemandTrace(N=N, m=m, family=family, one_hot=np.array(rounds, dtype=np.int64) - 1)
    X = np.zeros((len(rounds), N, m))
    for t, row in enumerate(rounds):
        for i, value in enumerate(row):
            if isinstance(value, list):
                X[t, :, i] = value
            else:
                X[t, value - 1, i] = 1.0
    return DemandTrace(N=N, m=m, family=family, dense=X)
