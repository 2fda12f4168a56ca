"""
Deterministic CSV / JSON serialization and the matching CSV reader.

CSV files start with ``# key: value`` preamble lines, then a header row.
Floats use the shortest round-trip form; infinities are written as the
literal strings ``inf`` / ``-inf`` in both CSV and JSON.
"""
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, TextIO, Tuple

import numpy as np

from .errors import ConfigError
from .parsers import format_float


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Mapping[str, Any]],
               preamble: Optional[Mapping[str, str]] = None) -> str:
    buf = io.StringIO()
    for key, value in (preamble or {}).items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else format_float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def render_json(payload: Any) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + '\n'


def emit(text: str, output: Optional[Path], stream: Optional[TextIO] = None) -> None:
    """Write ``text`` to ``output`` or, when None, to ``stream`` (stdout by default)."""
    if output is None:
        (stream or sys.stdout).write(text)
        return
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(text)


def write_table(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]],
                preamble: Optional[Mapping[str, str]] = None) -> None:
    emit(render_csv(columns, rows, preamble), Path(path))


def parse_table(text: str, source: str = '<string>') -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Split a CSV produced by render_csv into (preamble, rows)."""
    preamble: Dict[str, str] = {}
    lines = text.splitlines()
    start = 0
    for start, line in enumerate(lines):
        if not line.startswith('#'):
            break
        key, _, value = line[1:].partition(':')
        preamble[key.strip()] = value.strip()
    else:
        start = len(lines)
    body = lines[start:]
    if not body:
        raise ConfigError(f"{source}: missing header row")
    reader = csv.reader(body)
    header = next(reader)
    rows = []
    for lineno, record in enumerate(reader, start + 2):
        if len(record) != len(header):
            raise ConfigError(f"expected {len(header)} fields, got {len(record)}",
                              line=lineno, source=source)
        rows.append(dict(zip(header, record)))
    return preamble, rows


def read_table(path: Path) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    path = Path(path)
    return parse_table(path.read_text(encoding='utf-8'), str(path))
