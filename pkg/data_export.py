"""
Выгрузка записей измерений и таблиц в CSV/JSON
"""
import io
import sys
import json
import math
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import pandas as pd

from measurement import MeasurementRecord
from simulation_errors import InvalidArgumentError

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json')
STDOUT = '-'

RECORD_COLUMNS = ('label', 'kind', 'lo_phase_deg', 'variance_shot', 'db')
SWEEP_COLUMNS = ('value', 'db_min', 'db_max')
SWEEP_JOINT_COLUMNS = SWEEP_COLUMNS + ('delta_sq',)

Row = Mapping[str, Any]


def format_number(value: float) -> str:
    """Фиксированные 9 знаков после запятой, без '-0.000000000'"""
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgumentError(f"cannot emit non-finite value {value!r}")
    text = f"{value:.9f}"
    if text.strip('-0.') == '':
        text = text.lstrip('-')
    return text


def record_rows(records: Iterable[MeasurementRecord]) -> List[Dict[str, Any]]:
    return [
        {
            'label': r.label,
            'kind': r.kind,
            'lo_phase_deg': r.lo_phase_deg,
            'variance_shot': r.variance_shot,
            'db': r.db,
        }
        for r in records
    ]


def _cell(value: Any) -> Optional[str]:
    if value is None:
        return None
    if isinstance(value, str):
        return value
    return format_number(value)


def to_csv(columns: Sequence[str], rows: Iterable[Row]) -> str:
    """CSV с заголовком ровно из columns; None -> пустая ячейка"""
    table = pd.DataFrame([[_cell(row[c]) for c in columns] for row in rows], columns=list(columns))
    buffer = io.StringIO()
    table.to_csv(buffer, index=False, na_rep='', lineterminator='\n')
    return buffer.getvalue()


def _json_value(value: Any) -> str:
    if value is None:
        return 'null'
    if isinstance(value, str):
        return json.dumps(value)
    return format_number(value)


def to_json(columns: Sequence[str], rows: Iterable[Row]) -> str:
    """Массив объектов с одинаковыми ключами в порядке columns"""
    objects = [
        '  {' + ', '.join(f"{json.dumps(c)}: {_json_value(row[c])}" for c in columns) + '}'
        for row in rows
    ]
    if not objects:
        return '[]\n'
    return '[\n' + ',\n'.join(objects) + '\n]\n'


def render(columns: Sequence[str], rows: Iterable[Row], fmt: str) -> str:
    if fmt not in FORMATS:
        raise InvalidArgumentError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    rows = list(rows)
    return to_csv(columns, rows) if fmt == 'csv' else to_json(columns, rows)


def emit(columns: Sequence[str], rows: Iterable[Row], fmt: str, output_path: str) -> int:
    """Запись таблицы в файл или stdout ('-'); возвращает число записанных байт"""
    text = render(columns, rows, fmt)
    data = text.encode('utf-8')
    if output_path == STDOUT:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(output_path).write_bytes(data)
        logger.info(f"Wrote {len(data)} bytes to {output_path}")
    return len(data)


def metadata_path(output_path: str) -> Path:
    return Path(f"{output_path}.meta.json")


def write_metadata(output_path: str, metadata: Dict[str, Any]) -> Optional[Path]:
    """Сопроводительный <output>.meta.json; при выводе в stdout метаданные уходят в лог"""
    text = json.dumps(metadata, indent=2, sort_keys=True) + '\n'
    if output_path == STDOUT:
        logger.info(f"Run metadata: {json.dumps(metadata, sort_keys=True)}")
        return None
    path = metadata_path(output_path)
    path.write_text(text, encoding='utf-8')
    logger.info(f"Wrote metadata to {path}")
    return path
