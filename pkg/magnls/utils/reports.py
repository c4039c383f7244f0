"""JSON reports and CSV series on disk."""
import csv
import hashlib
import json
import logging
import math
import os

import numpy as np

from magnls.models.diagnostics import CSV_COLUMNS

logger = logging.getLogger(__name__)


def _plain(value):
    """Convert numpy scalars, arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


def dumps(payload):
    """Deterministic UTF-8 JSON text: sorted keys, fixed separators."""
    return json.dumps(_plain(payload), sort_keys=True, indent=2, ensure_ascii=False)


def write_json(path, payload):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(dumps(payload))
        handle.write('\n')
    logger.debug(f"Wrote report {path}")
    return path


def write_series_csv(path, series):
    """
    Write diagnostics records as RFC-4180 CSV with the fixed column order.

    Args:
        path: Target file path
        series: Iterable of DiagnosticsRecord

    Returns:
        The path written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\r\n')
        writer.writerow(CSV_COLUMNS)
        for record in series:
            writer.writerow([repr(float(v)) for v in record.csv_row()])
    return path


def config_hash(payload):
    """SHA-256 of the canonical JSON form of a configuration."""
    return hashlib.sha256(dumps(payload).encode('utf-8')).hexdigest()
