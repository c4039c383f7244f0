"""Binary field checkpoints.

Layout (little-endian): magic ``MNLS``, u32 version, three u32 dims, three f64
half-widths, f64 b, f64 alpha, f64 t, then the row-major values as
interleaved (re, im) f64 pairs.
"""
import logging
import os
import struct

import numpy as np

from magnls.models.grid import Field, Grid, Params
from magnls.utils.errors import MagnlsError

logger = logging.getLogger(__name__)

MAGIC = b'MNLS'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<4sI3I3dddd')


class CheckpointError(MagnlsError):
    """Custom exception for checkpoint read/write errors."""

    def __init__(self, message):
        super().__init__(message, kind='invalid')


def write_checkpoint(path, field, params, t):
    """
    Write a field checkpoint.

    Args:
        path: Target file path; parent directories are created
        field: Field to store (non-finite values allowed when flagged post-blow-up)
        params: Equation parameters stored in the header
        t: Simulation time

    Returns:
        The path written
    """
    grid = field.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, *grid.dims, *grid.half_widths,
                          float(params.b), float(params.alpha), float(t))
    payload = np.ascontiguousarray(field.values, dtype='<c16').view('<f8')
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as handle:
        handle.write(header)
        handle.write(payload.tobytes(order='C'))
    logger.debug(f"Wrote checkpoint {path} at t={t}")
    return path


def read_checkpoint(path):
    """
    Read a field checkpoint.

    Args:
        path: Checkpoint file path

    Returns:
        Tuple (Field, Params, t)

    Raises:
        CheckpointError: If the file is missing, truncated or has a bad header
    """
    if not os.path.exists(path):
        raise CheckpointError(f"Checkpoint not found: {path}")
    with open(path, 'rb') as handle:
        raw = handle.read()
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"Checkpoint {path} is truncated")
    magic, version, n1, n2, n3, L1, L2, L3, b, alpha, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"Bad checkpoint magic {magic!r} in {path}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version} in {path}")
    grid = Grid((n1, n2, n3), (L1, L2, L3))
    expected = grid.size * 16
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise CheckpointError(
            f"Checkpoint {path} holds {len(body)} payload bytes, expected {expected}")
    values = np.frombuffer(body, dtype='<f8').view('<c16').reshape(grid.dims).astype(np.complex128)
    finite = bool(np.all(np.isfinite(values)))
    return Field(grid, values, post_blowup=not finite), Params(b=b, alpha=alpha), t
