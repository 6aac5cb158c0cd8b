"""Binary field snapshots.

Layout (little endian): magic ``b"RIPL"``, ``u16`` version, ``u32 n1``,
``u32 n2``, then ``n1*n2`` ``f64`` physical samples with ``x1`` varying
fastest.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import SpectralField, TorusGrid

MAGIC = b"RIPL"
VERSION = 1
_HEADER = struct.Struct("<4sHII")


def encode(values: np.ndarray) -> bytes:
    values = np.asarray(values, dtype="<f8")
    n1, n2 = values.shape
    return _HEADER.pack(MAGIC, VERSION, n1, n2) + np.ascontiguousarray(values.T).tobytes()


def decode(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ConfigurationError("snapshot truncated")
    magic, version, n1, n2 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ConfigurationError("not a RIPL snapshot")
    if version != VERSION:
        raise ConfigurationError(f"unsupported snapshot version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * n1 * n2:
        raise ConfigurationError("snapshot size does not match its header")
    return np.frombuffer(body, dtype="<f8").reshape(n2, n1).T.astype(float)


def write_snapshot(path, field: SpectralField | np.ndarray) -> str:
    """Write a snapshot and return the sha256 of its bytes."""
    values = field.physical() if isinstance(field, SpectralField) else field
    data = encode(values)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_snapshot(path) -> SpectralField:
    values = decode(Path(path).read_bytes())
    return SpectralField.from_physical(TorusGrid(*values.shape), values)


def content_hash(field: SpectralField) -> str:
    return hashlib.sha256(encode(field.physical())).hexdigest()
