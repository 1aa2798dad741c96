"""Binary snapshots of a state.

Layout (all little-endian)::

    4 bytes   magic b"MHDS"
    uint32    version
    uint32    dim
    uint32    points per axis
    float64   time
    float64[] payload: physical u then h, component-major, C order

The payload stores physical-space values, so a snapshot can be read on any
grid layout; spectral coefficients are recomputed on load.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .dynamics import MHDState
from .spectral import Grid

MAGIC = b"MHDS"
VERSION = 1
HEADER = struct.Struct("<4sIIId")


class SnapshotError(IOError):
    pass


class BadMagic(SnapshotError):
    pass


class VersionUnsupported(SnapshotError):
    pass


class TruncatedPayload(SnapshotError):
    pass


def encode(state: MHDState) -> bytes:
    g = state.grid
    u, h = state.physical()
    payload = np.ascontiguousarray(np.stack([u, h]), dtype="<f8")
    return HEADER.pack(MAGIC, VERSION, g.dim, g.n, float(state.t)) + payload.tobytes()


def decode_physical(data: bytes) -> tuple[Grid, float, np.ndarray]:
    """Header fields and the raw payload array of shape ``(2, dim) + grid.shape``."""
    if len(data) < HEADER.size:
        raise TruncatedPayload(f"header needs {HEADER.size} bytes, got {len(data)}")
    magic, version, dim, n, t = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"version {version} (supported: {VERSION})")
    grid = Grid(dim, n)
    count = 2 * dim * n**dim
    body = data[HEADER.size :]
    if len(body) < 8 * count:
        raise TruncatedPayload(f"payload needs {8 * count} bytes, got {len(body)}")
    if len(body) > 8 * count:
        raise SnapshotError(f"{len(body) - 8 * count} trailing bytes after payload")
    values = np.frombuffer(body, dtype="<f8", count=count).astype(float)
    return grid, t, values.reshape((2, dim) + grid.shape)


def write_snapshot(state: MHDState, path: str | os.PathLike) -> None:
    """Write atomically: a temporary file in the target directory is renamed over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(encode(state))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_physical(path: str | os.PathLike) -> tuple[Grid, float, np.ndarray]:
    return decode_physical(Path(path).read_bytes())


def read_snapshot(path: str | os.PathLike) -> MHDState:
    grid, t, values = read_physical(path)
    coeffs = grid.to_spectral(values)
    return MHDState(grid, t, coeffs[0], coeffs[1])
