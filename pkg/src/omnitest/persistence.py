"""Null-table cache files and p-value input files.

Null-table layout (all integers and floats little-endian)::

    magic        8 bytes   b"OMNITBL1"
    version      u32
    header_len   u32
    header       header_len bytes:
                   m u64, B u64, seed u64, alpha f64,
                   transform tag (u16 length + utf-8),
                   rng_id (u16 length + utf-8)
    header_crc   u32       CRC32 of the header bytes
    payload      m + 1 vectors, each u64 length + length * f64:
                   the m sorted S_i columns, then the sorted T* sample
    payload_crc  u32       CRC32 of the payload bytes
"""

from __future__ import annotations

import os
import re
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    ChecksumError,
    TableFileError,
    TruncatedFileError,
    UnsortedColumnError,
    ValidationError,
    VersionMismatchError,
)
from .omnibus import NullTable
from .pvalues import PValueVector
from .transforms import CLAMP_FLOOR, TransformKind

MAGIC = b"OMNITBL1"
FORMAT_VERSION = 1
_F64 = np.dtype("<f8")


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def _header_bytes(t: NullTable) -> bytes:
    return (
        struct.pack("<QQQd", t.m, t.replicates, t.seed, t.transform.alpha)
        + _pack_str(t.transform.tag)
        + _pack_str(t.rng_id)
    )


def save_null_table(table: NullTable, path) -> None:
    """Write ``table`` atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    header = _header_bytes(table)
    chunks = []
    for vec in list(table.columns) + [table.tstar_null]:
        chunks.append(struct.pack("<Q", vec.shape[0]))
        chunks.append(np.ascontiguousarray(vec, dtype=_F64).tobytes())
    payload = b"".join(chunks)
    blob = b"".join([
        MAGIC,
        struct.pack("<II", FORMAT_VERSION, len(header)),
        header,
        struct.pack("<I", zlib.crc32(header)),
        payload,
        struct.pack("<I", zlib.crc32(payload)),
    ])
    try:
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    except OSError as exc:
        raise OSError(f"cannot write null table to {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, data: bytes, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFileError(f"{self.path}: file truncated at byte {len(self.data)}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<H")
        return self.take(n).decode("utf-8")


def load_null_table(path) -> NullTable:
    """Read and fully re-validate a table written by :func:`save_null_table`."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read null table {path}: {exc}") from exc
    r = _Reader(data, path)
    if r.take(len(MAGIC)) != MAGIC:
        raise TableFileError(f"{path}: not a null-table file (bad magic)")
    version, header_len = r.unpack("<II")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    header = r.take(header_len)
    (crc,) = r.unpack("<I")
    if zlib.crc32(header) != crc:
        raise ChecksumError(f"{path}: header checksum mismatch")

    h = _Reader(header, path)
    m, replicates, seed, alpha = h.unpack("<QQQd")
    tag = h.string()
    rng_id = h.string()
    try:
        kind = TransformKind(tag, alpha)
    except ValidationError as exc:
        raise TableFileError(f"{path}: {exc}") from exc

    start = r.pos
    vectors = []
    for _ in range(m + 1):
        (length,) = r.unpack("<Q")
        if length != replicates:
            raise TableFileError(f"{path}: vector length {length} does not match B={replicates}")
        vectors.append(np.frombuffer(r.take(8 * length), dtype=_F64).astype(float))
    payload = data[start:r.pos]
    (pcrc,) = r.unpack("<I")
    if zlib.crc32(payload) != pcrc:
        raise ChecksumError(f"{path}: payload checksum mismatch")
    if r.pos != len(data):
        raise TableFileError(f"{path}: {len(data) - r.pos} trailing bytes")

    for i, vec in enumerate(vectors):
        if np.any(np.diff(vec) < 0):
            what = "T* sample" if i == m else f"column {i + 1}"
            raise UnsortedColumnError(f"{path}: {what} is not sorted ascending")
    tstar = vectors.pop()
    if np.any(tstar <= 0) or np.any(tstar > 1):
        raise TableFileError(f"{path}: T* values outside (0, 1]")
    columns = np.stack(vectors) if vectors else np.empty((0, replicates))
    return NullTable(int(m), kind, int(replicates), int(seed), rng_id, columns, tstar)


_SPLIT = re.compile(r"[,\s]+")


def read_pvalues(path, clamp_zero: bool = False) -> PValueVector:
    """Read p-values: one per line or comma separated; ``#`` starts a comment line.

    Exact zeros are rejected unless ``clamp_zero`` maps them to 1e-300.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        for tok in _SPLIT.split(line):
            if not tok:
                continue
            try:
                v = float(tok)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: cannot parse {tok!r} as a number") from None
            if v == 0.0:
                if not clamp_zero:
                    raise ValidationError(
                        f"{path}:{lineno}: p-value 0 is not allowed; pass --clamp-zero to map it to {CLAMP_FLOOR}"
                    )
                v = CLAMP_FLOOR
            if not 0.0 < v <= 1.0:
                raise ValidationError(f"{path}:{lineno}: p-value {tok} is outside (0, 1]")
            values.append(v)
    if not values:
        raise ValidationError(f"{path}: no p-values found")
    return PValueVector(values)
