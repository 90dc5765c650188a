"""Named-tensor container (``.fgt``).

Layout, all integers little-endian::

    b"FGTW" | u32 version (=1) | u64 header_len | header (UTF-8 JSON) | pad | payloads

The header is a JSON list of ``{"name", "dtype", "shape", "offset"}`` objects
in entry order. ``offset`` is relative to the payload area, which starts at
the first 64-byte-aligned position after the header; every offset is itself
a multiple of 64. Payloads are row-major ``<f4`` / ``<f8``. Nothing follows
the last payload.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    BadMagicError,
    DuplicateNameError,
    MalformedHeaderError,
    ShapePayloadMismatchError,
    TensorNameError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)


LOG_PREFIX = "[TENSORIO]"
MAGIC = b"FGTW"
VERSION = 1
ALIGNMENT = 64
PREFIX = struct.Struct("<4sIQ")

DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}

logger = logging.getLogger(__name__)


def _align(position: int) -> int:
    return -(-position // ALIGNMENT) * ALIGNMENT


def _check_name(name: object) -> str:
    if not isinstance(name, str) or not name:
        raise TensorNameError(f"tensor name must be a non-empty string, got {name!r}")
    if not name.isascii():
        raise TensorNameError(f"tensor name {name!r} is not ASCII")
    return name


@dataclass(frozen=True)
class TensorEntry:
    name: str
    dtype: str  # "f32" | "f64"
    shape: tuple[int, ...]
    payload: bytes

    def __post_init__(self) -> None:
        _check_name(self.name)
        if self.dtype not in DTYPES:
            raise ShapePayloadMismatchError(f"{self.name}: unsupported dtype {self.dtype!r}")
        if any(int(dim) < 0 for dim in self.shape):
            raise ShapePayloadMismatchError(f"{self.name}: negative dimension in shape {self.shape}")
        expected = self.n_bytes
        if len(self.payload) != expected:
            raise ShapePayloadMismatchError(
                f"{self.name}: shape {list(self.shape)} needs {expected} bytes, payload has {len(self.payload)}"
            )

    @property
    def n_bytes(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) * DTYPES[self.dtype].itemsize

    @classmethod
    def from_array(cls, name: str, array: np.ndarray) -> TensorEntry:
        """float32 stays f32; every other numeric dtype is stored as f64."""
        array = np.asarray(array)
        dtype = "f32" if array.dtype == np.float32 else "f64"
        data = np.ascontiguousarray(array, dtype=DTYPES[dtype])
        return cls(name=name, dtype=dtype, shape=tuple(int(dim) for dim in data.shape), payload=data.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.payload, dtype=DTYPES[self.dtype]).reshape(self.shape).copy()


# ---------------------------------------------------------------------------
# Encode
# ---------------------------------------------------------------------------


def write_container(entries: Iterable[TensorEntry]) -> bytes:
    entries = list(entries)
    seen: set[str] = set()
    for entry in entries:
        if entry.name in seen:
            raise DuplicateNameError(entry.name)
        seen.add(entry.name)

    header_items = []
    offset = 0
    for entry in entries:
        offset = _align(offset)
        header_items.append({"name": entry.name, "dtype": entry.dtype, "shape": list(entry.shape), "offset": offset})
        offset += entry.n_bytes

    header = json.dumps(header_items, separators=(",", ":")).encode("utf-8")
    prefix = PREFIX.pack(MAGIC, VERSION, len(header))

    out = bytearray(prefix + header)
    if entries:
        payload_start = _align(len(out))
        out.extend(b"\x00" * (payload_start - len(out)))
        for item, entry in zip(header_items, entries):
            target = payload_start + item["offset"]
            out.extend(b"\x00" * (target - len(out)))
            out.extend(entry.payload)
    return bytes(out)


# ---------------------------------------------------------------------------
# Decode
# ---------------------------------------------------------------------------


def _parse_header(raw: bytes) -> list[dict]:
    try:
        items = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeaderError(f"header is not valid UTF-8 JSON: {exc}") from None

    if not isinstance(items, list):
        raise MalformedHeaderError("header must be a JSON list")

    for index, item in enumerate(items):
        if not isinstance(item, dict) or set(item) != {"name", "dtype", "shape", "offset"}:
            raise MalformedHeaderError(f"entry {index} must have exactly name, dtype, shape, offset")
        if not isinstance(item["name"], str) or not item["name"] or not item["name"].isascii():
            raise MalformedHeaderError(f"entry {index} has an invalid name {item['name']!r}")
        if item["dtype"] not in DTYPES:
            raise MalformedHeaderError(f"entry {item['name']!r} has unsupported dtype {item['dtype']!r}")
        shape = item["shape"]
        if not isinstance(shape, list) or any(type(dim) is not int or dim < 0 for dim in shape):
            raise MalformedHeaderError(f"entry {item['name']!r} has an invalid shape {shape!r}")
        offset = item["offset"]
        if type(offset) is not int or offset < 0 or offset % ALIGNMENT:
            raise MalformedHeaderError(f"entry {item['name']!r} has a misaligned offset {offset!r}")
    return items


def read_container(data: bytes) -> list[TensorEntry]:
    data = bytes(data)
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagicError("not a tensor container: bad magic")
    if len(data) < PREFIX.size:
        raise MalformedHeaderError("file ends inside the fixed prefix")

    _, version, header_len = PREFIX.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"container version {version} is not supported (expected {VERSION})")

    header_end = PREFIX.size + header_len
    if header_end > len(data):
        raise MalformedHeaderError(f"header length {header_len} runs past end of file")
    items = _parse_header(data[PREFIX.size:header_end])

    if not items:
        if len(data) != header_end:
            raise MalformedHeaderError("trailing bytes after an empty header")
        return []

    payload_start = _align(header_end)
    entries: list[TensorEntry] = []
    names: set[str] = set()
    cursor = 0
    for item in items:
        name = item["name"]
        if name in names:
            raise MalformedHeaderError(f"duplicate tensor name {name!r} in header")
        names.add(name)

        if item["offset"] < cursor:
            raise MalformedHeaderError(f"entry {name!r} overlaps the previous payload")
        n_bytes = int(np.prod(item["shape"], dtype=np.int64)) * DTYPES[item["dtype"]].itemsize
        start = payload_start + item["offset"]
        end = start + n_bytes
        if end > len(data):
            raise TruncatedPayloadError(f"payload of {name!r} needs bytes up to {end}, file has {len(data)}")

        entries.append(
            TensorEntry(name=name, dtype=item["dtype"], shape=tuple(item["shape"]), payload=data[start:end])
        )
        cursor = item["offset"] + n_bytes

    if payload_start + cursor != len(data):
        raise MalformedHeaderError(f"{len(data) - payload_start - cursor} trailing byte(s) after the last payload")
    return entries


# ---------------------------------------------------------------------------
# File helpers
# ---------------------------------------------------------------------------


def save_tensors(path: str | Path, arrays: Mapping[str, np.ndarray]) -> None:
    blob = write_container(TensorEntry.from_array(name, array) for name, array in arrays.items())
    Path(path).write_bytes(blob)
    logger.debug("%s Wrote %d tensor(s), %d bytes to %s", LOG_PREFIX, len(arrays), len(blob), path)


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    entries = read_container(Path(path).read_bytes())
    logger.debug("%s Read %d tensor(s) from %s", LOG_PREFIX, len(entries), path)
    return {entry.name: entry.to_array() for entry in entries}
