"""Binary and text serialization of octuple sequences and masked batches.

OM8 (one song)::

    magic 4F 4D 38 01
    u32le note count N
    N records of 8 u16le element identifiers (special-token offset +4)

OMB1 (one batch of masked examples)::

    magic 4F 4D 42 31
    u32le example count E
    u32le sequence length L
    per example: L*8 u16le input identifiers (row major),
                 then L*8 u16le target identifiers, 0xFFFF = no target

The text form is one octuple per line, 8 space-separated decimal element
values (no special-token offset), for diffing and fixtures.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, TextIO

import numpy as np

from .encoding import OctupleSeq, validate_values
from .vocab import NUM_SPECIALS

OM8_MAGIC = b"OM8\x01"
OMB1_MAGIC = b"OMB1"
NO_TARGET = 0xFFFF


def om8_bytes(seq: OctupleSeq) -> bytes:
    """Serialize a sequence to OM8 bytes."""
    ids = (seq.array + NUM_SPECIALS).astype("<u2")
    return OM8_MAGIC + struct.pack("<I", len(seq)) + ids.tobytes()


def write_om8(seq: OctupleSeq, dest: str | Path | BinaryIO) -> int:
    """Write OM8 to a path or binary file object; returns bytes written."""
    payload = om8_bytes(seq)
    if hasattr(dest, "write"):
        dest.write(payload)
    else:
        Path(dest).write_bytes(payload)
    return len(payload)


def om8_from_bytes(data: bytes) -> OctupleSeq:
    if data[:4] != OM8_MAGIC:
        raise ValueError("not an OM8 stream (bad magic)")
    if len(data) < 8:
        raise ValueError("truncated OM8 header")
    (count,) = struct.unpack("<I", data[4:8])
    body = data[8 : 8 + count * 16]
    if len(body) != count * 16:
        raise ValueError("truncated OM8 records")
    ids = np.frombuffer(body, dtype="<u2").reshape(count, 8)
    values = ids.astype(np.int64) - NUM_SPECIALS
    validate_values(values)
    return OctupleSeq.from_array(values, copy=False)


def read_om8(source: str | Path | BinaryIO) -> OctupleSeq:
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    return om8_from_bytes(data)


def write_octuple_text(seq: OctupleSeq, dest: str | Path | TextIO) -> None:
    lines = "".join(" ".join(str(v) for v in row) + "\n" for row in seq.array)
    if hasattr(dest, "write"):
        dest.write(lines)
    else:
        Path(dest).write_text(lines)


def read_octuple_text(source: str | Path | TextIO) -> OctupleSeq:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 8:
            raise ValueError(f"line {lineno}: expected 8 values, got {len(parts)}")
        rows.append([int(p) for p in parts])
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), 8)
    validate_values(arr)
    return OctupleSeq.from_array(arr, copy=False)


def omb1_bytes(inputs: np.ndarray, targets: np.ndarray) -> bytes:
    """Serialize padded batch grids of shape (E, L, 8) to OMB1 bytes."""
    if inputs.shape != targets.shape or inputs.ndim != 3 or inputs.shape[2] != 8:
        raise ValueError(f"batch grids must share shape (E, L, 8), got {inputs.shape}")
    count, length, _ = inputs.shape
    header = OMB1_MAGIC + struct.pack("<II", count, length)
    chunks = [header]
    for i in range(count):
        chunks.append(inputs[i].astype("<u2").tobytes())
        chunks.append(targets[i].astype("<u2").tobytes())
    return b"".join(chunks)


def write_omb1(inputs: np.ndarray, targets: np.ndarray, dest: str | Path | BinaryIO) -> int:
    payload = omb1_bytes(inputs, targets)
    if hasattr(dest, "write"):
        dest.write(payload)
    else:
        Path(dest).write_bytes(payload)
    return len(payload)


def read_omb1(source: str | Path | BinaryIO) -> tuple[np.ndarray, np.ndarray]:
    """Read an OMB1 batch back as (inputs, targets) arrays of shape (E, L, 8)."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    if data[:4] != OMB1_MAGIC:
        raise ValueError("not an OMB1 stream (bad magic)")
    if len(data) < 12:
        raise ValueError("truncated OMB1 header")
    count, length = struct.unpack("<II", data[4:12])
    per_grid = length * 8 * 2
    expected = 12 + count * per_grid * 2
    if len(data) < expected:
        raise ValueError("truncated OMB1 records")
    inputs = np.empty((count, length, 8), dtype=np.uint16)
    targets = np.empty((count, length, 8), dtype=np.uint16)
    offset = 12
    for i in range(count):
        inputs[i] = np.frombuffer(data, dtype="<u2", count=length * 8, offset=offset).reshape(length, 8)
        offset += per_grid
        targets[i] = np.frombuffer(data, dtype="<u2", count=length * 8, offset=offset).reshape(length, 8)
        offset += per_grid
    return inputs, targets
