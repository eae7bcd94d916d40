"""Writer for the SORE v1 binary embedding format.

Layout (integers little-endian, floats IEEE-754 32-bit little-endian):
magic "SORE" | u32 version=1 | u64 count | u32 dim | count records of
(u16 id length, UTF-8 id bytes, dim floats). No padding or trailing bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

_HEADER = struct.Struct("<4sIQI")
_ID_LEN = struct.Struct("<H")


def write_sore(path: str | Path, ids: Sequence[str], vectors: np.ndarray) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise ValueError(f"{len(ids)} ids for vector shape {vectors.shape}")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids")
    if vectors.size and not np.isfinite(vectors).all():
        raise ValueError("non-finite embedding value")
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(b"SORE", 1, len(ids), vectors.shape[1]))
        for iid, row in zip(ids, vectors):
            raw = iid.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"id too long: {iid[:32]!r}...")
            fh.write(_ID_LEN.pack(len(raw)))
            fh.write(raw)
            fh.write(row.tobytes())
