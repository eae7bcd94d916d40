"""Bit-exact binary storage for id-aligned embedding vectors (SORE format v1)
and alignment of embeddings with a corpus.

On-disk layout, all integers little-endian, no padding or trailing bytes:

    magic   4 bytes ASCII "SORE"
    version u32 = 1
    count   u64
    dim     u32
    count records of:  id_len u16 | id (UTF-8, id_len bytes) | dim x f32

Floats are IEEE-754 32-bit little-endian regardless of platform.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import MissingEmbeddingError, OrphanEmbeddingError, SoreFormatError

MAGIC = b"SORE"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")
_ID_LEN = struct.Struct("<H")


@dataclass
class EmbeddingMatrix:
    """Dense float32 vectors, one row per instance id, in id order.

    Immutable after construction: the vector buffer is marked read-only.
    """

    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        self.ids = tuple(self.ids)
        vecs = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if vecs.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {vecs.shape}")
        if vecs.shape[0] != len(self.ids):
            raise ValueError(
                f"{len(self.ids)} ids but {vecs.shape[0]} vector rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate instance ids in embedding matrix")
        if vecs.size and not np.isfinite(vecs).all():
            bad = int(np.argwhere(~np.isfinite(vecs).all(axis=1))[0][0])
            raise ValueError(f"non-finite value in vector for id {self.ids[bad]!r}")
        vecs.flags.writeable = False
        self.vectors = vecs

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def row_index(self) -> dict[str, int]:
        return {iid: i for i, iid in enumerate(self.ids)}


@dataclass
class AlignedDataset:
    """Corpus plus embedding matrix covering exactly the same instance ids."""

    corpus: Corpus
    matrix: EmbeddingMatrix
    index: dict[str, int]

    def vector_for(self, instance_id: str) -> np.ndarray:
        return self.matrix.vectors[self.index[instance_id]]


def write_embeddings(path: str | Path, matrix: EmbeddingMatrix) -> None:
    """Serialize to SORE v1; read_embeddings inverts this bitwise."""
    # Revalidate before touching the file so a failure writes nothing.
    if matrix.vectors.size and not np.isfinite(matrix.vectors).all():
        raise ValueError("matrix contains non-finite values")
    encoded_ids = []
    for iid in matrix.ids:
        raw = iid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"instance id too long to serialize: {iid[:32]!r}...")
        encoded_ids.append(raw)
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(matrix.ids), matrix.dim))
        rows = matrix.vectors.astype("<f4", copy=False)
        for raw, row in zip(encoded_ids, rows):
            fh.write(_ID_LEN.pack(len(raw)))
            fh.write(raw)
            fh.write(row.tobytes())


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Exact reconstruction; validates magic, version, counts, finiteness."""
    path = Path(path)
    with path.open("rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise SoreFormatError(f"{path.name}: truncated header")
        magic, version, count, dim = _HEADER.unpack(header)
        if magic != MAGIC:
            raise SoreFormatError(f"{path.name}: bad magic {magic!r}")
        if version != VERSION:
            raise SoreFormatError(f"{path.name}: unsupported version {version}")
        ids: list[str] = []
        vectors = np.empty((count, dim), dtype=np.float32)
        row_bytes = 4 * dim
        for i in range(count):
            len_raw = fh.read(_ID_LEN.size)
            if len(len_raw) < _ID_LEN.size:
                raise SoreFormatError(f"{path.name}: truncated at record {i}")
            (id_len,) = _ID_LEN.unpack(len_raw)
            id_raw = fh.read(id_len)
            if len(id_raw) < id_len:
                raise SoreFormatError(f"{path.name}: truncated at record {i}")
            vec_raw = fh.read(row_bytes)
            if len(vec_raw) < row_bytes:
                raise SoreFormatError(f"{path.name}: truncated at record {i}")
            row = np.frombuffer(vec_raw, dtype="<f4")
            if not np.isfinite(row).all():
                raise SoreFormatError(f"{path.name}: non-finite value in record {i}")
            ids.append(id_raw.decode("utf-8"))
            vectors[i] = row
        if fh.read(1):
            raise SoreFormatError(f"{path.name}: trailing bytes after record {count - 1}")
    try:
        return EmbeddingMatrix(ids=tuple(ids), vectors=vectors)
    except ValueError as exc:
        raise SoreFormatError(f"{path.name}: {exc}") from None


def align(corpus: Corpus, matrix: EmbeddingMatrix) -> AlignedDataset:
    """Pair a corpus with its embedding matrix; id sets must match exactly."""
    corpus_ids = set(corpus.ids())
    matrix_ids = set(matrix.ids)
    missing = corpus_ids - matrix_ids
    if missing:
        raise MissingEmbeddingError(missing)
    orphan = matrix_ids - corpus_ids
    if orphan:
        raise OrphanEmbeddingError(orphan)
    return AlignedDataset(corpus=corpus, matrix=matrix, index=matrix.row_index())
