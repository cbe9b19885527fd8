"""Binary feature-matrix ingestion, pairing checks, and row normalization.

On-disk format ("CFM"), little-endian throughout:

    magic   8 bytes  b"CASTFEAT"
    version u32      1
    n       u64      sample count
    dim     u32      feature dimension
    id_len  u32      byte length of the id table
    ids     id_len bytes, UTF-8, ids separated by "\\n" (no trailing newline)
    data    n * dim float32 values, row-major

Payload floats are 32-bit for storage economy; in-memory values are float64 so
downstream loss/gradient arithmetic is testable against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    BadVersion,
    FormatError,
    IdMismatch,
    NonFiniteEntry,
    SampleCountMismatch,
    Truncated,
)

MAGIC = b"CASTFEAT"
VERSION = 1
_HEADER = struct.Struct("<IQII")  # version, n_samples, dim, id_len


@dataclass
class FeatureMatrix:
    ids: list
    values: np.ndarray  # N x D float64

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def read_feature_file(path) -> FeatureMatrix:
    """Read and validate a CFM file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC):
        raise Truncated(f"{path}: file shorter than the magic header")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: bad magic {blob[:len(MAGIC)]!r}")
    off = len(MAGIC)
    if len(blob) < off + _HEADER.size:
        raise Truncated(f"{path}: incomplete header")
    version, n, dim, id_len = _HEADER.unpack_from(blob, off)
    off += _HEADER.size
    if version != VERSION:
        raise BadVersion(f"{path}: version {version}, expected {VERSION}")
    if len(blob) < off + id_len:
        raise Truncated(f"{path}: id table shorter than declared")
    try:
        id_blob = blob[off : off + id_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: id table is not valid UTF-8: {exc}")
    ids = id_blob.split("\n") if id_len else []
    if len(ids) != n:
        raise Truncated(f"{path}: id table has {len(ids)} ids, header declares {n}")
    off += id_len
    need = n * dim * 4
    got = len(blob) - off
    if got != need:
        raise Truncated(f"{path}: payload has {got} bytes, header declares {need}")
    raw = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=off)
    values = raw.astype(np.float64).reshape(n, dim)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise NonFiniteEntry(f"{path}: non-finite value at row {bad[0]}, col {bad[1]}")
    return FeatureMatrix(ids=list(ids), values=values)


def write_feature_file(path, matrix: FeatureMatrix) -> None:
    """Write a FeatureMatrix in the CFM format (values stored as float32)."""
    for sid in matrix.ids:
        if "\n" in sid:
            raise FormatError(f"id {sid!r} contains a newline")
    if len(matrix.ids) != matrix.n_samples:
        raise FormatError(
            f"{len(matrix.ids)} ids for {matrix.n_samples} rows"
        )
    id_blob = "\n".join(matrix.ids).encode("utf-8")
    payload = np.ascontiguousarray(matrix.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, matrix.n_samples, matrix.dim, len(id_blob)))
        fh.write(id_blob)
        fh.write(payload)


def pair_check(img: FeatureMatrix, txt: FeatureMatrix) -> int:
    """Validate that two matrices describe the same samples in the same order."""
    if img.n_samples != txt.n_samples:
        raise SampleCountMismatch(
            f"image has {img.n_samples} samples, text has {txt.n_samples}"
        )
    for pos, (a, b) in enumerate(zip(img.ids, txt.ids)):
        if a != b:
            raise IdMismatch(f"ids differ at position {pos}: {a!r} vs {b!r}")
    return img.n_samples


def row_normalize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Scale every nonzero row to unit Euclidean norm; zero rows stay zero.

    Rows whose norm is already within 1e-12 of 1 are left untouched, which
    makes the operation exactly idempotent.
    """
    values = np.array(matrix.values, dtype=np.float64, copy=True)
    norms = np.linalg.norm(values, axis=1)
    scale_mask = (norms > 0.0) & (np.abs(norms - 1.0) > 1e-12)
    values[scale_mask] /= norms[scale_mask, None]
    return FeatureMatrix(ids=list(matrix.ids), values=values)
