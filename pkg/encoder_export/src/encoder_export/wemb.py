"""WEMB interchange format.

The layout is the contract with the consuming pipeline: 8-byte magic
"WEMB0001", little-endian u32 row count and dimension, a doc_id table of
(u16 length, utf-8 bytes) entries in row order, then the float32 values
row-major.  Row order is the corpus manifest order.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError

WEMB_MAGIC = b"WEMB0001"


def write_wemb(doc_ids: list[str], values: np.ndarray, path) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2:
        raise DataError(f"values must be 2-D, got shape {values.shape}")
    if len(doc_ids) != values.shape[0]:
        raise DataError(f"{len(doc_ids)} doc_ids for {values.shape[0]} rows")
    with open(path, "wb") as fh:
        fh.write(WEMB_MAGIC)
        fh.write(struct.pack("<II", values.shape[0], values.shape[1]))
        for doc_id in doc_ids:
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise DataError(f"doc_id too long to serialize: {doc_id[:32]}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(values.tobytes())


def read_wemb(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(len(WEMB_MAGIC)) != WEMB_MAGIC:
            raise ParseError(f"{path}: not a WEMB file")
        header = fh.read(8)
        if len(header) != 8:
            raise ParseError(f"{path}: truncated header")
        n, dim = struct.unpack("<II", header)
        doc_ids = []
        for i in range(n):
            ln_raw = fh.read(2)
            if len(ln_raw) != 2:
                raise ParseError(f"{path}: truncated doc_id table at entry {i}")
            (ln,) = struct.unpack("<H", ln_raw)
            raw = fh.read(ln)
            if len(raw) != ln:
                raise ParseError(f"{path}: truncated doc_id at entry {i}")
            doc_ids.append(raw.decode("utf-8"))
        payload = fh.read(n * dim * 4)
        if len(payload) != n * dim * 4:
            raise ParseError(f"{path}: truncated value block")
    return doc_ids, np.frombuffer(payload, dtype="<f4").reshape(n, dim).copy()
