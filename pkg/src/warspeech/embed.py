"""Fixed-length document vectors.

Two routes produce the n x d matrix every model consumes: a deterministic
signed-hashing fallback encoder that needs no pretrained weights, and an
importer for externally computed vectors in the WEMB interchange format.
Row order always equals corpus manifest order.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError, ConfigError, DataError, ParseError

WEMB_MAGIC = b"WEMB0001"
DEFAULT_DIM = 768


@dataclass
class EmbeddingMatrix:
    """Dense document vectors aligned to the corpus manifest."""

    doc_ids: list[str]
    values: np.ndarray  # (n_docs, dim) float32

    @property
    def n_docs(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def _hasher(seed: int):
    key = (seed & ((1 << 64) - 1)).to_bytes(8, "little")
    cache: dict[str, tuple[int, int]] = {}

    def bucket_sign(token: str, dim: int) -> tuple[int, int]:
        hit = cache.get(token)
        if hit is None:
            h = int.from_bytes(
                hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=key).digest(),
                "little",
            )
            hit = (h % dim, 1 if (h >> 63) & 1 else -1)
            cache[token] = hit
        return hit

    return bucket_sign


def hashed_features(text: str, dim: int, seed: int) -> np.ndarray:
    """Signed hash counts of word unigrams and bigrams, un-normalized."""
    row = np.zeros(dim, dtype=np.float64)
    bucket_sign = _hasher(seed)
    tokens = text.split()
    for tok in tokens:
        b, s = bucket_sign(tok, dim)
        row[b] += s
    for a, b_tok in zip(tokens, tokens[1:]):
        b, s = bucket_sign(a + " " + b_tok, dim)
        row[b] += s
    return row


def embed_hashed_ngrams(
    cleaned_texts: list[str],
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    doc_ids: list[str] | None = None,
) -> EmbeddingMatrix:
    """Hash word unigrams+bigrams into ``dim`` signed buckets, L2-normalized.

    Bit-identical across runs for fixed (texts, dim, seed).  Empty text
    yields an all-zero row rather than NaN.
    """
    if dim < 2:
        raise ConfigError(f"embedding dim must be >= 2, got {dim}")
    if doc_ids is None:
        doc_ids = [str(i) for i in range(len(cleaned_texts))]
    if len(doc_ids) != len(cleaned_texts):
        raise AlignmentError(
            f"doc_ids ({len(doc_ids)}) and texts ({len(cleaned_texts)}) differ in length"
        )
    out = np.zeros((len(cleaned_texts), dim), dtype=np.float64)
    for i, text in enumerate(cleaned_texts):
        row = hashed_features(text, dim, seed)
        norm = np.sqrt(np.sum(row * row))
        if norm > 0.0:
            row /= norm
        out[i] = row
    return EmbeddingMatrix(doc_ids=list(doc_ids), values=out.astype(np.float32))


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write the binary WEMB layout: magic, counts, ids, float32 rows."""
    values = np.ascontiguousarray(matrix.values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(WEMB_MAGIC)
        fh.write(struct.pack("<II", matrix.n_docs, matrix.dim))
        for doc_id in matrix.doc_ids:
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise DataError(f"doc_id too long to serialize: {doc_id[:32]}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(values.tobytes())


def write_embeddings_text(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Plain-text debugging variant: doc_id, then comma-separated values."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc_id, row in zip(matrix.doc_ids, matrix.values):
            fh.write(doc_id + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _read_wemb_binary(path: Path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(len(WEMB_MAGIC))
        if magic != WEMB_MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise ParseError(f"{path}: truncated header")
        n_docs, dim = struct.unpack("<II", header)
        doc_ids = []
        for i in range(n_docs):
            ln_raw = fh.read(2)
            if len(ln_raw) != 2:
                raise ParseError(f"{path}: truncated doc_id table at entry {i}")
            (ln,) = struct.unpack("<H", ln_raw)
            raw = fh.read(ln)
            if len(raw) != ln:
                raise ParseError(f"{path}: truncated doc_id at entry {i}")
            doc_ids.append(raw.decode("utf-8"))
        payload = fh.read(n_docs * dim * 4)
        if len(payload) != n_docs * dim * 4:
            raise ParseError(f"{path}: truncated value block")
        values = np.frombuffer(payload, dtype="<f4").reshape(n_docs, dim).copy()
    return EmbeddingMatrix(doc_ids=doc_ids, values=values)


def _read_wemb_text(path: Path) -> EmbeddingMatrix:
    doc_ids: list[str] = []
    rows: list[np.ndarray] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise ParseError(f"{path} line {i}: expected doc_id plus values")
            doc_ids.append(parts[0])
            try:
                rows.append(np.array([float(p) for p in parts[1:]], dtype=np.float32))
            except ValueError as exc:
                raise ParseError(f"{path} line {i}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no rows")
    dim = rows[0].size
    for i, row in enumerate(rows):
        if row.size != dim:
            raise ParseError(f"{path} line {i}: dim {row.size} != {dim}")
    return EmbeddingMatrix(doc_ids=doc_ids, values=np.vstack(rows))


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read a WEMB file, sniffing binary vs the text debugging variant."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"embeddings file not found: {path}")
    with open(path, "rb") as fh:
        head = fh.read(len(WEMB_MAGIC))
    if head == WEMB_MAGIC:
        return _read_wemb_binary(path)
    return _read_wemb_text(path)


def import_embeddings(path: str | Path, manifest) -> EmbeddingMatrix:
    """Load vectors and enforce exact alignment with the manifest.

    ``manifest`` is anything with a ``doc_ids`` attribute (corpus manifest
    or labeled corpus) or a plain sequence of ids.
    """
    expected = list(getattr(manifest, "doc_ids", manifest))
    matrix = read_embeddings(path)
    if matrix.n_docs != len(expected):
        raise AlignmentError(
            f"embeddings have {matrix.n_docs} rows, manifest has {len(expected)}"
        )
    for i, (got, want) in enumerate(zip(matrix.doc_ids, expected)):
        if got != want:
            raise AlignmentError(f"row {i}: doc_id {got!r} != manifest {want!r}")
    bad = ~np.isfinite(matrix.values)
    if bad.any():
        row = int(np.argwhere(bad.any(axis=1))[0][0])
        raise DataError(f"non-finite embedding value at row {row} ({matrix.doc_ids[row]!r})")
    return matrix
