"""Binary model checkpoints.

Layout: magic "WWCK0001", u32 header length, canonical JSON header (model
spec dict plus the seeds recorded at training time), u64 parameter count,
the flat float64 little-endian parameter array, and a trailing sha256 hex
digest (64 ASCII bytes) over everything before it.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from ..errors import ParseError
from .params import ParamStore, param_layout
from .spec import ModelSpec

MAGIC = b"WWCK0001"


def save_checkpoint(path, spec: ModelSpec, params: ParamStore, seeds: dict | None = None) -> None:
    header = json.dumps(
        {"spec": spec.to_dict(), "seeds": seeds or {}},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    body = (
        MAGIC
        + struct.pack("<I", len(header))
        + header
        + struct.pack("<Q", params.size)
        + np.ascontiguousarray(params.flat, dtype="<f8").tobytes()
    )
    digest = hashlib.sha256(body).hexdigest().encode("ascii")
    with open(path, "wb") as fh:
        fh.write(body + digest)


def load_checkpoint(path) -> tuple[ModelSpec, ParamStore, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 + 8 + 64 or not blob.startswith(MAGIC):
        raise ParseError(f"{path}: not a checkpoint file")
    body, digest = blob[:-64], blob[-64:]
    if hashlib.sha256(body).hexdigest().encode("ascii") != digest:
        raise ParseError(f"{path}: checkpoint digest mismatch (corrupt file)")
    offset = len(MAGIC)
    (header_len,) = struct.unpack_from("<I", body, offset)
    offset += 4
    try:
        header = json.loads(body[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: bad checkpoint header: {exc}") from exc
    offset += header_len
    (count,) = struct.unpack_from("<Q", body, offset)
    offset += 8
    flat = np.frombuffer(body, dtype="<f8", count=count, offset=offset)
    spec = ModelSpec.from_dict(header["spec"])
    params = ParamStore(param_layout(spec))
    if params.size != count:
        raise ParseError(
            f"{path}: spec implies {params.size} parameters, file stores {count}"
        )
    params.flat[...] = flat
    return spec, params, header.get("seeds", {})
