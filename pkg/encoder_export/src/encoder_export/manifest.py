"""Corpus manifest reader.

The manifest is the pipeline's prepare-stage output: one JSON object per
line with doc_id, date, label, provenance, and cleaned text.  Only the
fields this tool consumes are surfaced.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError

REQUIRED_KEYS = ("doc_id", "date", "label", "text", "provenance")


@dataclass
class Manifest:
    doc_ids: list[str]
    labels: list[int]
    texts: list[str]

    def __len__(self) -> int:
        return len(self.doc_ids)


def read_manifest(path) -> Manifest:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"manifest not found: {path}")
    doc_ids, labels, texts = [], [], []
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh):
            raw = raw.strip()
            if not raw:
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"manifest line {i}: {exc}") from None
            for key in REQUIRED_KEYS:
                if key not in row:
                    raise ParseError(f"manifest line {i}: missing key {key!r}")
            doc_ids.append(row["doc_id"])
            labels.append(int(row["label"]))
            texts.append(row["text"])
    if not doc_ids:
        raise ParseError(f"manifest {path} is empty")
    return Manifest(doc_ids=doc_ids, labels=labels, texts=texts)
