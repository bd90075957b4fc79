"""Speech ingestion, war labeling, date filtering, and transcript cleaning.

The corpus is the root of the pipeline: delimited speech and war-date files
come in, a labeled and cleaned corpus manifest goes out.  Record order in
the manifest is the canonical alignment key for every downstream matrix.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date
from functools import lru_cache
from pathlib import Path

from .errors import ParseError, ValidationError

SPEECH_COLUMNS = ("doc_id", "date", "president", "party", "title", "transcript")
WAR_COLUMNS = ("name", "start_date")

DEFAULT_HORIZON_DAYS = 365
# "after 1800" keeps everything from the year the earliest considered war began
POST_1800_CUTOFF = date(1801, 1, 1)


@dataclass(frozen=True)
class SpeechRecord:
    """One presidential speech, as ingested."""

    doc_id: str
    date: date
    president: str
    party: str | None
    title: str
    transcript: str


@dataclass(frozen=True)
class WarEvent:
    """A major war and the day the US entered it."""

    name: str
    start_date: date


@dataclass
class LabeledCorpus:
    """Speeches plus the parallel binary war label.

    ``records[i]`` and ``labels[i]`` stay aligned; that order is the
    canonical key for embeddings, scores, and explanations downstream.
    """

    records: list[SpeechRecord]
    labels: list[int]
    horizon_days: int = DEFAULT_HORIZON_DAYS
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.records) != len(self.labels):
            raise ValidationError(
                f"records/labels length mismatch: {len(self.records)} != {len(self.labels)}"
            )

    @property
    def doc_ids(self) -> list[str]:
        return [r.doc_id for r in self.records]


@dataclass(frozen=True)
class ClassBalance:
    n_total: int
    n_negative: int
    n_positive: int
    positive_share: float


@dataclass
class CorpusManifest:
    """The on-disk corpus view consumed by every later stage.

    One JSON object per line carrying doc_id, date, label, cleaned text,
    and the provenance digest; line order is canonical.
    """

    doc_ids: list[str]
    dates: list[date]
    labels: list[int]
    texts: list[str]
    digest: str

    def __len__(self) -> int:
        return len(self.doc_ids)


def _parse_date(raw: str, context: str) -> date:
    try:
        return date.fromisoformat(raw.strip())
    except ValueError as exc:
        raise ParseError(f"{context}: invalid date {raw!r} ({exc})") from None


def _read_rows(path: str | Path, required: tuple[str, ...]) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"{path}: missing columns {missing} in header {header}")
        return list(reader)


def load_corpus(
    speeches_path: str | Path, wars_path: str | Path
) -> tuple[list[SpeechRecord], list[WarEvent]]:
    """Load speeches and war start dates from delimited text files.

    Malformed dates fail immediately naming the offending row; empty
    transcripts are collected and reported together so a single pass
    surfaces every document that needs a manual fix.
    """
    records: list[SpeechRecord] = []
    seen: set[str] = set()
    empty: list[str] = []
    for i, row in enumerate(_read_rows(speeches_path, SPEECH_COLUMNS)):
        doc_id = (row["doc_id"] or "").strip()
        if not doc_id:
            raise ValidationError(f"speeches row {i}: blank doc_id")
        if doc_id in seen:
            raise ValidationError(f"speeches row {i}: duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        when = _parse_date(row["date"] or "", f"speeches row {i}")
        transcript = row["transcript"] or ""
        if not transcript.strip():
            empty.append(doc_id)
        party = (row["party"] or "").strip() or None
        records.append(
            SpeechRecord(
                doc_id=doc_id,
                date=when,
                president=(row["president"] or "").strip(),
                party=party,
                title=(row["title"] or "").strip(),
                transcript=transcript,
            )
        )
    if empty:
        raise ValidationError(
            "missing transcript for doc_ids: " + ", ".join(sorted(empty))
        )

    wars: list[WarEvent] = []
    war_names: set[str] = set()
    for i, row in enumerate(_read_rows(wars_path, WAR_COLUMNS)):
        name = (row["name"] or "").strip()
        if not name:
            raise ValidationError(f"wars row {i}: blank name")
        if name in war_names:
            raise ValidationError(f"wars row {i}: duplicate war name {name!r}")
        war_names.add(name)
        wars.append(WarEvent(name=name, start_date=_parse_date(row["start_date"] or "", f"wars row {i}")))
    return records, wars


def label_war(speech_date: date, wars: list[WarEvent], horizon_days: int = DEFAULT_HORIZON_DAYS) -> int:
    """1 iff some war starts within ``horizon_days`` on or after the speech.

    Inclusive on both ends: a speech on the start date itself counts.
    Wars already underway do not make later speeches positive; only starts
    inside the window do.
    """
    if horizon_days < 0:
        raise ValidationError(f"horizon_days must be >= 0, got {horizon_days}")
    for war in wars:
        delta = (war.start_date - speech_date).days
        if 0 <= delta <= horizon_days:
            return 1
    return 0


def filter_after_1800(records: list[SpeechRecord]) -> list[SpeechRecord]:
    """Keep speeches dated 1801-01-01 or later, preserving order."""
    return [r for r in records if r.date >= POST_1800_CUTOFF]


# Number tokens: optional sign, comma-grouped or plain digits, optional
# fraction.  Removed before punctuation so "1,234.56" cannot shed digit
# fragments.  A final sweep drops digits glued to words ("1800s").
_NUMBER_TOKEN = re.compile(
    r"[+-]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)"
)
_LEFTOVER_DIGITS = re.compile(r"\d+")
_WS_RUN = re.compile(r"\s+")
_LETTERS_ONLY = re.compile(r"[^a-zA-Z]+")


@lru_cache(maxsize=4096)
def _char_action(ch: str) -> str:
    """Classify one character for the punctuation pass: keep, drop, or space."""
    cat = unicodedata.category(ch)
    if cat == "Pd":
        return " "  # hyphens/dashes become spaces so words do not fuse
    if cat.startswith("P") or ch in "$%&":
        return ""
    return ch


def _name_key(text: str) -> str:
    return _LETTERS_ONLY.sub("", text).casefold()


def _strip_signature(text: str, president: str) -> str:
    """Drop a trailing all-uppercase run (at most 3 lines) matching the
    president's name; anything else is left untouched."""
    key = _name_key(president)
    if not key:
        return text
    lines = text.splitlines()
    end = len(lines)
    while end > 0 and not lines[end - 1].strip():
        end -= 1
    start = end
    while start > 0 and end - start < 3:
        candidate = lines[start - 1].strip()
        letters = [c for c in candidate if c.isalpha()]
        if not letters or any(c.islower() for c in letters):
            break
        start -= 1
    if start == end:
        return text
    if _name_key(" ".join(lines[start:end])) != key:
        return text
    return "\n".join(lines[:start])


def clean_transcript(text: str, president: str | None = None) -> str:
    """Normalize a transcript for modeling.

    In order: strip a trailing signature block (when the president's name
    is supplied), delete integer and decimal number tokens, lowercase,
    remove punctuation (hyphens become spaces), and collapse whitespace.
    The result contains no digits, no uppercase letters, no punctuation,
    and the whole transform is idempotent.
    """
    if president:
        text = _strip_signature(text, president)
    text = _NUMBER_TOKEN.sub(" ", text)
    text = _LEFTOVER_DIGITS.sub("", text)
    text = text.lower()
    text = "".join(_char_action(ch) for ch in text)
    return _WS_RUN.sub(" ", text).strip()


def corpus_stats(labeled: LabeledCorpus) -> ClassBalance:
    """Exact class counts for a labeled corpus."""
    n = len(labeled.labels)
    if n == 0:
        raise ValidationError("corpus is empty")
    n_pos = sum(1 for y in labeled.labels if y == 1)
    return ClassBalance(
        n_total=n,
        n_negative=n - n_pos,
        n_positive=n_pos,
        positive_share=n_pos / n,
    )


def file_digest(path: str | Path) -> str:
    """sha256 of a file's bytes, hex-encoded."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def prepare_corpus(
    records: list[SpeechRecord],
    wars: list[WarEvent],
    horizon_days: int = DEFAULT_HORIZON_DAYS,
    provenance: dict | None = None,
) -> LabeledCorpus:
    """Filter, clean, and label: the full corpus assembly step.

    Keeps post-1800 speeches, strips signatures/numbers/punctuation from
    each transcript, and attaches the binary war label.
    """
    kept = filter_after_1800(records)
    cleaned = [
        SpeechRecord(
            doc_id=r.doc_id,
            date=r.date,
            president=r.president,
            party=r.party,
            title=r.title,
            transcript=clean_transcript(r.transcript, r.president),
        )
        for r in kept
    ]
    labels = [label_war(r.date, wars, horizon_days) for r in kept]
    prov = dict(provenance or {})
    prov["horizon_days"] = horizon_days
    prov["labeling"] = "war_start_within_horizon"
    return LabeledCorpus(records=cleaned, labels=labels, horizon_days=horizon_days, provenance=prov)


def provenance_digest(provenance: dict) -> str:
    blob = json.dumps(provenance, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_manifest(labeled: LabeledCorpus, path: str | Path) -> str:
    """Write the corpus manifest: one JSON object per line, canonical order.

    Returns the provenance digest stamped on every line.
    """
    digest = provenance_digest(labeled.provenance)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec, label in zip(labeled.records, labeled.labels):
            line = {
                "date": rec.date.isoformat(),
                "doc_id": rec.doc_id,
                "label": label,
                "provenance": digest,
                "text": rec.transcript,
            }
            fh.write(json.dumps(line, sort_keys=True, separators=(",", ":")) + "\n")
    return digest


def read_manifest(path: str | Path) -> CorpusManifest:
    doc_ids: list[str] = []
    dates: list[date] = []
    labels: list[int] = []
    texts: list[str] = []
    digest = ""
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh):
            raw = raw.strip()
            if not raw:
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"manifest line {i}: {exc}") from None
            for key in ("doc_id", "date", "label", "text", "provenance"):
                if key not in row:
                    raise ParseError(f"manifest line {i}: missing key {key!r}")
            doc_ids.append(row["doc_id"])
            dates.append(_parse_date(row["date"], f"manifest line {i}"))
            labels.append(int(row["label"]))
            texts.append(row["text"])
            digest = row["provenance"]
    if not doc_ids:
        raise ParseError(f"manifest {path} is empty")
    return CorpusManifest(doc_ids=doc_ids, dates=dates, labels=labels, texts=texts, digest=digest)
