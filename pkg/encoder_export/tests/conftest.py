"""Shared fixtures: a tiny randomly initialized local encoder and small
corpus manifests.  Everything lives under pytest's tmp tree; no network,
no external checkpoints."""

import json
import pathlib

import numpy as np
import pytest

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "war", "peace", "treaty", "army", "navy", "budget", "tariff",
    "harvest", "congress", "senate", "mobilization", "armament",
    "hostilities", "railroad", "commerce", "nation", "address",
    "year", "people", "country", "union", "law", "trade", "farm", "port",
]
PEACE = ["peace", "treaty", "congress", "budget", "tariff", "harvest", "railroad",
         "commerce", "nation", "address", "year", "people", "country", "union"]
WARLIKE = ["war", "mobilization", "armament", "hostilities", "army", "navy"]


@pytest.fixture(scope="session", autouse=True)
def _quiet_transformers():
    import transformers

    transformers.logging.set_verbosity_error()
    transformers.utils.logging.disable_progress_bar()


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory) -> pathlib.Path:
    """One-layer 768-wide encoder with random weights, saved locally."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    root = tmp_path_factory.mktemp("tinybert")
    (root / "vocab.txt").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    BertTokenizer(vocab_file=str(root / "vocab.txt")).save_pretrained(str(root))
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=768,
        num_hidden_layers=1,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=512,
    )
    BertModel(config).save_pretrained(str(root))
    return root


def _manifest_line(doc_id: str, label: int, text: str, date: str = "1900-01-01") -> str:
    row = {"date": date, "doc_id": doc_id, "label": label,
           "provenance": "0" * 64, "text": text}
    return json.dumps(row, sort_keys=True, separators=(",", ":"))


def write_manifest_lines(path: pathlib.Path, lines: list[str]) -> pathlib.Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def corpus_manifest(tmp_path_factory) -> pathlib.Path:
    """40 docs, every third positive with war vocabulary appended."""
    rng = np.random.default_rng(5)
    lines = []
    for i in range(40):
        words = [PEACE[int(j)] for j in rng.integers(0, len(PEACE), size=24)]
        label = 1 if i % 3 == 0 else 0
        if label:
            words += [WARLIKE[int(j)] for j in rng.integers(0, len(WARLIKE), size=10)]
        lines.append(_manifest_line(f"s{i:03d}", label, " ".join(words)))
    return write_manifest_lines(tmp_path_factory.mktemp("corpus") / "manifest.jsonl", lines)


@pytest.fixture(scope="session")
def long_doc_manifest(tmp_path_factory) -> pathlib.Path:
    """A 600-token document, its 510-token prefix, and a short control.

    The encoder budget is 512 including the two special tokens, so the
    first two must encode identically if truncation works.
    """
    words = ["peace", "treaty", "congress", "budget", "war", "army"]
    long_words = [words[i % len(words)] for i in range(600)]
    lines = [
        _manifest_line("long", 0, " ".join(long_words)),
        _manifest_line("prefix", 0, " ".join(long_words[:510])),
        _manifest_line("short", 0, " ".join(words)),
    ]
    return write_manifest_lines(tmp_path_factory.mktemp("longdoc") / "manifest.jsonl", lines)


@pytest.fixture(scope="session")
def finetuned(tmp_path_factory, corpus_manifest, encoder_dir):
    """One full 10-epoch fine-tune, shared by the assertion tests."""
    from encoder_export import HyperParams, finetune_classifier

    out = tmp_path_factory.mktemp("finetune") / "metrics_bert.json"
    doc = finetune_classifier(corpus_manifest, encoder_dir, HyperParams(seed=0), out_path=out)
    return doc, out
