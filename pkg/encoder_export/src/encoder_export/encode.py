"""Pooled transformer embeddings for every manifest record.

Documents longer than the token budget are encoded from their truncated
prefix; they are never dropped, so the output stays row-aligned with the
manifest.  Inference runs in eval mode under no_grad, which makes the
output file deterministic for a fixed encoder and config.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, EncoderUnavailable
from .manifest import Manifest, read_manifest
from .wemb import write_wemb

MAX_TOKEN_CEILING = 512  # positional budget of the supported encoders
POOLINGS = ("first_token", "mean")


@dataclass(frozen=True)
class EncoderConfig:
    model_path: str
    max_tokens: int = MAX_TOKEN_CEILING
    pooling: str = "first_token"
    batch_size: int = 8
    device: str = "cpu"

    def __post_init__(self):
        if not 1 <= self.max_tokens <= MAX_TOKEN_CEILING:
            raise ConfigError(
                f"max_tokens must be in [1, {MAX_TOKEN_CEILING}], got {self.max_tokens}"
            )
        if self.pooling not in POOLINGS:
            raise ConfigError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


def load_encoder(config: EncoderConfig):
    """Tokenizer and model from a local checkpoint directory."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    path = Path(config.model_path)
    if not path.exists():
        raise EncoderUnavailable(
            f"encoder not found at {path}; pass a local checkpoint directory "
            "(config.json, weights, and tokenizer files)"
        )
    try:
        tokenizer = AutoTokenizer.from_pretrained(str(path))
        model = AutoModel.from_pretrained(str(path))
    except Exception as exc:
        raise EncoderUnavailable(f"could not load encoder from {path}: {exc}") from exc
    model.to(torch.device(config.device))
    model.eval()
    return tokenizer, model


def _pool(hidden, attention_mask, pooling: str):
    if pooling == "first_token":
        return hidden[:, 0, :]
    mask = attention_mask.unsqueeze(-1).to(hidden.dtype)
    return (hidden * mask).sum(dim=1) / mask.sum(dim=1)


def encode_corpus(manifest_path, config: EncoderConfig, out_path) -> tuple[int, int]:
    """Embed every manifest record, in manifest order, into a WEMB file.

    Returns (n_docs, dim).
    """
    import torch

    manifest: Manifest = read_manifest(manifest_path)
    tokenizer, model = load_encoder(config)
    device = torch.device(config.device)

    rows: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(manifest), config.batch_size):
            chunk = manifest.texts[start : start + config.batch_size]
            enc = tokenizer(
                chunk,
                truncation=True,
                max_length=config.max_tokens,
                padding=True,
                return_tensors="pt",
            ).to(device)
            hidden = model(**enc).last_hidden_state
            pooled = _pool(hidden, enc["attention_mask"], config.pooling)
            rows.append(pooled.cpu().numpy().astype(np.float32))

    values = np.concatenate(rows, axis=0)
    write_wemb(manifest.doc_ids, values, out_path)
    return values.shape[0], values.shape[1]
