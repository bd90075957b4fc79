"""Synthetic planted-signal corpora for benchmarks, demos, and tests.

Documents are filler-token streams; positive documents carry repeated
signal tokens at a high rate, negative documents rarely and faintly.  The
signal tokens are searched so their hash buckets land inside chosen
timestep chunks of the embedding, which makes "where should attention
look" a known quantity instead of a guess.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed import _hasher
from .errors import ConfigError


@dataclass
class PlantedCorpus:
    doc_ids: list[str]
    texts: list[str]
    labels: list[int]
    signal_tokens: list[str]
    signal_chunks: tuple[int, ...]
    dim: int
    timesteps: int
    embed_seed: int


def _spell(n: int) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    out = []
    while True:
        out.append(letters[n % 26])
        n //= 26
        if n == 0:
            break
    return "".join(reversed(out))


def select_signal_tokens(
    dim: int, timesteps: int, embed_seed: int, chunks: tuple[int, ...], count: int
) -> list[str]:
    """Find ``count`` tokens whose hash bucket falls inside the given chunks.

    Deterministic: candidates are enumerated in a fixed order, so the same
    (dim, seed, chunks) always selects the same tokens.
    """
    if dim % timesteps:
        raise ConfigError(f"dim {dim} not divisible by timesteps {timesteps}")
    step = dim // timesteps
    wanted = set()
    for c in chunks:
        if not (0 <= c < timesteps):
            raise ConfigError(f"chunk {c} out of range for {timesteps} timesteps")
        wanted.update(range(c * step, (c + 1) * step))
    bucket_sign = _hasher(embed_seed)
    quota = {c: count // len(chunks) for c in chunks}
    for c in chunks[: count % len(chunks)]:
        quota[c] += 1
    per_chunk: dict[int, list[str]] = {c: [] for c in chunks}
    n = 0
    while any(len(per_chunk[c]) < quota[c] for c in chunks):
        token = "sig" + _spell(n)
        n += 1
        if n > 2_000_000:
            raise ConfigError("signal token search exhausted; widen the target chunks")
        bucket, _ = bucket_sign(token, dim)
        chunk = bucket // step
        if bucket in wanted and len(per_chunk[chunk]) < quota[chunk]:
            per_chunk[chunk].append(token)
    # interleave across chunks so every chunk carries signal mass
    found: list[str] = []
    for i in range(max(quota.values())):
        for c in chunks:
            if i < len(per_chunk[c]):
                found.append(per_chunk[c][i])
    return found


def planted_corpus(
    n_docs: int = 400,
    dim: int = 256,
    timesteps: int = 16,
    embed_seed: int = 0,
    seed: int = 0,
    positive_rate: float = 0.9,
    negative_rate: float = 0.1,
    signal_chunks: tuple[int, ...] = (0, 1),
    n_signal_tokens: int = 8,
    positive_share: float = 0.5,
    vocab_size: int = 400,
    tokens_per_doc: int = 4,
    repeat_range: tuple[int, int] = (5, 12),
    leak_repeat_range: tuple[int, int] = (1, 4),
    length_range: tuple[int, int] = (25, 56),
    distractor_chunks: tuple[int, ...] = (10, 11, 12, 13, 14, 15),
    distractor_tokens_per_doc: int = 1,
) -> PlantedCorpus:
    """Build a labeled corpus with a lexical signal planted in known chunks.

    With probability ``positive_rate`` a positive document repeats a couple
    of signal tokens several times, concentrating weight on their hash
    buckets; with probability ``negative_rate`` a negative document leaks a
    single signal token a few times.  Repeat counts and filler lengths
    vary, so model scores are graded rather than binary.
    """
    if not (0 < positive_share < 1):
        raise ConfigError(f"positive_share must be in (0, 1), got {positive_share}")
    signal = select_signal_tokens(dim, timesteps, embed_seed, signal_chunks, n_signal_tokens)
    distractors: list[str] = []
    if distractor_chunks:
        overlap = set(distractor_chunks) & set(signal_chunks)
        if overlap:
            raise ConfigError(f"distractor chunks {sorted(overlap)} overlap the signal chunks")
        distractors = select_signal_tokens(
            dim, timesteps, embed_seed, distractor_chunks, n_signal_tokens
        )
    rng = np.random.default_rng(seed)
    # filler vocabulary avoids the signal chunks so those dims stay clean
    step = dim // timesteps
    blocked = {d for c in signal_chunks for d in range(c * step, (c + 1) * step)}
    bucket_sign = _hasher(embed_seed)
    vocab: list[str] = []
    i = 0
    while len(vocab) < vocab_size:
        token = "f" + _spell(i)
        i += 1
        if bucket_sign(token, dim)[0] not in blocked:
            vocab.append(token)
    n_pos = int(round(n_docs * positive_share))
    labels = [1] * n_pos + [0] * (n_docs - n_pos)
    rng.shuffle(labels)
    doc_ids = [f"doc{i:04d}" for i in range(n_docs)]
    texts: list[str] = []
    for label in labels:
        length = int(rng.integers(length_range[0], length_range[1]))
        words = [vocab[int(j)] for j in rng.integers(0, vocab_size, size=length)]
        if label == 1 and rng.random() < positive_rate:
            # one token per chunk, round-robin, so every signal chunk lights up
            chosen = []
            for j in range(min(tokens_per_doc, len(signal))):
                group = [i for i in range(len(signal)) if i % len(signal_chunks) == j % len(signal_chunks)]
                chosen.append(int(group[int(rng.integers(0, len(group)))]))
            repeats = [int(rng.integers(repeat_range[0], repeat_range[1])) for _ in chosen]
        elif label == 0 and rng.random() < negative_rate:
            chosen = [int(rng.integers(0, len(signal)))]
            repeats = [int(rng.integers(leak_repeat_range[0], leak_repeat_range[1]))]
        else:
            chosen, repeats = [], []
        for tok_idx, count in zip(chosen, repeats):
            for _ in range(count):
                pos = int(rng.integers(0, len(words) + 1))
                words.insert(pos, signal[int(tok_idx)])
        if distractors:
            # label-independent noise phrases shared by both classes
            for _ in range(distractor_tokens_per_doc):
                tok = distractors[int(rng.integers(0, len(distractors)))]
                for _ in range(int(rng.integers(repeat_range[0], repeat_range[1]))):
                    pos = int(rng.integers(0, len(words) + 1))
                    words.insert(pos, tok)
        texts.append(" ".join(words))
    return PlantedCorpus(
        doc_ids=doc_ids,
        texts=texts,
        labels=labels,
        signal_tokens=signal,
        signal_chunks=tuple(signal_chunks),
        dim=dim,
        timesteps=timesteps,
        embed_seed=embed_seed,
    )
