"""The planted-signal corpus generator."""

import numpy as np
import pytest

from warspeech.embed import _hasher, embed_hashed_ngrams
from warspeech.errors import ConfigError
from warspeech.synth import planted_corpus, select_signal_tokens

DIM, T = 64, 8
STEP = DIM // T


def _chunk_of(token: str, dim=DIM, timesteps=T, embed_seed=0) -> int:
    bucket, _ = _hasher(embed_seed)(token, dim)
    return bucket // (dim // timesteps)


class TestSelectSignalTokens:
    def test_tokens_hash_into_declared_chunks(self):
        tokens = select_signal_tokens(DIM, T, embed_seed=0, chunks=(2, 5), count=6)
        assert len(tokens) == 6
        assert len(set(tokens)) == 6
        assert all(_chunk_of(t) in (2, 5) for t in tokens)

    def test_quota_is_balanced_and_interleaved(self):
        tokens = select_signal_tokens(DIM, T, embed_seed=0, chunks=(0, 1), count=8)
        chunks = [_chunk_of(t) for t in tokens]
        assert chunks == [0, 1, 0, 1, 0, 1, 0, 1]

    def test_odd_count_favors_earlier_chunks(self):
        tokens = select_signal_tokens(DIM, T, embed_seed=0, chunks=(3, 6), count=5)
        chunks = [_chunk_of(t) for t in tokens]
        assert chunks.count(3) == 3 and chunks.count(6) == 2

    def test_deterministic(self):
        a = select_signal_tokens(DIM, T, embed_seed=1, chunks=(0,), count=4)
        b = select_signal_tokens(DIM, T, embed_seed=1, chunks=(0,), count=4)
        assert a == b

    def test_seed_changes_selection(self):
        a = select_signal_tokens(DIM, T, embed_seed=0, chunks=(0,), count=4)
        b = select_signal_tokens(DIM, T, embed_seed=9, chunks=(0,), count=4)
        assert a != b

    def test_guards(self):
        with pytest.raises(ConfigError, match="divisible"):
            select_signal_tokens(65, T, embed_seed=0, chunks=(0,), count=2)
        with pytest.raises(ConfigError, match="out of range"):
            select_signal_tokens(DIM, T, embed_seed=0, chunks=(8,), count=2)


def _small(**kw):
    defaults = dict(
        n_docs=60,
        dim=DIM,
        timesteps=T,
        embed_seed=0,
        seed=0,
        signal_chunks=(0, 1),
        n_signal_tokens=4,
        vocab_size=80,
        distractor_chunks=(5, 6),
    )
    defaults.update(kw)
    return planted_corpus(**defaults)


class TestPlantedCorpus:
    def test_shapes_and_label_balance(self):
        c = _small()
        assert len(c.texts) == len(c.labels) == len(c.doc_ids) == 60
        assert sum(c.labels) == 30
        assert c.doc_ids[0] == "doc0000" and c.doc_ids[-1] == "doc0059"
        assert c.signal_chunks == (0, 1)

    def test_deterministic(self):
        assert _small().texts == _small().texts
        assert _small(seed=1).texts != _small().texts

    def test_filler_avoids_signal_chunks(self):
        c = _small()
        for text in c.texts:
            for tok in text.split():
                if tok.startswith("f"):
                    assert _chunk_of(tok) not in c.signal_chunks

    def test_positive_docs_cover_every_signal_chunk(self):
        c = _small(n_docs=100)
        sig = set(c.signal_tokens)
        for text, label in zip(c.texts, c.labels):
            present = {t for t in text.split() if t in sig}
            if label == 1 and present:
                assert {_chunk_of(t) for t in present} == set(c.signal_chunks)

    def test_signal_rates(self):
        c = _small(n_docs=400)
        sig = set(c.signal_tokens)
        hit = [any(t in sig for t in text.split()) for text in c.texts]
        pos = [h for h, y in zip(hit, c.labels) if y == 1]
        neg = [h for h, y in zip(hit, c.labels) if y == 0]
        assert 0.8 < sum(pos) / len(pos) <= 1.0
        assert 0.0 <= sum(neg) / len(neg) < 0.2

    def test_every_doc_carries_a_distractor(self):
        c = _small()
        sig = set(c.signal_tokens)
        for text in c.texts:
            planted = [t for t in text.split() if t.startswith("sig") and t not in sig]
            assert planted, "distractor missing"
            assert all(_chunk_of(t) in (5, 6) for t in planted)

    def test_distractors_may_be_disabled(self):
        c = _small(distractor_chunks=())
        for text in c.texts:
            assert all(not t.startswith("sig") or t in set(c.signal_tokens) for t in text.split())

    def test_overlapping_distractor_chunks_rejected(self):
        with pytest.raises(ConfigError, match="overlap"):
            _small(distractor_chunks=(1, 5))

    def test_bad_positive_share_rejected(self):
        with pytest.raises(ConfigError, match="positive_share"):
            _small(positive_share=1.0)

    def test_signal_shows_up_in_the_embedding(self):
        c = _small(n_docs=120)
        X = embed_hashed_ngrams(c.texts, dim=DIM, seed=0).values.astype(np.float64)
        y = np.asarray(c.labels)
        cols = [d for ch in c.signal_chunks for d in range(ch * STEP, (ch + 1) * STEP)]
        mass = np.abs(X[:, cols]).sum(axis=1)
        assert mass[y == 1].mean() > 2.0 * mass[y == 0].mean()
