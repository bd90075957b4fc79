"""WEMB writing, manifest alignment, pooling, and truncation."""

import numpy as np
import pytest

from encoder_export import (
    ConfigError,
    DataError,
    EncoderConfig,
    EncoderUnavailable,
    ParseError,
    encode_corpus,
    read_manifest,
    read_wemb,
    write_wemb,
)

from conftest import _manifest_line, write_manifest_lines


class TestWembFormat:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(5, 7)).astype(np.float32)
        ids = [f"d{i}" for i in range(5)]
        path = tmp_path / "v.wemb"
        write_wemb(ids, values, path)
        got_ids, got = read_wemb(path)
        assert got_ids == ids
        np.testing.assert_array_equal(got, values)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.wemb"
        path.write_bytes(b"NOTWEMB!" + b"\x00" * 16)
        with pytest.raises(ParseError, match="not a WEMB file"):
            read_wemb(path)

    def test_truncated_values(self, tmp_path):
        path = tmp_path / "v.wemb"
        write_wemb(["a", "b"], np.zeros((2, 4), dtype=np.float32), path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(ParseError, match="truncated value block"):
            read_wemb(path)

    def test_id_count_mismatch(self, tmp_path):
        with pytest.raises(DataError, match="doc_ids"):
            write_wemb(["a"], np.zeros((2, 3), dtype=np.float32), tmp_path / "v.wemb")

    def test_values_must_be_2d(self, tmp_path):
        with pytest.raises(DataError, match="2-D"):
            write_wemb(["a"], np.zeros(3, dtype=np.float32), tmp_path / "v.wemb")


class TestManifestReader:
    def test_reads_fields_in_order(self, tmp_path):
        path = write_manifest_lines(tmp_path / "m.jsonl", [
            _manifest_line("b", 1, "war army"),
            _manifest_line("a", 0, "peace treaty"),
        ])
        m = read_manifest(path)
        assert m.doc_ids == ["b", "a"]
        assert m.labels == [1, 0]
        assert m.texts[1] == "peace treaty"

    def test_missing_key(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"doc_id":"a","date":"1900-01-01","label":0,"text":"x"}\n')
        with pytest.raises(ParseError, match="provenance"):
            read_manifest(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError, match="not found"):
            read_manifest(tmp_path / "nope.jsonl")

    def test_empty(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("\n\n")
        with pytest.raises(ParseError, match="empty"):
            read_manifest(path)


class TestEncoderConfig:
    @pytest.mark.parametrize("kwargs,msg", [
        (dict(max_tokens=0), "max_tokens"),
        (dict(max_tokens=513), "max_tokens"),
        (dict(pooling="cls"), "pooling"),
        (dict(batch_size=0), "batch_size"),
    ])
    def test_guards(self, kwargs, msg):
        with pytest.raises(ConfigError, match=msg):
            EncoderConfig(model_path="x", **kwargs)


class TestEncodeCorpus:
    def test_shape_and_order(self, tmp_path, encoder_dir, long_doc_manifest):
        out = tmp_path / "v.wemb"
        n, dim = encode_corpus(long_doc_manifest, EncoderConfig(model_path=str(encoder_dir)), out)
        assert (n, dim) == (3, 768)
        ids, values = read_wemb(out)
        assert ids == ["long", "prefix", "short"]  # manifest order
        assert np.isfinite(values).all()

    def test_identical_transcripts_identical_rows(self, tmp_path, encoder_dir):
        path = write_manifest_lines(tmp_path / "m.jsonl", [
            _manifest_line("x", 0, "peace treaty congress"),
            _manifest_line("y", 1, "peace treaty congress"),
        ])
        encode_corpus(path, EncoderConfig(model_path=str(encoder_dir)), tmp_path / "v.wemb")
        _, values = read_wemb(tmp_path / "v.wemb")
        np.testing.assert_array_equal(values[0], values[1])

    def test_long_doc_truncated_not_dropped(self, tmp_path, encoder_dir, long_doc_manifest):
        cfg = EncoderConfig(model_path=str(encoder_dir), batch_size=1)
        encode_corpus(long_doc_manifest, cfg, tmp_path / "v.wemb")
        ids, values = read_wemb(tmp_path / "v.wemb")
        assert len(ids) == 3
        np.testing.assert_array_equal(values[0], values[1])  # long == its 510-token prefix
        assert not np.array_equal(values[0], values[2])

    def test_mean_pooling_same_shape_different_values(self, tmp_path, encoder_dir, long_doc_manifest):
        first = EncoderConfig(model_path=str(encoder_dir), batch_size=1)
        mean = EncoderConfig(model_path=str(encoder_dir), batch_size=1, pooling="mean")
        encode_corpus(long_doc_manifest, first, tmp_path / "a.wemb")
        encode_corpus(long_doc_manifest, mean, tmp_path / "b.wemb")
        ids_a, va = read_wemb(tmp_path / "a.wemb")
        ids_b, vb = read_wemb(tmp_path / "b.wemb")
        assert ids_a == ids_b and va.shape == vb.shape
        assert not np.allclose(va, vb)

    def test_batch_size_invariance(self, tmp_path, encoder_dir, corpus_manifest):
        a = EncoderConfig(model_path=str(encoder_dir), batch_size=3)
        b = EncoderConfig(model_path=str(encoder_dir), batch_size=7)
        encode_corpus(corpus_manifest, a, tmp_path / "a.wemb")
        encode_corpus(corpus_manifest, b, tmp_path / "b.wemb")
        _, va = read_wemb(tmp_path / "a.wemb")
        _, vb = read_wemb(tmp_path / "b.wemb")
        np.testing.assert_allclose(va, vb, atol=1e-5)

    def test_rerun_byte_identical(self, tmp_path, encoder_dir, corpus_manifest):
        cfg = EncoderConfig(model_path=str(encoder_dir))
        encode_corpus(corpus_manifest, cfg, tmp_path / "a.wemb")
        encode_corpus(corpus_manifest, cfg, tmp_path / "b.wemb")
        assert (tmp_path / "a.wemb").read_bytes() == (tmp_path / "b.wemb").read_bytes()

    def test_empty_text_encodes(self, tmp_path, encoder_dir):
        path = write_manifest_lines(tmp_path / "m.jsonl", [_manifest_line("e", 0, "")])
        n, dim = encode_corpus(path, EncoderConfig(model_path=str(encoder_dir)), tmp_path / "v.wemb")
        assert (n, dim) == (1, 768)
        _, values = read_wemb(tmp_path / "v.wemb")
        assert np.isfinite(values).all()

    def test_encoder_unavailable(self, tmp_path, long_doc_manifest):
        missing = tmp_path / "no_such_encoder"
        with pytest.raises(EncoderUnavailable, match="no_such_encoder"):
            encode_corpus(long_doc_manifest, EncoderConfig(model_path=str(missing)), tmp_path / "v.wemb")
