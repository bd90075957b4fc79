"""Fine-tuning contract: pinned optimizer, schema, graceful abort."""

import json

import numpy as np
import pytest

from encoder_export import ConfigError, DataError, EncoderUnavailable, HyperParams, build_optimizer, finetune_classifier

from conftest import _manifest_line, write_manifest_lines

EPOCH_KEYS = {"epoch", "train_loss", "train_acc", "val_loss", "val_acc"}


class TestHyperParams:
    @pytest.mark.parametrize("kwargs,msg", [
        (dict(epochs=0), "epochs"),
        (dict(batch_size=0), "batch_size"),
        (dict(learning_rate=0.0), "learning_rate"),
        (dict(fractions=(0.5, 0.5)), "fractions"),
    ])
    def test_guards(self, kwargs, msg):
        with pytest.raises(ConfigError, match=msg):
            HyperParams(**kwargs)

    def test_paper_defaults(self):
        hp = HyperParams()
        assert hp.learning_rate == 3e-7
        assert (hp.beta1, hp.beta2) == (0.9, 0.999)
        assert hp.epsilon == 1e-8
        assert hp.clipnorm == 2.0
        assert (hp.epochs, hp.batch_size) == (10, 32)


class TestOptimizer:
    def test_build_optimizer_settings(self):
        import torch

        model = torch.nn.Linear(4, 2)
        group = build_optimizer(model, HyperParams()).param_groups[0]
        assert group["lr"] == 3e-7
        assert group["betas"] == (0.9, 0.999)
        assert group["eps"] == 1e-8

    def test_clipnorm_applied_every_step(self, monkeypatch, corpus_manifest, encoder_dir, tmp_path):
        import torch.nn.utils as utils

        calls = []
        real = utils.clip_grad_norm_

        def spy(parameters, max_norm, *args, **kwargs):
            calls.append(float(max_norm))
            return real(parameters, max_norm, *args, **kwargs)

        monkeypatch.setattr(utils, "clip_grad_norm_", spy)
        finetune_classifier(corpus_manifest, encoder_dir, HyperParams(epochs=2, seed=0))
        # 32 train docs, batch 32: one optimizer step per epoch
        assert calls == [2.0, 2.0]


class TestMetricsDocument:
    def test_epoch_entries(self, finetuned):
        doc, _ = finetuned
        assert len(doc["epochs"]) == 10
        assert [e["epoch"] for e in doc["epochs"]] == list(range(1, 11))
        for entry in doc["epochs"]:
            assert set(entry) == EPOCH_KEYS

    def test_schema_fields(self, finetuned):
        doc, _ = finetuned
        assert doc["model"] == "bert-finetuned"
        assert doc["seed"] == 0
        assert doc["partial"] is False
        test = doc["test"]
        assert set(test) == {"accuracy", "f1", "auc", "confusion"}
        assert all(0.0 <= test[k] <= 1.0 for k in ("accuracy", "f1", "auc"))
        assert len(test["confusion"]) == 4
        assert sum(test["confusion"]) == 4  # 10% of 40 docs held out

    def test_file_matches_return_value(self, finetuned):
        doc, path = finetuned
        assert json.loads(path.read_text()) == doc

    def test_deterministic(self, finetuned, corpus_manifest, encoder_dir):
        doc, _ = finetuned
        again = finetune_classifier(corpus_manifest, encoder_dir, HyperParams(seed=0))
        assert again["epochs"] == doc["epochs"]
        assert again["test"] == doc["test"]

    def test_train_accuracy_nearly_constant(self, finetuned):
        # at lr 3e-7 a random head cannot move far in 10 epochs; the
        # published curve's testable trend at this scale is the plateau
        doc, _ = finetuned
        accs = [e["train_acc"] for e in doc["epochs"]]
        assert max(accs) - min(accs) <= 0.3
        assert all(b - a >= -0.25 for a, b in zip(accs, accs[1:]))


class TestErrorPaths:
    def test_single_class_manifest(self, tmp_path, encoder_dir):
        path = write_manifest_lines(tmp_path / "m.jsonl", [
            _manifest_line(f"d{i}", 0, "peace treaty") for i in range(10)
        ])
        with pytest.raises(DataError, match="single class"):
            finetune_classifier(path, encoder_dir, HyperParams())

    def test_encoder_unavailable(self, tmp_path, corpus_manifest):
        with pytest.raises(EncoderUnavailable, match="gone"):
            finetune_classifier(corpus_manifest, tmp_path / "gone", HyperParams())

    def test_oom_aborts_gracefully(self, monkeypatch, corpus_manifest, encoder_dir, tmp_path):
        from transformers.models.bert.modeling_bert import BertForSequenceClassification

        real = BertForSequenceClassification.forward
        seen = {"train_calls": 0}

        def exhausted(self, *args, **kwargs):
            if self.training:
                seen["train_calls"] += 1
                if seen["train_calls"] == 3:
                    raise RuntimeError("CUDA out of memory. Tried to allocate 2.00 GiB")
            return real(self, *args, **kwargs)

        monkeypatch.setattr(BertForSequenceClassification, "forward", exhausted)
        out = tmp_path / "partial.json"
        doc = finetune_classifier(corpus_manifest, encoder_dir, HyperParams(epochs=5, seed=0), out_path=out)
        assert doc["partial"] is True
        assert len(doc["epochs"]) == 2  # third epoch died mid-batch
        assert set(doc["test"]) == {"accuracy", "f1", "auc", "confusion"}
        assert json.loads(out.read_text())["partial"] is True

    def test_other_runtime_errors_propagate(self, monkeypatch, corpus_manifest, encoder_dir):
        from transformers.models.bert.modeling_bert import BertForSequenceClassification

        def broken(self, *args, **kwargs):
            raise RuntimeError("mat1 and mat2 shapes cannot be multiplied")

        monkeypatch.setattr(BertForSequenceClassification, "forward", broken)
        with pytest.raises(RuntimeError, match="shapes"):
            finetune_classifier(corpus_manifest, encoder_dir, HyperParams(epochs=1))


def test_split_covers_both_classes(corpus_manifest):
    # seed 0 is pinned by the fixtures; the held-out split must be scoreable
    from encoder_export.finetune import _split_indices
    from encoder_export.manifest import read_manifest

    labels = np.asarray(read_manifest(corpus_manifest).labels)
    _, val, test = _split_indices(len(labels), HyperParams(seed=0))
    assert set(labels[test]) == {0, 1}
    assert len(set(labels[val])) >= 1
