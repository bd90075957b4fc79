"""Fine-tune the encoder as a binary classifier.

Adds a two-way classification head, trains with sparse categorical
cross-entropy under Adam (lr 3e-7, beta1 0.9, beta2 0.999, eps 1e-8)
with global-norm gradient clipping at 2.0, for 10 epochs in batches of
32.  Those values are the published configuration and are the defaults
here; the emitted metrics file records whatever was actually used.

The metrics file follows the pipeline's evaluation schema (model, seed,
per-epoch curves, test block) so it can sit in a comparison table next
to the from-scratch models.  Running out of memory mid-training aborts
gracefully: the epochs completed so far are evaluated and written with
"partial" set to true.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, EncoderUnavailable
from .manifest import read_manifest


@dataclass(frozen=True)
class HyperParams:
    learning_rate: float = 3e-7
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clipnorm: float = 2.0
    epochs: int = 10
    batch_size: int = 32
    max_tokens: int = 512
    fractions: tuple = (0.8, 0.1, 0.1)
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if abs(sum(self.fractions) - 1.0) > 1e-9 or len(self.fractions) != 3:
            raise ConfigError(f"fractions must be 3 values summing to 1, got {self.fractions}")


def build_optimizer(model, hp: HyperParams):
    import torch

    return torch.optim.Adam(
        model.parameters(),
        lr=hp.learning_rate,
        betas=(hp.beta1, hp.beta2),
        eps=hp.epsilon,
    )


def _split_indices(n: int, hp: HyperParams):
    perm = np.random.default_rng(hp.seed).permutation(n)
    n_train = int(round(hp.fractions[0] * n))
    n_val = int(round(hp.fractions[1] * n))
    train, val, test = perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]
    if len(train) == 0 or len(val) == 0 or len(test) == 0:
        raise DataError(f"split of {n} docs left an empty subset: "
                        f"{len(train)}/{len(val)}/{len(test)}")
    return train, val, test


def _is_oom(exc: BaseException) -> bool:
    return isinstance(exc, MemoryError) or "out of memory" in str(exc).lower()


def finetune_classifier(
    manifest_path,
    encoder_path,
    hp: HyperParams = HyperParams(),
    out_path=None,
    model_tag: str = "bert-finetuned",
) -> dict:
    """Train, evaluate on the held-out test split, return the metrics doc.

    When ``out_path`` is given the document is also written there as JSON.
    """
    import torch
    from torch.nn.utils import clip_grad_norm_
    from sklearn.metrics import accuracy_score, confusion_matrix, f1_score, roc_auc_score
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    manifest = read_manifest(manifest_path)
    y = np.asarray(manifest.labels, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise DataError("manifest has a single class; nothing to classify")

    enc_dir = Path(encoder_path)
    if not enc_dir.exists():
        raise EncoderUnavailable(
            f"encoder not found at {enc_dir}; pass a local checkpoint directory"
        )
    torch.manual_seed(hp.seed)  # head init and dropout draws
    try:
        tokenizer = AutoTokenizer.from_pretrained(str(enc_dir))
        model = AutoModelForSequenceClassification.from_pretrained(str(enc_dir), num_labels=2)
    except Exception as exc:
        raise EncoderUnavailable(f"could not load encoder from {enc_dir}: {exc}") from exc
    device = torch.device(hp.device)
    model.to(device)

    train_idx, val_idx, test_idx = _split_indices(len(manifest), hp)
    optimizer = build_optimizer(model, hp)

    def batches(idx):
        for start in range(0, len(idx), hp.batch_size):
            sel = idx[start : start + hp.batch_size]
            enc = tokenizer(
                [manifest.texts[i] for i in sel],
                truncation=True,
                max_length=hp.max_tokens,
                padding=True,
                return_tensors="pt",
            ).to(device)
            yb = torch.as_tensor(y[sel], device=device)
            yield enc, yb

    def evaluate(idx):
        model.eval()
        losses, hits = [], 0
        with torch.no_grad():
            for enc, yb in batches(idx):
                out = model(**enc, labels=yb)
                losses.append(out.loss.item() * len(yb))
                hits += int((out.logits.argmax(dim=1) == yb).sum())
        return sum(losses) / len(idx), hits / len(idx)

    epochs = []
    partial = False
    try:
        for epoch in range(1, hp.epochs + 1):
            model.train()
            losses, hits = [], 0
            for enc, yb in batches(train_idx):
                optimizer.zero_grad()
                out = model(**enc, labels=yb)  # sparse CE over integer labels
                out.loss.backward()
                clip_grad_norm_(model.parameters(), hp.clipnorm)
                optimizer.step()
                losses.append(out.loss.item() * len(yb))
                hits += int((out.logits.argmax(dim=1) == yb).sum())
            val_loss, val_acc = evaluate(val_idx)
            epochs.append({
                "epoch": epoch,
                "train_loss": sum(losses) / len(train_idx),
                "train_acc": hits / len(train_idx),
                "val_loss": val_loss,
                "val_acc": val_acc,
            })
    except (MemoryError, RuntimeError) as exc:
        if not _is_oom(exc):
            raise
        partial = True

    # test metrics with whatever weights training reached
    model.eval()
    scores, preds = [], []
    with torch.no_grad():
        for enc, _ in batches(test_idx):
            logits = model(**enc).logits
            scores.extend(torch.softmax(logits, dim=1)[:, 1].tolist())
            preds.extend(logits.argmax(dim=1).tolist())
    y_test = y[test_idx]
    if len(np.unique(y_test)) < 2:
        raise DataError("test split has a single class; choose another split seed")
    tn, fp, fn, tp = confusion_matrix(y_test, preds, labels=[0, 1]).ravel()
    doc = {
        "model": model_tag,
        "seed": hp.seed,
        "epochs": epochs,
        "test": {
            "accuracy": float(accuracy_score(y_test, preds)),
            "f1": float(f1_score(y_test, preds, zero_division=0)),
            "auc": float(roc_auc_score(y_test, scores)),
            "confusion": [int(tn), int(fp), int(fn), int(tp)],
        },
        "optimizer": {
            "kind": "adam",
            "learning_rate": hp.learning_rate,
            "beta1": hp.beta1,
            "beta2": hp.beta2,
            "epsilon": hp.epsilon,
            "clipnorm": hp.clipnorm,
        },
        "partial": partial,
    }
    if out_path is not None:
        Path(out_path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return doc
