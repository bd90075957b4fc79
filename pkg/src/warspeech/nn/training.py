"""Dataset splitting and the mini-batch training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from ..resample import ResampleConfig, resample_pipeline
from ..seeds import derive_seed
from .model import compute_loss, backward, forward, l2_terms, loss_kind_for, positive_scores
from .optim import OptimizerState, optimizer_step
from .params import ParamStore, init_params
from .spec import EpochStats, ModelSpec, OptimizerConfig, TrainConfig, TrainReport


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split_dataset(X, y, fractions, seed: int) -> Split:
    """Shuffled disjoint train/val/test index sets.

    Val and test sizes are floored; every leftover row goes to train, so
    the three sets always exhaust the data.
    """
    n = len(y)
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    n_val = int(n * fractions[1])
    n_test = int(n * fractions[2])
    n_train = n - n_val - n_test
    for name, frac, size in (
        ("train", fractions[0], n_train),
        ("val", fractions[1], n_val),
        ("test", fractions[2], n_test),
    ):
        if frac > 0 and size == 0:
            raise ConfigError(f"{name} split is empty at fraction {frac} with {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return Split(
        train=perm[:n_train],
        val=perm[n_train : n_train + n_val],
        test=perm[n_train + n_val :],
    )


def _batch_eval(spec, params, X, y, loss_kind, reg_terms, batch_size=256):
    """Eval-mode loss and accuracy, batch-size independent."""
    n = len(y)
    total_nll = 0.0
    correct = 0
    for start in range(0, n, batch_size):
        xb = X[start : start + batch_size]
        yb = y[start : start + batch_size]
        scores, _ = forward(spec, params, xb, mode="eval")
        total_nll += compute_loss(scores, yb, loss_kind) * len(yb)
        correct += int(np.sum((positive_scores(scores) >= 0.5).astype(np.int64) == yb))
    reg = sum(lam * float(np.sum(np.asarray(w) ** 2)) for lam, w in reg_terms)
    return total_nll / n + reg, correct / n


def train(
    spec: ModelSpec,
    X: np.ndarray,
    y: np.ndarray,
    train_cfg: TrainConfig,
    opt_cfg: OptimizerConfig,
    resample_cfg: ResampleConfig | None = None,
) -> tuple[ParamStore, TrainReport]:
    """Fit the model; returns final parameters and the per-epoch report.

    Resampling, when configured, touches the training split only, unless
    the config opts into resampling before the split.  A non-finite loss
    aborts with the epoch and batch where it appeared.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ConfigError(f"{X.shape[0]} rows vs {y.shape[0]} labels")

    if resample_cfg is not None and resample_cfg.apply_before_split:
        X, y, _ = resample_pipeline(X, y, resample_cfg)

    split = split_dataset(X, y, train_cfg.fractions, train_cfg.shuffle_seed)
    if split.val.size == 0:
        raise ConfigError("training requires a nonempty validation split")
    X_tr, y_tr = X[split.train], y[split.train]
    X_val, y_val = X[split.val], y[split.val]

    if resample_cfg is not None and not resample_cfg.apply_before_split:
        X_tr, y_tr, _ = resample_pipeline(X_tr, y_tr, resample_cfg)

    if len(y_tr) < 1:
        raise ConfigError("training split has no rows")

    params = init_params(spec)
    state = OptimizerState(opt_cfg, params.size)
    loss_kind = train_cfg.loss
    if (loss_kind == "binary_cross_entropy") != (spec.output_units == 1):
        raise ConfigError(
            f"loss {loss_kind!r} incompatible with output_units {spec.output_units}"
        )
    dropout_rng = np.random.default_rng(derive_seed(spec.seed, "dropout"))

    report = TrainReport(
        seeds={
            "model": spec.seed,
            "shuffle": train_cfg.shuffle_seed,
            "resample": None if resample_cfg is None else resample_cfg.seed,
        }
    )
    n_tr = len(y_tr)
    for epoch in range(1, train_cfg.epochs + 1):
        started = time.perf_counter()
        order = np.random.default_rng(
            derive_seed(train_cfg.shuffle_seed, f"epoch:{epoch}")
        ).permutation(n_tr)
        loss_sum = 0.0
        correct = 0
        for batch_index, start in enumerate(range(0, n_tr, train_cfg.batch_size)):
            idx = order[start : start + train_cfg.batch_size]
            xb, yb = X_tr[idx], y_tr[idx]
            scores, cache = forward(spec, params, xb, mode="train", rng=dropout_rng)
            loss = compute_loss(scores, yb, loss_kind, l2_terms(spec, params))
            if not np.isfinite(loss):
                raise DataError(
                    f"non-finite training loss at epoch {epoch}, batch {batch_index}"
                )
            loss_sum += loss * len(yb)
            correct += int(np.sum((positive_scores(scores) >= 0.5).astype(np.int64) == yb))
            grads = backward(spec, params, cache, yb)
            optimizer_step(params, grads, state)
        val_loss, val_acc = _batch_eval(
            spec, params, X_val, y_val, loss_kind, l2_terms(spec, params)
        )
        report.epochs.append(
            EpochStats(
                epoch=epoch,
                train_loss=loss_sum / n_tr,
                train_acc=correct / n_tr,
                val_loss=val_loss,
                val_acc=val_acc,
            )
        )
        report.wall_clock.append(time.perf_counter() - started)
    params.assert_all_finite()
    report.param_digest = params.digest()
    return params, report


def predict_scores(spec: ModelSpec, params: ParamStore, X, batch_size: int = 256) -> np.ndarray:
    """Deterministic eval-mode scores; (B,) sigmoid or (B, 2) softmax rows."""
    X = np.asarray(X, dtype=np.float64)
    chunks = []
    for start in range(0, X.shape[0], batch_size):
        scores, _ = forward(spec, params, X[start : start + batch_size], mode="eval")
        chunks.append(scores)
    if not chunks:
        return np.zeros(0)
    return np.concatenate(chunks, axis=0)
