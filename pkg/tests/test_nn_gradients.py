"""Finite-difference verification of the hand-derived gradients.

Every parameter of every architecture is checked against central
differences on the full training loss (data term plus L2).  Train-mode
checks replay the recorded dropout masks so both sides of the difference
quotient see the same network.
"""

import numpy as np
import pytest

import warspeech.nn.model as model_mod
from warspeech.nn.model import backward, compute_loss, forward, l2_terms, loss_kind_for
from warspeech.nn.params import init_params
from warspeech.nn.spec import PROB_EPS, ModelSpec

H = 1e-5
TOL = 1e-4

SMALL = dict(input_dim=12, timesteps=3, lstm_units=5, dense_units=4, hidden_sizes=(5, 4))


def _spec(kind: str, seed: int, **overrides) -> ModelSpec:
    kw = dict(SMALL)
    kw.update(overrides)
    return ModelSpec(kind=kind, seed=seed, **kw)


def _batch(spec: ModelSpec, seed: int, B: int = 6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(B, spec.input_dim))
    if spec.output_units == 1:
        y = rng.integers(0, 2, size=B)
    else:
        y = rng.integers(0, 2, size=B)
    return X, y


def _loss_at(spec, params, X, y, mode="eval", rng=None):
    scores, _ = forward(spec, params, X, mode=mode, rng=rng)
    return compute_loss(scores, y, loss_kind_for(spec), l2_terms(spec, params))


def _max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    # denominator floored at 1e-6: a central difference with h=1e-5 only
    # resolves components down to ~1e-11 absolute, so below the floor the
    # comparison degrades to an absolute check at 1e-10
    denom = np.maximum(1e-6, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def _fd_gradient(loss_fn, params) -> np.ndarray:
    flat = params.flat
    g = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + H
        up = loss_fn()
        flat[i] = orig - H
        down = loss_fn()
        flat[i] = orig
        g[i] = (up - down) / (2.0 * H)
    return g


class _MaskReplay:
    """Stand-in for model._mask: records masks once, then replays them.

    The replay keeps dropout fixed while finite differences wiggle the
    parameters, so the loss surface being differenced is the same one the
    analytic backward pass saw.
    """

    def __init__(self, real):
        self.real = real
        self.recorded: list = []
        self.replaying = False
        self.i = 0

    def __call__(self, rng, shape, rate):
        if not self.replaying:
            m = self.real(rng, shape, rate)
            self.recorded.append(m)
            return m
        m = self.recorded[self.i]
        self.i += 1
        return m

    def rewind(self):
        self.replaying = True
        self.i = 0


@pytest.mark.parametrize("kind", ["mlp", "lstm", "lstm_attention"])
@pytest.mark.parametrize("seed", [0, 1])
def test_eval_gradients_match_finite_differences(kind, seed):
    spec = _spec(kind, seed)
    params = init_params(spec, seed=seed)
    X, y = _batch(spec, seed=100 + seed)

    _, cache = forward(spec, params, X, mode="eval")
    analytic = backward(spec, params, cache, y).flat.copy()
    numeric = _fd_gradient(lambda: _loss_at(spec, params, X, y), params)

    assert _max_rel_err(analytic, numeric) < TOL


def test_eval_gradients_softmax_head():
    spec = _spec("mlp", seed=3, output_units=2)
    params = init_params(spec, seed=3)
    X, y = _batch(spec, seed=7)

    _, cache = forward(spec, params, X, mode="eval")
    analytic = backward(spec, params, cache, y).flat.copy()
    numeric = _fd_gradient(lambda: _loss_at(spec, params, X, y), params)

    assert _max_rel_err(analytic, numeric) < TOL


@pytest.mark.parametrize("kind", ["mlp", "lstm", "lstm_attention"])
def test_train_gradients_with_replayed_dropout(kind, monkeypatch):
    spec = _spec(kind, seed=2)
    params = init_params(spec, seed=2)
    X, y = _batch(spec, seed=11)

    replay = _MaskReplay(model_mod._mask)
    monkeypatch.setattr(model_mod, "_mask", replay)

    rng = np.random.default_rng(42)
    scores, cache = forward(spec, params, X, mode="train", rng=rng)
    assert replay.recorded, "train mode should have drawn dropout masks"
    analytic = backward(spec, params, cache, y).flat.copy()

    def loss_fn():
        replay.rewind()
        return _loss_at(spec, params, X, y, mode="train", rng=np.random.default_rng(0))

    numeric = _fd_gradient(loss_fn, params)
    assert _max_rel_err(analytic, numeric) < TOL


def test_replayed_masks_reproduce_the_loss(monkeypatch):
    # sanity for the replay harness itself: same masks, same loss
    spec = _spec("lstm_attention", seed=4)
    params = init_params(spec, seed=4)
    X, y = _batch(spec, seed=5)

    replay = _MaskReplay(model_mod._mask)
    monkeypatch.setattr(model_mod, "_mask", replay)
    first = _loss_at(spec, params, X, y, mode="train", rng=np.random.default_rng(9))
    replay.rewind()
    second = _loss_at(spec, params, X, y, mode="train", rng=np.random.default_rng(777))
    assert second == first


def test_clamped_probability_gives_zero_data_gradient():
    # push the sigmoid to exactly 1.0 so every sample sits outside the
    # clamp; the data gradient must vanish and only the L2 term remain
    spec = _spec("mlp", seed=0)
    params = init_params(spec, seed=0)
    params.view("out/bias")[...] = 50.0
    X, y = _batch(spec, seed=1)

    scores, cache = forward(spec, params, X, mode="eval")
    assert np.all(scores >= 1.0 - PROB_EPS)
    grads = backward(spec, params, cache, y)

    for name in params.names:
        got = grads.view(name)
        if name.endswith("/kernel"):
            np.testing.assert_array_equal(got, 2.0 * spec.l2 * params.view(name))
        else:
            np.testing.assert_array_equal(got, np.zeros_like(got))


def test_gradient_store_matches_param_layout():
    spec = _spec("lstm", seed=6)
    params = init_params(spec, seed=6)
    X, y = _batch(spec, seed=6)
    _, cache = forward(spec, params, X, mode="eval")
    grads = backward(spec, params, cache, y)
    assert grads.names == params.names
    assert grads.flat.shape == params.flat.shape
    assert np.isfinite(grads.flat).all()
