"""SGD with Nesterov momentum and Adam, operating on flat parameter stores.

Both update the full flat vector in place and bump the store's version so
any cached forward pass taken before the step is recognizably stale.
Gradient clipping rescales by global L2 norm before the update, matching
the usual clipnorm semantics.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError
from .params import ParamStore
from .spec import OptimizerConfig


class OptimizerState:
    """Per-run mutable state: velocity for momentum, moments + t for Adam."""

    def __init__(self, config: OptimizerConfig, n_params: int):
        self.config = config
        self.step_count = 0
        if config.kind == "sgd_nesterov":
            self.velocity = np.zeros(n_params)
        else:
            self.m = np.zeros(n_params)
            self.v = np.zeros(n_params)


def clip_by_global_norm(flat_grads: np.ndarray, clipnorm: float) -> np.ndarray:
    norm = float(np.linalg.norm(flat_grads))
    if norm > clipnorm:
        return flat_grads * (clipnorm / norm)
    return flat_grads


def optimizer_step(params: ParamStore, grads: ParamStore, state: OptimizerState) -> None:
    """Apply one update in place; raises DataError on non-finite gradients."""
    if grads.flat.shape != params.flat.shape:
        raise ConfigError("gradient store does not match parameter store layout")
    bad = np.flatnonzero(~np.isfinite(grads.flat))
    if bad.size:
        name = grads.name_of_flat_index(int(bad[0]))
        raise DataError(f"non-finite gradient in view {name!r}")
    g = grads.flat
    cfg = state.config
    if cfg.clipnorm is not None:
        g = clip_by_global_norm(g, cfg.clipnorm)
    state.step_count += 1
    if cfg.kind == "sgd_nesterov":
        # velocity update, then a lookahead step: theta += mu*v_new - lr*g
        v = state.velocity
        v *= cfg.momentum
        v -= cfg.learning_rate * g
        params.flat += cfg.momentum * v - cfg.learning_rate * g
    else:
        t = state.step_count
        state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
        state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * (g * g)
        m_hat = state.m / (1.0 - cfg.beta1**t)
        v_hat = state.v / (1.0 - cfg.beta2**t)
        params.flat -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    params.version += 1
