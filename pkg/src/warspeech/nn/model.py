"""Forward, loss, and hand-derived backward passes for all three models.

Everything is float64 numpy.  The forward pass stashes every intermediate
a gradient needs in a cache dict; backward consumes that cache and returns
gradients in a store with the exact same layout as the parameters, so the
finite-difference harness can compare them element by element.

Gate math follows the standard cell: i, f, o = sigmoid, candidate = tanh,
c_t = f*c_{t-1} + i*g, h_t = o*tanh(c_t).  Input and recurrent dropout use
one mask per sequence, reapplied at every step.  Attention scores each
step with score_t = v . tanh(W h_t + b), softmax-normalizes them, and
feeds the convex combination of hidden states to the dense head.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError, StaleCacheError
from .params import ParamStore, regularized_kernels
from .spec import ModelSpec, PROB_EPS


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray | None:
    """Inverted dropout mask: keep with prob 1-rate, scale kept by 1/(1-rate)."""
    if rate <= 0.0:
        return None
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep


def _apply(x: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    return x if mask is None else x * mask


def forward(
    spec: ModelSpec,
    params: ParamStore,
    X_batch: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Run the network; returns (scores, cache).

    ``scores`` is (B,) sigmoid probabilities or (B, 2) softmax rows.  In
    train mode ``rng`` drives the dropout masks; eval mode applies none.
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    X = np.asarray(X_batch, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ShapeError(
            f"batch shape {X.shape} incompatible with input_dim {spec.input_dim}"
        )
    train = mode == "train"
    if train and rng is None:
        raise ConfigError("train-mode forward requires an rng for dropout")

    cache: dict = {"mode": mode, "version": params.version, "X": X}
    if spec.kind == "mlp":
        scores = _forward_mlp(spec, params, X, train, rng, cache)
    else:
        scores = _forward_recurrent(spec, params, X, train, rng, cache)
    cache["scores"] = scores
    return scores, cache


def _head(spec: ModelSpec, z_out: np.ndarray, cache: dict) -> np.ndarray:
    if spec.output_units == 1:
        return sigmoid(z_out[:, 0])
    return softmax_rows(z_out)


def _forward_mlp(spec, params, X, train, rng, cache) -> np.ndarray:
    w0, b0 = params.view("dense0/kernel"), params.view("dense0/bias")
    w1, b1 = params.view("dense1/kernel"), params.view("dense1/bias")
    wo, bo = params.view("out/kernel"), params.view("out/bias")
    z1 = X @ w0 + b0
    a1 = np.maximum(z1, 0.0)
    m1 = _mask(rng, a1.shape, spec.mlp_dropout) if train else None
    a1d = _apply(a1, m1)
    z2 = a1d @ w1 + b1
    a2 = np.maximum(z2, 0.0)
    m2 = _mask(rng, a2.shape, spec.mlp_dropout) if train else None
    a2d = _apply(a2, m2)
    z_out = a2d @ wo + bo
    cache.update(z1=z1, a1d=a1d, z2=z2, a2d=a2d, m1=m1, m2=m2)
    return _head(spec, z_out, cache)


def _forward_recurrent(spec, params, X, train, rng, cache) -> np.ndarray:
    B = X.shape[0]
    T, D, H = spec.timesteps, spec.step_dim, spec.lstm_units
    X3 = X.reshape(B, T, D)
    wx = params.view("lstm/kernel")
    wh = params.view("lstm/recurrent")
    b = params.view("lstm/bias")
    mx = _mask(rng, (B, D), spec.lstm_dropout) if train else None
    mh = _mask(rng, (B, H), spec.recurrent_dropout) if train else None

    h_all = np.zeros((T + 1, B, H))
    c_all = np.zeros((T + 1, B, H))
    gi = np.empty((T, B, H))
    gf = np.empty((T, B, H))
    gg = np.empty((T, B, H))
    go = np.empty((T, B, H))
    tc = np.empty((T, B, H))
    for t in range(T):
        xt = _apply(X3[:, t], mx)
        hin = _apply(h_all[t], mh)
        z = xt @ wx + hin @ wh + b
        gi[t] = sigmoid(z[:, :H])
        gf[t] = sigmoid(z[:, H : 2 * H])
        gg[t] = np.tanh(z[:, 2 * H : 3 * H])
        go[t] = sigmoid(z[:, 3 * H :])
        c_all[t + 1] = gf[t] * c_all[t] + gi[t] * gg[t]
        tc[t] = np.tanh(c_all[t + 1])
        h_all[t + 1] = go[t] * tc[t]
    cache.update(X3=X3, mx=mx, mh=mh, h_all=h_all, c_all=c_all, gi=gi, gf=gf, gg=gg, go=go, tc=tc)

    if spec.kind == "lstm_attention":
        hs = np.transpose(h_all[1:], (1, 0, 2))  # (B, T, H)
        wa = params.view("attn/kernel")
        ba = params.view("attn/bias")
        va = params.view("attn/score")
        s = np.tanh(hs @ wa + ba)
        e = s @ va
        alpha = softmax_rows(e)
        feat = np.einsum("bt,bth->bh", alpha, hs)
        cache.update(hs=hs, attn_pre=s, attention=alpha)
    else:
        feat = h_all[T]

    wd, bd = params.view("dense/kernel"), params.view("dense/bias")
    wo, bo = params.view("out/kernel"), params.view("out/bias")
    zd = feat @ wd + bd
    ad = np.maximum(zd, 0.0)
    md = _mask(rng, ad.shape, spec.dense_dropout) if train else None
    add = _apply(ad, md)
    z_out = add @ wo + bo
    cache.update(feat=feat, zd=zd, add=add, md=md)
    return _head(spec, z_out, cache)


def compute_loss(scores, y, loss_kind: str, l2_terms=()) -> float:
    """Mean data loss plus the summed L2 penalties.

    Probabilities are clamped to [eps, 1-eps] before the log, so the loss
    is finite for any score the forward pass can produce.
    """
    y = np.asarray(y)
    if loss_kind == "binary_cross_entropy":
        p = np.clip(np.asarray(scores, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)
        if p.ndim != 1 or p.shape[0] != y.shape[0]:
            raise ShapeError(f"scores shape {p.shape} vs labels {y.shape}")
        yf = y.astype(np.float64)
        data = float(np.mean(-(yf * np.log(p) + (1.0 - yf) * np.log1p(-p))))
    elif loss_kind == "sparse_categorical_cross_entropy":
        probs = np.asarray(scores, dtype=np.float64)
        if probs.ndim != 2:
            raise ShapeError("sparse categorical loss needs a (B, classes) score matrix")
        py = np.clip(probs[np.arange(probs.shape[0]), y.astype(np.int64)], PROB_EPS, 1.0 - PROB_EPS)
        data = float(np.mean(-np.log(py)))
    else:
        raise ConfigError(f"unknown loss {loss_kind!r}")
    reg = 0.0
    for lam, kernel in l2_terms:
        reg += lam * float(np.sum(np.asarray(kernel) ** 2))
    return data + reg


def l2_terms(spec: ModelSpec, params: ParamStore) -> list[tuple[float, np.ndarray]]:
    if spec.l2 == 0:
        return []
    return [(spec.l2, params.view(name)) for name in regularized_kernels(spec)]


def loss_kind_for(spec: ModelSpec) -> str:
    return "binary_cross_entropy" if spec.output_units == 1 else "sparse_categorical_cross_entropy"


def _head_grad(spec: ModelSpec, cache: dict, y: np.ndarray) -> np.ndarray:
    """d(mean data loss)/d(pre-activation output), honoring the clamp.

    Where the predicted probability sits inside the clamp the usual
    (p - y)/B form applies; at a clamped value the loss is locally flat in
    the logit, so the gradient there is exactly zero.
    """
    scores = cache["scores"]
    B = scores.shape[0]
    if spec.output_units == 1:
        p = scores
        y_f = np.asarray(y, dtype=np.float64)
        inside = (p > PROB_EPS) & (p < 1.0 - PROB_EPS)
        dz = np.where(inside, p - y_f, 0.0) / B
        return dz[:, None]
    probs = scores
    y_i = np.asarray(y, dtype=np.int64)
    py = probs[np.arange(B), y_i]
    inside = (py > PROB_EPS) & (py < 1.0 - PROB_EPS)
    onehot = np.zeros_like(probs)
    onehot[np.arange(B), y_i] = 1.0
    dz = (probs - onehot) * inside[:, None] / B
    return dz


def backward(spec: ModelSpec, params: ParamStore, cache: dict, y) -> ParamStore:
    """Analytic gradients of compute_loss (data term + L2) w.r.t. params."""
    if cache.get("version") != params.version:
        raise StaleCacheError(
            "cache is stale: parameters were updated after this forward pass"
        )
    grads = params.zeros_like()
    dz_out = _head_grad(spec, cache, np.asarray(y))
    if spec.kind == "mlp":
        _backward_mlp(spec, params, cache, dz_out, grads)
    else:
        _backward_recurrent(spec, params, cache, dz_out, grads)
    lam = spec.l2
    if lam:
        for name in regularized_kernels(spec):
            grads.view(name)[...] += 2.0 * lam * params.view(name)
    return grads


def _backward_mlp(spec, params, cache, dz_out, grads) -> None:
    X, z1, a1d, z2, a2d = cache["X"], cache["z1"], cache["a1d"], cache["z2"], cache["a2d"]
    m1, m2 = cache["m1"], cache["m2"]
    grads.view("out/kernel")[...] = a2d.T @ dz_out
    grads.view("out/bias")[...] = dz_out.sum(axis=0)
    da2d = dz_out @ params.view("out/kernel").T
    dz2 = _apply(da2d, m2) * (z2 > 0.0)
    grads.view("dense1/kernel")[...] = a1d.T @ dz2
    grads.view("dense1/bias")[...] = dz2.sum(axis=0)
    da1d = dz2 @ params.view("dense1/kernel").T
    dz1 = _apply(da1d, m1) * (z1 > 0.0)
    grads.view("dense0/kernel")[...] = X.T @ dz1
    grads.view("dense0/bias")[...] = dz1.sum(axis=0)


def _backward_recurrent(spec, params, cache, dz_out, grads) -> None:
    T, H = spec.timesteps, spec.lstm_units
    feat, zd, add, md = cache["feat"], cache["zd"], cache["add"], cache["md"]

    grads.view("out/kernel")[...] = add.T @ dz_out
    grads.view("out/bias")[...] = dz_out.sum(axis=0)
    dadd = dz_out @ params.view("out/kernel").T
    dzd = _apply(dadd, md) * (zd > 0.0)
    grads.view("dense/kernel")[...] = feat.T @ dzd
    grads.view("dense/bias")[...] = dzd.sum(axis=0)
    dfeat = dzd @ params.view("dense/kernel").T

    h_all, c_all = cache["h_all"], cache["c_all"]
    gi, gf, gg, go, tc = cache["gi"], cache["gf"], cache["gg"], cache["go"], cache["tc"]
    X3, mx, mh = cache["X3"], cache["mx"], cache["mh"]
    B = X3.shape[0]

    # per-step gradient arriving at h_t from the head / attention
    dh_steps = np.zeros((B, T, H))
    if spec.kind == "lstm_attention":
        hs, s, alpha = cache["hs"], cache["attn_pre"], cache["attention"]
        va = params.view("attn/score")
        wa = params.view("attn/kernel")
        dctx = dfeat
        dalpha = np.einsum("bh,bth->bt", dctx, hs)
        dh_steps += alpha[:, :, None] * dctx[:, None, :]
        # softmax jacobian applied row-wise
        de = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
        grads.view("attn/score")[...] = np.einsum("bt,bth->h", de, s)
        ds = de[:, :, None] * va[None, None, :]
        dpre = ds * (1.0 - s * s)
        grads.view("attn/kernel")[...] = np.einsum("bth,bta->ha", hs, dpre)
        grads.view("attn/bias")[...] = dpre.sum(axis=(0, 1))
        dh_steps += np.einsum("bta,ha->bth", dpre, wa)
    else:
        dh_steps[:, T - 1, :] = dfeat

    wx = params.view("lstm/kernel")
    wh = params.view("lstm/recurrent")
    g_wx = grads.view("lstm/kernel")
    g_wh = grads.view("lstm/recurrent")
    g_b = grads.view("lstm/bias")
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        dh = dh_steps[:, t, :] + dh_next
        do = dh * tc[t]
        dc = dc_next + dh * go[t] * (1.0 - tc[t] * tc[t])
        di = dc * gg[t]
        df = dc * c_all[t]
        dg = dc * gi[t]
        dz[:, :H] = di * gi[t] * (1.0 - gi[t])
        dz[:, H : 2 * H] = df * gf[t] * (1.0 - gf[t])
        dz[:, 2 * H : 3 * H] = dg * (1.0 - gg[t] * gg[t])
        dz[:, 3 * H :] = do * go[t] * (1.0 - go[t])
        xt = _apply(X3[:, t], mx)
        hin = _apply(h_all[t], mh)
        g_wx += xt.T @ dz
        g_wh += hin.T @ dz
        g_b += dz.sum(axis=0)
        dh_next = _apply(dz @ wh.T, mh)
        dc_next = dc * gf[t]


def positive_scores(scores: np.ndarray) -> np.ndarray:
    """Positive-class probability for either head, as a 1-D vector."""
    scores = np.asarray(scores)
    return scores if scores.ndim == 1 else scores[:, 1]
