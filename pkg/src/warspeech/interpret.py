"""Model interpretation: attention statistics, local surrogates, Shapley values.

Score functions here are batch-style black boxes: they take an (n, M)
array of input rows and return n probabilities.  Explanations operate on
embedding dimensions, with masked-out dimensions replaced by a background
value (never zero) so the local surrogate and the Shapley attributions
perturb inputs the same way.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .nn.model import forward
from .nn.params import ParamStore
from .nn.spec import ModelSpec

EXACT_SHAPLEY_MAX_DIMS = 12


def _eval_rows(score_fn, rows: np.ndarray) -> np.ndarray:
    out = np.asarray(score_fn(rows), dtype=np.float64)
    if out.shape != (rows.shape[0],):
        raise ConfigError(
            f"score_fn returned shape {out.shape} for {rows.shape[0]} rows; expected a vector"
        )
    return out


# ---------------------------------------------------------------------------
# attention


@dataclass
class AttentionSummary:
    doc_means: np.ndarray
    labels: np.ndarray
    bin_edges: np.ndarray
    counts: dict[int, np.ndarray]
    class_means: dict[int, float]
    separation: float


def extract_attention(spec: ModelSpec, params: ParamStore, X, batch_size: int = 256) -> np.ndarray:
    """Per-document attention rows (n_docs, T) from an eval-mode forward."""
    if spec.kind != "lstm_attention":
        raise ConfigError(f"attention extraction needs an lstm_attention model, got {spec.kind!r}")
    X = np.asarray(X, dtype=np.float64)
    rows = []
    for start in range(0, X.shape[0], batch_size):
        _, cache = forward(spec, params, X[start : start + batch_size], mode="eval")
        rows.append(cache["attention"])
    if not rows:
        return np.zeros((0, spec.timesteps))
    return np.concatenate(rows, axis=0)


def attention_summary(attention, labels, n_bins: int = 30) -> AttentionSummary:
    """Distribution of per-document mean weights, split by class.

    Bin edges are shared across the classes; separation is the absolute
    difference of class means over the pooled standard deviation.
    """
    att = np.asarray(attention, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if att.shape[0] != y.shape[0]:
        raise DataError(f"{att.shape[0]} attention rows vs {y.shape[0]} labels")
    doc_means = att.mean(axis=1) if att.ndim == 2 else att.astype(np.float64)
    class_means: dict[int, float] = {}
    class_rows: dict[int, np.ndarray] = {}
    for cls in (0, 1):
        vals = doc_means[y == cls]
        if vals.size == 0:
            raise DataError(f"class {cls} has no documents")
        class_rows[cls] = vals
        class_means[cls] = float(vals.mean())
    lo, hi = float(doc_means.min()), float(doc_means.max())
    span = hi - lo
    # a (near-)constant vector would make the bin width underflow; widen it
    if span <= max(abs(lo), abs(hi), 1.0) * 1e-9:
        edges = np.linspace(lo - 0.5, hi + 0.5, n_bins + 1)
    else:
        edges = np.linspace(lo, hi, n_bins + 1)
    counts = {cls: np.histogram(class_rows[cls], bins=edges)[0] for cls in (0, 1)}
    n0, n1 = class_rows[0].size, class_rows[1].size
    dof = n0 + n1 - 2
    if dof > 0:
        pooled_var = (
            (n0 - 1) * float(np.var(class_rows[0], ddof=1)) if n0 > 1 else 0.0
        ) + ((n1 - 1) * float(np.var(class_rows[1], ddof=1)) if n1 > 1 else 0.0)
        pooled_sd = math.sqrt(pooled_var / dof)
    else:
        pooled_sd = 0.0
    diff = abs(class_means[1] - class_means[0])
    if pooled_sd == 0.0:
        separation = 0.0 if diff == 0.0 else math.inf
    else:
        separation = diff / pooled_sd
    return AttentionSummary(
        doc_means=doc_means,
        labels=y,
        bin_edges=edges,
        counts=counts,
        class_means=class_means,
        separation=separation,
    )


# ---------------------------------------------------------------------------
# LIME-style local surrogate


@dataclass
class LocalExplanation:
    doc_id: str
    weights: np.ndarray
    intercept: float
    selected: list[tuple[int, float]]
    fidelity: float
    params: dict = field(default_factory=dict)


def _all_masks(m: int) -> np.ndarray:
    grid = np.arange(2**m, dtype=np.uint32)
    return ((grid[:, None] >> np.arange(m)) & 1).astype(np.float64)


def lime_explain(
    score_fn,
    x,
    background,
    n_samples: int = 1000,
    kernel_width: float | None = None,
    k_features: int = 10,
    ridge: float = 1e-3,
    seed: int = 0,
    doc_id: str = "",
    enumerate_all: bool = False,
) -> LocalExplanation:
    """Weighted ridge surrogate over binary presence masks.

    Masked dimensions take the background value.  Proximity of a perturbed
    row v is exp(-D^2 / sigma^2) with D = ||x - v|| / sqrt(M); sigma
    defaults to 0.75 sqrt(M).  Dimensions equal to the background cannot
    move the score and get weight exactly 0.  Fidelity is the weighted R^2
    of the surrogate on the sample.
    """
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(background, dtype=np.float64)
    if x.shape != b.shape or x.ndim != 1:
        raise ConfigError(f"x {x.shape} and background {b.shape} must be equal-length vectors")
    m = x.shape[0]
    if enumerate_all:
        if m > EXACT_SHAPLEY_MAX_DIMS:
            raise ConfigError(f"full enumeration limited to {EXACT_SHAPLEY_MAX_DIMS} dims, got {m}")
        masks = _all_masks(m)
    else:
        if n_samples < 10:
            raise ConfigError(f"n_samples must be >= 10, got {n_samples}")
        rng = np.random.default_rng(seed)
        masks = rng.integers(0, 2, size=(n_samples, m)).astype(np.float64)
        if np.all(masks == masks[0]):
            raise DataError(
                "degenerate sampling: every mask identical; increase n_samples"
            )
    sigma = kernel_width if kernel_width is not None else 0.75 * math.sqrt(m)
    rows = masks * x + (1.0 - masks) * b
    dist = np.linalg.norm(rows - x, axis=1) / math.sqrt(m)
    pi = np.exp(-(dist**2) / (sigma**2))
    f = _eval_rows(score_fn, rows)

    live = np.flatnonzero(x != b)
    weights = np.zeros(m)
    if live.size:
        Z = masks[:, live]
        A = np.concatenate([np.ones((Z.shape[0], 1)), Z], axis=1)
        W = pi[:, None] * A
        gram = A.T @ W
        penalty = np.eye(A.shape[1]) * ridge
        penalty[0, 0] = 0.0  # intercept unpenalized
        beta = np.linalg.solve(gram + penalty, A.T @ (pi * f))
        intercept = float(beta[0])
        weights[live] = beta[1:]
        yhat = A @ beta
    else:
        total = float(pi.sum())
        intercept = float((pi * f).sum() / total) if total else 0.0
        yhat = np.full(f.shape, intercept)

    fbar = float((pi * f).sum() / pi.sum())
    ss_res = float((pi * (f - yhat) ** 2).sum())
    ss_tot = float((pi * (f - fbar) ** 2).sum())
    # R^2 is meaningless when the response is constant up to rounding, so
    # compare both sums against a noise floor scaled to the response
    floor = 1e-18 * max(1.0, float((pi * f * f).sum()))
    if ss_tot <= floor:
        fidelity = 1.0 if ss_res <= floor else -math.inf
    else:
        fidelity = 1.0 - ss_res / ss_tot

    order = sorted(range(m), key=lambda i: (-abs(weights[i]), i))
    selected = [
        (i, float(weights[i])) for i in order[: min(k_features, m)] if weights[i] != 0.0
    ]
    return LocalExplanation(
        doc_id=doc_id,
        weights=weights,
        intercept=intercept,
        selected=selected,
        fidelity=fidelity,
        params={
            "n_samples": int(masks.shape[0]),
            "kernel_width": sigma,
            "k_features": k_features,
            "ridge": ridge,
            "seed": seed,
            "enumerate_all": enumerate_all,
        },
    )


# ---------------------------------------------------------------------------
# Shapley values


def _shapley_kernel(m: int, s: int) -> float:
    return (m - 1) / (math.comb(m, s) * s * (m - s))


def exact_shapley(score_fn, x, background) -> np.ndarray:
    """Brute-force Shapley values by coalition enumeration; dims <= 12."""
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(background, dtype=np.float64)
    if x.shape != b.shape or x.ndim != 1:
        raise ConfigError(f"x {x.shape} and background {b.shape} must be equal-length vectors")
    m = x.shape[0]
    if m > EXACT_SHAPLEY_MAX_DIMS:
        raise ConfigError(
            f"exact enumeration refused beyond {EXACT_SHAPLEY_MAX_DIMS} dims (got {m})"
        )
    masks = _all_masks(m)
    rows = masks * x + (1.0 - masks) * b
    values = _eval_rows(score_fn, rows)  # indexed by bitmask integer
    fact = [math.factorial(k) for k in range(m + 1)]
    phi = np.zeros(m)
    for mask in range(2**m):
        size = bin(mask).count("1")
        coef = fact[size] * fact[m - size - 1] / fact[m]
        for i in range(m):
            bit = 1 << i
            if mask & bit:
                continue
            phi[i] += coef * (values[mask | bit] - values[mask])
    return phi


def kernel_shap(
    score_fn,
    x,
    background,
    n_coalitions: int = 2048,
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Shapley values by weighted regression over coalitions.

    The efficiency constraint (base value plus attributions equals the
    score at x) is substituted into the solve, so it holds exactly.  When
    the budget covers every nontrivial coalition the result matches the
    brute-force enumeration; otherwise complete coalition sizes are
    enumerated outside-in and the remaining budget is sampled by kernel
    mass.  Dimensions equal to the background get zero.
    """
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(background, dtype=np.float64)
    if x.shape != b.shape or x.ndim != 1:
        raise ConfigError(f"x {x.shape} and background {b.shape} must be equal-length vectors")
    m = x.shape[0]
    if m < 2:
        raise ConfigError("kernel_shap needs at least 2 dimensions")
    if n_coalitions < m + 2:
        raise ConfigError(f"n_coalitions must be >= dims + 2 = {m + 2}, got {n_coalitions}")
    base = float(_eval_rows(score_fn, b[None, :])[0])
    fx = float(_eval_rows(score_fn, x[None, :])[0])
    delta = fx - base

    live = np.flatnonzero(x != b)
    phi = np.zeros(m)
    me = live.size
    if me == 0:
        return phi, base
    if me == 1:
        phi[live[0]] = delta
        return phi, base

    masks_live, weights = _coalition_design(me, n_coalitions, seed)
    masks = np.zeros((masks_live.shape[0], m))
    masks[:, live] = masks_live
    rows = masks * x + (1.0 - masks) * b
    f = _eval_rows(score_fn, rows)

    # substitute the efficiency constraint: phi_last = delta - sum(others)
    y = f - base - masks_live[:, -1] * delta
    Z = masks_live[:, :-1] - masks_live[:, -1][:, None]
    WZ = weights[:, None] * Z
    gram = Z.T @ WZ
    rhs = Z.T @ (weights * y)
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    phi_live = np.empty(me)
    phi_live[:-1] = beta
    phi_live[-1] = delta - beta.sum()
    phi[live] = phi_live
    return phi, base


def _coalition_design(me: int, budget: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Coalition masks over the live dims plus their regression weights."""
    total = 2**me - 2
    if budget >= total:
        grid = np.arange(1, 2**me - 1, dtype=np.uint64)
        masks = ((grid[:, None] >> np.arange(me, dtype=np.uint64)) & 1).astype(np.float64)
        sizes = masks.sum(axis=1).astype(np.int64)
        weights = np.array([_shapley_kernel(me, int(s)) for s in sizes])
        return masks, weights

    # enumerate complete size levels outside-in while the budget allows
    order = sorted(range(1, me), key=lambda s: (min(s, me - s), s))
    mask_list: list[np.ndarray] = []
    weight_list: list[float] = []
    remaining = budget
    enumerated: set[int] = set()
    for s in order:
        count = math.comb(me, s)
        if count > remaining:
            continue
        idx = np.array(list(_combinations_indices(me, s)), dtype=np.int64)
        level = np.zeros((idx.shape[0], me))
        level[np.arange(idx.shape[0])[:, None], idx] = 1.0
        w = _shapley_kernel(me, s)
        mask_list.append(level)
        weight_list.extend([w] * idx.shape[0])
        enumerated.add(s)
        remaining -= count
    leftover_sizes = [s for s in range(1, me) if s not in enumerated]
    if leftover_sizes and remaining > 0:
        # per-size kernel mass: kernel(s) * count(s) = (me-1)/(s*(me-s))
        mass = np.array([(me - 1) / (s * (me - s)) for s in leftover_sizes])
        p = mass / mass.sum()
        rng = np.random.default_rng(seed)
        drawn = rng.choice(len(leftover_sizes), size=remaining, p=p)
        sample = np.zeros((remaining, me))
        for j, k in enumerate(drawn):
            s = leftover_sizes[int(k)]
            cols = rng.choice(me, size=s, replace=False)
            sample[j, cols] = 1.0
        mask_list.append(sample)
        share = float(mass.sum()) / remaining
        weight_list.extend([share] * remaining)
    masks = np.concatenate(mask_list, axis=0)
    return masks, np.asarray(weight_list)


def _combinations_indices(n: int, k: int):
    return itertools.combinations(range(n), k)


# ---------------------------------------------------------------------------
# global summary


@dataclass
class GlobalExplanation:
    phi: np.ndarray
    base_value: float
    mean_abs_phi: np.ndarray
    ranking: list[int]


def global_shap_summary(phi_matrix, labels, base_value: float = 0.0) -> GlobalExplanation:
    """Rank dimensions by mean |phi| over the label-1 documents."""
    phi = np.asarray(phi_matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if phi.ndim != 2 or phi.shape[0] != y.shape[0]:
        raise DataError(f"phi matrix {phi.shape} does not match {y.shape[0]} labels")
    pos = phi[y == 1]
    if pos.shape[0] == 0:
        raise DataError("no label-1 documents to summarize")
    mean_abs = np.abs(pos).mean(axis=0)
    ranking = sorted(range(phi.shape[1]), key=lambda i: (-mean_abs[i], i))
    return GlobalExplanation(
        phi=phi, base_value=base_value, mean_abs_phi=mean_abs, ranking=ranking
    )
