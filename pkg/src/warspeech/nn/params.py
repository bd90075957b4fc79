"""Flat parameter storage with named shaped views, plus initializers."""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import ConfigError, ShapeError
from .spec import ModelSpec


class ParamStore:
    """One flat float64 array; every layer tensor is a named view into it.

    Views share memory with the flat array, so an optimizer that updates
    ``flat`` in place updates every layer.  ``version`` counts optimizer
    updates and lets backward detect a cache taken before an update.
    """

    def __init__(self, layout: list[tuple[str, tuple[int, ...]]]):
        self.layout = list(layout)
        self._slices: dict[str, tuple[int, int, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in self.layout:
            size = int(np.prod(shape, dtype=np.int64)) if shape else 1
            self._slices[name] = (offset, offset + size, shape)
            offset += size
        self.flat = np.zeros(offset, dtype=np.float64)
        self.version = 0

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.layout]

    @property
    def size(self) -> int:
        return self.flat.size

    def view(self, name: str) -> np.ndarray:
        start, stop, shape = self._slices[name]
        return self.flat[start:stop].reshape(shape)

    def views(self) -> dict[str, np.ndarray]:
        return {name: self.view(name) for name in self.names}

    def set(self, name: str, value: np.ndarray) -> None:
        view = self.view(name)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != view.shape:
            raise ShapeError(f"{name}: expected {view.shape}, got {value.shape}")
        view[...] = value

    def zeros_like(self) -> "ParamStore":
        return ParamStore(self.layout)

    def copy(self) -> "ParamStore":
        dup = ParamStore(self.layout)
        dup.flat[...] = self.flat
        dup.version = self.version
        return dup

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.flat, dtype="<f8").tobytes()).hexdigest()

    def assert_all_finite(self) -> None:
        if not np.isfinite(self.flat).all():
            bad = self.name_of_flat_index(int(np.flatnonzero(~np.isfinite(self.flat))[0]))
            raise ShapeError(f"non-finite parameter in view {bad!r}")

    def name_of_flat_index(self, idx: int) -> str:
        for name, (start, stop, _) in self._slices.items():
            if start <= idx < stop:
                return name
        raise KeyError(idx)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def he_normal(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def orthogonal(rng: np.random.Generator, shape) -> np.ndarray:
    """Orthonormal rows (if rows <= cols) or columns, from a sign-corrected QR."""
    rows, cols = shape
    big, small = max(rows, cols), min(rows, cols)
    a = rng.normal(0.0, 1.0, size=(big, small))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))[None, :]
    if rows < cols:
        return q.T.copy()
    return q.copy()


def _init(tag: str, rng, shape, fan_in, fan_out) -> np.ndarray:
    if tag == "glorot_uniform":
        return glorot_uniform(rng, shape, fan_in, fan_out)
    if tag == "he_normal":
        return he_normal(rng, shape, fan_in)
    if tag == "orthogonal":
        return orthogonal(rng, shape)
    if tag == "zeros":
        return np.zeros(shape)
    raise ConfigError(f"unknown initializer {tag!r}")


def param_layout(spec: ModelSpec) -> list[tuple[str, tuple[int, ...]]]:
    if spec.kind == "mlp":
        h1, h2 = spec.hidden_sizes
        return [
            ("dense0/kernel", (spec.input_dim, h1)),
            ("dense0/bias", (h1,)),
            ("dense1/kernel", (h1, h2)),
            ("dense1/bias", (h2,)),
            ("out/kernel", (h2, spec.output_units)),
            ("out/bias", (spec.output_units,)),
        ]
    h = spec.lstm_units
    layout = [
        ("lstm/kernel", (spec.step_dim, 4 * h)),
        ("lstm/recurrent", (h, 4 * h)),
        ("lstm/bias", (4 * h,)),
    ]
    if spec.kind == "lstm_attention":
        layout += [
            ("attn/kernel", (h, h)),
            ("attn/bias", (h,)),
            ("attn/score", (h,)),
        ]
    layout += [
        ("dense/kernel", (h, spec.dense_units)),
        ("dense/bias", (spec.dense_units,)),
        ("out/kernel", (spec.dense_units, spec.output_units)),
        ("out/bias", (spec.output_units,)),
    ]
    return layout


def regularized_kernels(spec: ModelSpec) -> list[str]:
    """Kernels the L2 penalty applies to: every dense kernel, nothing else."""
    if spec.kind == "mlp":
        return ["dense0/kernel", "dense1/kernel", "out/kernel"]
    return ["dense/kernel", "out/kernel"]


def init_params(spec: ModelSpec, seed: int | None = None) -> ParamStore:
    """Fresh parameters per the architecture's initializer tags.

    Biases start at zero except the LSTM forget gate, which starts at 1 so
    early training does not flush the cell state.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    params = ParamStore(param_layout(spec))
    h = spec.lstm_units
    if spec.kind == "mlp":
        h1, h2 = spec.hidden_sizes
        params.set("dense0/kernel", _init(spec.kernel_init, rng, (spec.input_dim, h1), spec.input_dim, h1))
        params.set("dense1/kernel", _init(spec.kernel_init, rng, (h1, h2), h1, h2))
        params.set("out/kernel", _init(spec.kernel_init, rng, (h2, spec.output_units), h2, spec.output_units))
        return params
    params.set("lstm/kernel", _init(spec.kernel_init, rng, (spec.step_dim, 4 * h), spec.step_dim, 4 * h))
    params.set("lstm/recurrent", _init(spec.recurrent_init, rng, (h, 4 * h), h, 4 * h))
    bias = params.view("lstm/bias")
    bias[h : 2 * h] = 1.0  # forget gate
    if spec.kind == "lstm_attention":
        params.set("attn/kernel", _init(spec.kernel_init, rng, (h, h), h, h))
        params.set("attn/score", _init(spec.kernel_init, rng, (h,), h, 1))
    params.set("dense/kernel", _init(spec.dense_init, rng, (h, spec.dense_units), h, spec.dense_units))
    params.set("out/kernel", _init(spec.kernel_init, rng, (spec.dense_units, spec.output_units), spec.dense_units, spec.output_units))
    return params
