"""Class rebalancing: synthetic minority oversampling plus random
undersampling of the majority class, composed as one pipeline.

Synthetic rows are convex interpolations x_i + u * (x_nn - x_i) between a
minority row and one of its k nearest minority neighbors.  Every output
row carries lineage so the geometry is verifiable after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError, ValidationError
from .seeds import derive_seed


@dataclass
class ResampleConfig:
    k_neighbors: int = 5
    oversample_multiplier: float = 4.0
    undersample_target_ratio: float = 1.0  # majority:minority after the pipeline
    seed: int = 0
    apply_before_split: bool = False

    def validate(self) -> None:
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.oversample_multiplier < 1.0:
            raise ConfigError(
                f"oversample_multiplier must be >= 1, got {self.oversample_multiplier}"
            )
        if self.undersample_target_ratio <= 0.0:
            raise ConfigError(
                f"undersample_target_ratio must be > 0, got {self.undersample_target_ratio}"
            )


@dataclass(frozen=True)
class LineageRow:
    """Provenance of one output row.

    ``parent`` (and ``neighbor`` for synthetic rows) index rows of the
    matrix handed to the pipeline; ``u`` is the interpolation coefficient.
    """

    kind: str  # original | synthetic | majority
    parent: int
    neighbor: int = -1
    u: float = float("nan")

    def to_line(self) -> str:
        if self.kind == "synthetic":
            return f"synthetic\t{self.parent}\t{self.neighbor}\t{self.u!r}"
        return f"{self.kind}\t{self.parent}"

    @classmethod
    def from_line(cls, line: str) -> "LineageRow":
        parts = line.rstrip("\n").split("\t")
        if parts[0] == "synthetic":
            if len(parts) != 4:
                raise ParseError(f"bad lineage line: {line!r}")
            return cls("synthetic", int(parts[1]), int(parts[2]), float(parts[3]))
        if parts[0] in ("original", "majority") and len(parts) == 2:
            return cls(parts[0], int(parts[1]))
        raise ParseError(f"bad lineage line: {line!r}")


def write_lineage(lineage: list[LineageRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in lineage:
            fh.write(row.to_line() + "\n")


def read_lineage(path: str | Path) -> list[LineageRow]:
    with open(path, encoding="utf-8") as fh:
        return [LineageRow.from_line(line) for line in fh if line.strip()]


def knn_minority(X_min: np.ndarray, k: int) -> np.ndarray:
    """Indices of each minority row's k nearest minority rows (self excluded).

    Euclidean distance, ties broken toward the lower index.
    """
    X_min = np.asarray(X_min, dtype=np.float64)
    n = X_min.shape[0]
    if n < 2:
        raise ConfigError(f"need at least 2 minority rows, got {n}")
    if k > n - 1:
        raise ConfigError(f"k={k} too large for {n} minority rows (max {n - 1})")
    sq = np.sum(X_min * X_min, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X_min @ X_min.T)
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps equal distances ordered by index
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k].astype(np.int64)


def smote_oversample(
    X_min: np.ndarray,
    neighbors: np.ndarray,
    n_synthetic: int,
    rng_seed: int,
) -> tuple[np.ndarray, list[LineageRow]]:
    """Generate ``n_synthetic`` interpolated minority rows.

    Base rows cycle round-robin; the remainder is drawn without
    replacement.  Returns the synthetic matrix plus per-row lineage
    (parent, neighbor, u) with indices local to ``X_min``.
    """
    X_min = np.asarray(X_min, dtype=np.float64)
    if n_synthetic < 0:
        raise ConfigError(f"n_synthetic must be >= 0, got {n_synthetic}")
    n = X_min.shape[0]
    if neighbors.shape[0] != n:
        raise ConfigError(
            f"neighbor table rows ({neighbors.shape[0]}) != minority rows ({n})"
        )
    rng = np.random.default_rng(rng_seed)
    full_rounds, remainder = divmod(n_synthetic, n)
    bases = np.concatenate(
        [np.tile(np.arange(n), full_rounds),
         rng.choice(n, size=remainder, replace=False)]
    ).astype(np.int64)
    out = np.empty((n_synthetic, X_min.shape[1]), dtype=np.float64)
    lineage: list[LineageRow] = []
    for row, i in enumerate(bases):
        nn = int(neighbors[i, rng.integers(0, neighbors.shape[1])])
        u = float(rng.uniform(0.0, 1.0))
        out[row] = X_min[i] + u * (X_min[nn] - X_min[i])
        lineage.append(LineageRow("synthetic", int(i), nn, u))
    return out, lineage


def random_undersample(X_maj: np.ndarray, n_keep: int, rng_seed: int) -> np.ndarray:
    """Uniform subset of majority row indices, sorted ascending."""
    n = np.asarray(X_maj).shape[0]
    if n_keep > n:
        raise ConfigError(f"n_keep={n_keep} exceeds majority size {n}")
    if n_keep < 0:
        raise ConfigError(f"n_keep must be >= 0, got {n_keep}")
    rng = np.random.default_rng(rng_seed)
    return np.sort(rng.choice(n, size=n_keep, replace=False)).astype(np.int64)


def resample_pipeline(
    X: np.ndarray, y: np.ndarray, config: ResampleConfig
) -> tuple[np.ndarray, np.ndarray, list[LineageRow]]:
    """SMOTE the minority class, then undersample the majority.

    Output order: minority originals, synthetic rows, retained majority.
    Lineage indices refer to rows of the input ``X``.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X rows ({X.shape[0]}) != labels ({y.shape[0]})")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise ValidationError("resampling requires both classes present")
    if classes.size > 2:
        raise ValidationError(f"expected binary labels, got classes {classes.tolist()}")
    minority = classes[np.argmin(counts)] if counts[0] != counts[1] else classes[-1]
    idx_min = np.flatnonzero(y == minority)
    idx_maj = np.flatnonzero(y != minority)
    n_min = idx_min.size

    target_min = int(round(n_min * config.oversample_multiplier))
    n_synthetic = target_min - n_min
    neighbors = knn_minority(X[idx_min], config.k_neighbors)
    synthetic, syn_lineage = smote_oversample(
        X[idx_min], neighbors, n_synthetic, derive_seed(config.seed, "smote")
    )

    n_keep = int(round(config.undersample_target_ratio * target_min))
    if n_keep > idx_maj.size:
        raise ConfigError(
            f"undersample target {n_keep} exceeds majority size {idx_maj.size}; "
            "lower the multiplier or the ratio"
        )
    keep_local = random_undersample(
        X[idx_maj], n_keep, derive_seed(config.seed, "undersample")
    )
    keep = idx_maj[keep_local]

    X_out = np.vstack([X[idx_min], synthetic, X[keep]])
    y_out = np.concatenate(
        [
            np.full(n_min, minority, dtype=np.int64),
            np.full(n_synthetic, minority, dtype=np.int64),
            y[keep],
        ]
    )
    lineage: list[LineageRow] = [LineageRow("original", int(i)) for i in idx_min]
    for row in syn_lineage:
        # map minority-local parents back to input-row indices
        lineage.append(
            LineageRow(
                "synthetic",
                int(idx_min[row.parent]),
                int(idx_min[row.neighbor]),
                row.u,
            )
        )
    lineage.extend(LineageRow("majority", int(i)) for i in keep)
    return X_out, y_out, lineage
