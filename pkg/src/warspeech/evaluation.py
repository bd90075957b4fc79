"""Classification metrics and the training-curve / model-comparison artifacts.

AUC is computed two ways that must agree: the rank statistic (ties get
half credit) is the reported number, and the trapezoidal area under the
emitted ROC curve is asserted equal to it in tests.  Curve and comparison
tables are comma-delimited text; charts are standalone SVG built by hand
so reruns are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .nn.spec import TrainReport


@dataclass
class MetricsReport:
    model: str
    accuracy: float
    f1: float
    tn: int
    fp: int
    fn: int
    tp: int
    auc_roc: float | None = None
    # (fpr, tpr, threshold), thresholds descending
    roc_points: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def confusion(self) -> tuple[int, int, int, int]:
        return (self.tn, self.fp, self.fn, self.tp)


def _positive_column(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 2:
        return scores[:, 1]
    return scores


def binary_metrics(scores, labels, threshold: float = 0.5, model: str = "") -> MetricsReport:
    """Accuracy, F1 (positive class 1), and the confusion matrix.

    A score >= threshold predicts positive.  Precision, recall, and F1
    fall back to 0 whenever their denominators vanish.
    """
    s = _positive_column(scores)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape[0] != y.shape[0]:
        raise DataError(f"{s.shape[0]} scores vs {y.shape[0]} labels")
    if s.shape[0] == 0:
        raise DataError("no scores to evaluate")
    pred = (s >= threshold).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    accuracy = (tp + tn) / y.shape[0]
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricsReport(model=model, accuracy=accuracy, f1=f1, tn=tn, fp=fp, fn=fn, tp=tp)


def roc_auc(scores, labels) -> tuple[float, list[tuple[float, float, float]]]:
    """(AUC, ROC points).  AUC = P(score+ > score-) + half credit on ties.

    The curve sweeps the unique scores as thresholds, descending, with the
    conventional (0, 0) anchor; trapezoidal area under it equals the rank
    statistic identically.
    """
    s = _positive_column(scores)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape[0] != y.shape[0]:
        raise DataError(f"{s.shape[0]} scores vs {y.shape[0]} labels")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC undefined: labels contain a single class")

    # midranks: average rank within each tie group, 1-based
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.shape[0], dtype=np.float64)
    sorted_s = s[order]
    i = 0
    while i < len(sorted_s):
        j = i
        while j + 1 < len(sorted_s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[y == 1]))
    auc = (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    points: list[tuple[float, float, float]] = [(0.0, 0.0, math.inf)]
    tp = 0
    fp = 0
    desc = np.argsort(-s, kind="stable")
    k = 0
    while k < len(desc):
        t = s[desc[k]]
        while k < len(desc) and s[desc[k]] == t:
            if y[desc[k]] == 1:
                tp += 1
            else:
                fp += 1
            k += 1
        points.append((fp / n_neg, tp / n_pos, float(t)))
    return float(auc), points


def trapezoid_area(points: list[tuple[float, float, float]]) -> float:
    area = 0.0
    for (x0, y0, _), (x1, y1, _) in zip(points, points[1:]):
        area += (x1 - x0) * (y1 + y0) / 2.0
    return area


def evaluate_scores(model: str, scores, labels, threshold: float = 0.5) -> MetricsReport:
    """Full report: confusion metrics plus AUC and the ROC curve."""
    report = binary_metrics(scores, labels, threshold=threshold, model=model)
    auc, points = roc_auc(scores, labels)
    report.auc_roc = auc
    report.roc_points = points
    return report


def metrics_json(model: str, seed: int, train_report: TrainReport, metrics: MetricsReport) -> dict:
    return {
        "model": model,
        "seed": seed,
        "epochs": train_report.curves_dict(),
        "test": {
            "accuracy": metrics.accuracy,
            "f1": metrics.f1,
            "auc": metrics.auc_roc,
            "confusion": list(metrics.confusion),
        },
    }


# ---------------------------------------------------------------------------
# artifact emission


def _fmt(x: float) -> str:
    return repr(float(x))


def write_curves_csv(path, report: TrainReport) -> None:
    lines = ["epoch,train_loss,val_loss,train_acc,val_acc"]
    for e in report.epochs:
        lines.append(
            f"{e.epoch},{_fmt(e.train_loss)},{_fmt(e.val_loss)},{_fmt(e.train_acc)},{_fmt(e.val_acc)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_comparison_csv(path, metrics: list[MetricsReport]) -> None:
    """model,auc,f1 rows sorted by AUC descending, name-ascending on ties."""
    rows = sorted(metrics, key=lambda m: (-(m.auc_roc or 0.0), m.model))
    lines = ["model,auc,f1"]
    for m in rows:
        lines.append(f"{m.model},{_fmt(m.auc_roc or 0.0)},{_fmt(m.f1)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_PALETTE = ("#3366aa", "#dd7733", "#339966", "#aa3355")


def _svg_open(width: int, height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]


def _axes(parts, x0, y0, x1, y1) -> None:
    parts.append(
        f'<path d="M {x0} {y1} L {x0} {y0} M {x0} {y1} L {x1} {y1}" stroke="black" fill="none"/>'
    )


def _scale(v, lo, hi, a, b) -> float:
    if hi == lo:
        return (a + b) / 2.0
    return a + (v - lo) * (b - a) / (hi - lo)


def svg_line_chart(title: str, series: list[tuple[str, list[float], list[float]]]) -> str:
    """Standalone line chart; series = [(name, xs, ys)].  Deterministic text."""
    W, H = 640, 360
    x0, y0, x1, y1 = 60, 36, 600, 320
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    xlo, xhi = min(xs_all), max(xs_all)
    ylo, yhi = min(ys_all), max(ys_all)
    if ylo == yhi:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    parts = _svg_open(W, H, title)
    _axes(parts, x0, y0, x1, y1)
    for lab, vx in ((f"{xlo:g}", x0), (f"{xhi:g}", x1)):
        parts.append(f'<text x="{vx}" y="{y1 + 16}" text-anchor="middle">{lab}</text>')
    for lab, vy in ((f"{ylo:.3f}", y1), (f"{yhi:.3f}", y0)):
        parts.append(f'<text x="{x0 - 6}" y="{vy + 4}" text-anchor="end">{lab}</text>')
    for idx, (name, xs, ys) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(
            f"{_scale(x, xlo, xhi, x0, x1):.2f},{_scale(y, ylo, yhi, y1, y0):.2f}"
            for x, y in zip(xs, ys)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = y0 + 14 * idx
        parts.append(f'<rect x="{x1 - 130}" y="{ly}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{x1 - 114}" y="{ly + 9}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_bar_chart(title: str, groups: list[tuple[str, list[tuple[str, float]]]]) -> str:
    """Grouped bars, values in [0, 1]; groups = [(group, [(series, value)])]."""
    W, H = 640, 360
    x0, y0, x1, y1 = 60, 36, 600, 320
    parts = _svg_open(W, H, title)
    _axes(parts, x0, y0, x1, y1)
    for frac in (0.0, 0.5, 1.0):
        vy = _scale(frac, 0.0, 1.0, y1, y0)
        parts.append(f'<text x="{x0 - 6}" y="{vy + 4:.1f}" text-anchor="end">{frac:g}</text>')
    n_groups = max(len(groups), 1)
    slot = (x1 - x0) / n_groups
    series_names: list[str] = []
    for g, (gname, bars) in enumerate(groups):
        n_bars = max(len(bars), 1)
        bw = slot * 0.7 / n_bars
        left = x0 + g * slot + slot * 0.15
        for b, (sname, value) in enumerate(bars):
            if sname not in series_names:
                series_names.append(sname)
            color = _PALETTE[series_names.index(sname) % len(_PALETTE)]
            bx = left + b * bw
            top = _scale(value, 0.0, 1.0, y1, y0)
            parts.append(
                f'<rect x="{bx:.2f}" y="{top:.2f}" width="{bw:.2f}" '
                f'height="{y1 - top:.2f}" fill="{color}"/>'
            )
            parts.append(
                f'<text x="{bx + bw / 2:.2f}" y="{top - 3:.2f}" text-anchor="middle" '
                f'font-size="10">{value:.3f}</text>'
            )
        parts.append(
            f'<text x="{x0 + g * slot + slot / 2:.2f}" y="{y1 + 16}" '
            f'text-anchor="middle">{gname}</text>'
        )
    for idx, sname in enumerate(series_names):
        color = _PALETTE[idx % len(_PALETTE)]
        ly = y0 + 14 * idx
        parts.append(f'<rect x="{x1 - 130}" y="{ly}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{x1 - 114}" y="{ly + 9}">{sname}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_curves_and_comparison(
    items: list[tuple[str, TrainReport, MetricsReport]], out_dir
) -> list[Path]:
    """Write per-model curve tables/charts and the cross-model comparison.

    Returns the written paths.  Output depends only on the inputs, so a
    rerun over identical reports reproduces every file byte for byte.
    """
    if not items:
        raise DataError("nothing to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for model, train_report, _ in items:
        csv_path = out / f"curves_{model}.csv"
        write_curves_csv(csv_path, train_report)
        written.append(csv_path)
        epochs = [float(e.epoch) for e in train_report.epochs]
        chart = svg_line_chart(
            f"training curves: {model}",
            [
                ("train_loss", epochs, [e.train_loss for e in train_report.epochs]),
                ("val_loss", epochs, [e.val_loss for e in train_report.epochs]),
                ("train_acc", epochs, [e.train_acc for e in train_report.epochs]),
                ("val_acc", epochs, [e.val_acc for e in train_report.epochs]),
            ],
        )
        svg_path = out / f"curves_{model}.svg"
        svg_path.write_text(chart, encoding="utf-8")
        written.append(svg_path)
    metrics = [m for _, _, m in items]
    cmp_path = out / "comparison.csv"
    write_comparison_csv(cmp_path, metrics)
    written.append(cmp_path)
    ordered = sorted(metrics, key=lambda m: (-(m.auc_roc or 0.0), m.model))
    bars = svg_bar_chart(
        "model comparison",
        [(m.model, [("auc", m.auc_roc or 0.0), ("f1", m.f1)]) for m in ordered],
    )
    bar_path = out / "comparison.svg"
    bar_path.write_text(bars, encoding="utf-8")
    written.append(bar_path)
    return written
