"""Command-line pipeline driver.

Stages write artifacts into one run directory and record digests in
run_manifest.json; downstream stages verify those digests before reading.
Per-stage random streams derive from one global seed and a stage tag, so
any stage can rerun independently and two runs with the same config are
byte-identical.

Exit codes: 0 success, 1 pipeline failure with context, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .corpus import load_corpus, prepare_corpus, read_manifest, write_manifest
from .embed import embed_hashed_ngrams, import_embeddings, read_embeddings, write_embeddings
from .errors import PipelineError
from .evaluation import MetricsReport, emit_curves_and_comparison, evaluate_scores
from .interpret import attention_summary, extract_attention, global_shap_summary, kernel_shap, lime_explain
from .nn import (
    EpochStats,
    ModelSpec,
    OptimizerConfig,
    TrainConfig,
    TrainReport,
    load_checkpoint,
    positive_scores,
    predict_scores,
    save_checkpoint,
    split_dataset,
    train,
)
from .resample import ResampleConfig, resample_pipeline, write_lineage
from .rundir import RunDir, resolve_run_dir
from .seeds import derive_seed

MODEL_TAGS = {"mlp": "mlp", "lstm": "lstm", "lstm-attn": "lstm_attention"}
MANIFEST = "manifest.jsonl"
EMBEDDINGS = "embeddings.wemb"
RESAMPLE_CFG = "resample.json"
FRACTIONS = (0.8, 0.1, 0.1)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# config file support: `key = value` lines, flags override file values


def _load_config_file(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    p = Path(path)
    if not p.exists():
        raise PipelineError(f"config file not found: {p}")
    for i, raw in enumerate(p.read_text(encoding="utf-8").splitlines()):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PipelineError(f"{p} line {i + 1}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _cfg(cfg: dict[str, str], dest: str, default, typ=None):
    if dest not in cfg:
        return default
    raw = cfg[dest]
    if typ is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise PipelineError(f"config {dest}: expected a boolean, got {raw!r}")
    return typ(raw) if typ else raw


# ---------------------------------------------------------------------------
# shared helpers


def _open_run(args) -> RunDir:
    return RunDir(resolve_run_dir(args.run_dir))


def _load_aligned(rd: RunDir):
    """Manifest + embeddings, alignment enforced; X widened to float64."""
    rd.verify_inputs([MANIFEST, EMBEDDINGS])
    manifest = read_manifest(rd.require(MANIFEST, "corpus manifest"))
    emb_path = rd.require(EMBEDDINGS, "embeddings")
    matrix = import_embeddings(emb_path, manifest)
    X = matrix.values.astype(np.float64)
    y = np.asarray(manifest.labels, dtype=np.int64)
    return manifest, matrix, X, y


def _resample_config(rd: RunDir) -> ResampleConfig | None:
    path = rd.artifact(RESAMPLE_CFG)
    if not path.exists():
        return None
    rd.verify_inputs([RESAMPLE_CFG])
    raw = json.loads(path.read_text(encoding="utf-8"))
    return ResampleConfig(
        k_neighbors=raw["k_neighbors"],
        oversample_multiplier=raw["oversample_multiplier"],
        undersample_target_ratio=raw["undersample_target_ratio"],
        seed=raw["seed"],
        apply_before_split=raw["apply_before_split"],
    )


def _model_spec(tag: str, dim: int, timesteps: int, seed: int, loss: str) -> ModelSpec:
    kind = MODEL_TAGS[tag]
    output_units = 1 if loss == "binary_cross_entropy" else 2
    if kind == "mlp":
        return ModelSpec(kind="mlp", input_dim=dim, seed=seed, output_units=output_units)
    return ModelSpec(
        kind=kind, input_dim=dim, timesteps=timesteps, seed=seed, output_units=output_units
    )


def _optimizer_for(tag: str, lr: float | None) -> OptimizerConfig:
    if tag == "mlp":
        return OptimizerConfig(kind="sgd_nesterov", learning_rate=lr or 0.001, momentum=0.99)
    return OptimizerConfig(kind="adam", learning_rate=lr or 0.001)


def _checkpoint_name(tag: str) -> str:
    return f"model_{tag}.wwck"


# ---------------------------------------------------------------------------
# stage implementations


def _stage_prepare(args) -> int:
    rd = _open_run(args)
    records, wars = load_corpus(args.speeches, args.wars)
    labeled = prepare_corpus(
        records,
        wars,
        horizon_days=args.horizon_days,
        provenance={"speeches": Path(args.speeches).name, "wars": Path(args.wars).name},
    )
    write_manifest(labeled, rd.artifact(MANIFEST))
    rd.record_stage(
        "prepare",
        {"speeches": str(args.speeches), "wars": str(args.wars), "horizon_days": args.horizon_days},
        [MANIFEST],
    )
    pos = sum(labeled.labels)
    print(f"prepared {len(labeled.records)} records ({pos} positive) -> {rd.artifact(MANIFEST)}")
    return 0


def _stage_embed(args) -> int:
    rd = _open_run(args)
    rd.verify_inputs([MANIFEST])
    manifest = read_manifest(rd.require(MANIFEST, "corpus manifest"))
    if args.method != "hashed":
        raise PipelineError(f"unknown embedding method {args.method!r}")
    seed = derive_seed(args.seed, "embed")
    matrix = embed_hashed_ngrams(manifest.texts, dim=args.dim, seed=seed, doc_ids=manifest.doc_ids)
    write_embeddings(matrix, rd.artifact(EMBEDDINGS))
    rd.record_stage(
        "embed",
        {"method": args.method, "dim": args.dim, "seed": args.seed},
        [EMBEDDINGS],
        seed=seed,
    )
    print(f"embedded {matrix.n_docs} docs at dim {matrix.dim} -> {rd.artifact(EMBEDDINGS)}")
    return 0


def _stage_import_embeddings(args) -> int:
    rd = _open_run(args)
    rd.verify_inputs([MANIFEST])
    manifest = read_manifest(rd.require(MANIFEST, "corpus manifest"))
    matrix = import_embeddings(args.file, manifest)
    write_embeddings(matrix, rd.artifact(EMBEDDINGS))
    rd.record_stage("import-embeddings", {"file": str(args.file)}, [EMBEDDINGS])
    print(f"imported {matrix.n_docs} x {matrix.dim} embeddings from {args.file}")
    return 0


def _stage_resample(args) -> int:
    rd = _open_run(args)
    config = ResampleConfig(
        k_neighbors=args.k,
        oversample_multiplier=args.multiplier,
        undersample_target_ratio=args.ratio,
        seed=derive_seed(args.seed, "resample"),
        apply_before_split=args.paper_order,
    )
    config.validate()
    _dump_json(
        rd.artifact(RESAMPLE_CFG),
        {
            "k_neighbors": config.k_neighbors,
            "oversample_multiplier": config.oversample_multiplier,
            "undersample_target_ratio": config.undersample_target_ratio,
            "seed": config.seed,
            "apply_before_split": config.apply_before_split,
        },
    )
    outputs = [RESAMPLE_CFG]
    # preview lineage over the full dataset when embeddings are available
    if rd.artifact(EMBEDDINGS).exists():
        _, _, X, y = _load_aligned(rd)
        _, _, lineage = resample_pipeline(X, y, config)
        write_lineage(lineage, rd.artifact("lineage_preview.tsv"))
        outputs.append("lineage_preview.tsv")
    rd.record_stage(
        "resample",
        {
            "k": args.k,
            "multiplier": args.multiplier,
            "ratio": args.ratio,
            "seed": args.seed,
            "paper_order": args.paper_order,
        },
        outputs,
        seed=config.seed,
    )
    print(f"resample config recorded -> {rd.artifact(RESAMPLE_CFG)}")
    return 0


def _stage_train(args) -> int:
    rd = _open_run(args)
    manifest, matrix, X, y = _load_aligned(rd)
    tag = args.model
    loss = "binary_cross_entropy" if args.loss == "binary" else "sparse_categorical_cross_entropy"
    model_seed = derive_seed(args.seed, f"train:{tag}")
    shuffle_seed = derive_seed(args.seed, "data")  # shared so all models see one split
    spec = _model_spec(tag, matrix.dim, args.timesteps, model_seed, loss)
    train_cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        fractions=FRACTIONS,
        shuffle_seed=shuffle_seed,
        loss=loss,
    )
    opt_cfg = _optimizer_for(tag, args.lr)
    resample_cfg = _resample_config(rd)
    params, report = train(spec, X, y, train_cfg, opt_cfg, resample_cfg=resample_cfg)
    seeds = {
        "global": args.seed,
        "model": model_seed,
        "shuffle": shuffle_seed,
        "fractions": list(FRACTIONS),
    }
    ckpt = _checkpoint_name(tag)
    save_checkpoint(rd.artifact(ckpt), spec, params, seeds=seeds)
    report_name = f"report_{tag}.json"
    _dump_json(
        rd.artifact(report_name),
        {
            "model": tag,
            "seeds": seeds,
            "param_digest": report.param_digest,
            "epochs": report.curves_dict(),
        },
    )
    rd.record_stage(
        f"train:{tag}",
        {
            "model": tag,
            "epochs": args.epochs,
            "batch": args.batch,
            "timesteps": args.timesteps,
            "seed": args.seed,
            "loss": args.loss,
            "lr": args.lr,
        },
        [ckpt, report_name],
        seed=model_seed,
    )
    last = report.epochs[-1]
    print(
        f"trained {tag}: epoch {last.epoch} train_loss {last.train_loss:.4f} "
        f"val_acc {last.val_acc:.3f} -> {rd.artifact(ckpt)}"
    )
    return 0


def _load_model(rd: RunDir, checkpoint: str):
    name = Path(checkpoint).name
    rd.verify_inputs([name])
    path = rd.artifact(name)
    if not path.exists():
        path = Path(checkpoint)
    if not path.exists():
        raise PipelineError(f"missing checkpoint: {checkpoint} (run train first)")
    return load_checkpoint(path)


def _stage_evaluate(args) -> int:
    rd = _open_run(args)
    manifest, matrix, X, y = _load_aligned(rd)
    checkpoint = args.checkpoint or _checkpoint_name(args.model)
    spec, params, seeds = _load_model(rd, checkpoint)
    tag = args.model if args.checkpoint is None else Path(checkpoint).stem.removeprefix("model_")
    split = split_dataset(X, y, tuple(seeds.get("fractions", FRACTIONS)), seeds.get("shuffle", 0))
    scores = predict_scores(spec, params, X[split.test])
    metrics = evaluate_scores(tag, scores, y[split.test])
    report_name = f"report_{tag}.json"
    epochs = []
    if rd.artifact(report_name).exists():
        rd.verify_inputs([report_name])
        epochs = json.loads(rd.artifact(report_name).read_text(encoding="utf-8"))["epochs"]
    metrics_name = f"metrics_{tag}.json"
    _dump_json(
        rd.artifact(metrics_name),
        {
            "model": tag,
            "seed": seeds.get("global", 0),
            "epochs": epochs,
            "test": {
                "accuracy": metrics.accuracy,
                "f1": metrics.f1,
                "auc": metrics.auc_roc,
                "confusion": list(metrics.confusion),
            },
        },
    )
    rd.record_stage(f"evaluate:{tag}", {"checkpoint": str(checkpoint)}, [metrics_name])
    print(
        f"evaluated {tag}: accuracy {metrics.accuracy:.3f} f1 {metrics.f1:.3f} "
        f"auc {metrics.auc_roc:.3f} -> {rd.artifact(metrics_name)}"
    )
    return 0


def _score_fn(spec, params):
    def fn(rows: np.ndarray) -> np.ndarray:
        return positive_scores(predict_scores(spec, params, rows))

    return fn


def _stage_explain(args) -> int:
    rd = _open_run(args)
    manifest, matrix, X, y = _load_aligned(rd)
    checkpoint = args.checkpoint or _checkpoint_name(args.model)
    spec, params, seeds = _load_model(rd, checkpoint)

    if args.method == "attention":
        att = extract_attention(spec, params, X)
        summary = attention_summary(att, y, n_bins=args.bins)
        _dump_json(
            rd.artifact("attention_summary.json"),
            {
                "class_means": {str(c): summary.class_means[c] for c in (0, 1)},
                "separation": summary.separation,
                "bin_edges": summary.bin_edges.tolist(),
                "counts": {str(c): summary.counts[c].tolist() for c in (0, 1)},
                "n_docs": int(summary.doc_means.size),
            },
        )
        lines = ["bin_lo,bin_hi,count_class0,count_class1"]
        edges = summary.bin_edges
        for i in range(len(edges) - 1):
            lines.append(
                f"{edges[i]!r},{edges[i + 1]!r},{summary.counts[0][i]},{summary.counts[1][i]}"
            )
        rd.artifact("attention_hist.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        rd.record_stage(
            "explain:attention",
            {"model": args.model, "bins": args.bins},
            ["attention_summary.json", "attention_hist.csv"],
        )
        print(
            f"attention separation {summary.separation:.3f} "
            f"(class means {summary.class_means[0]:.4f} / {summary.class_means[1]:.4f})"
        )
        return 0

    split = split_dataset(X, y, tuple(seeds.get("fractions", FRACTIONS)), seeds.get("shuffle", 0))
    background = X[split.train].mean(axis=0)
    fn = _score_fn(spec, params)

    if args.method == "lime":
        if not args.doc_id:
            raise PipelineError("lime explanations are per-document: pass --doc-id")
        idx = _doc_index(manifest, args.doc_id)
        seed = derive_seed(args.seed, f"explain:lime:{args.doc_id}")
        exp = lime_explain(
            fn,
            X[idx],
            background,
            n_samples=args.n_samples,
            seed=seed,
            doc_id=args.doc_id,
        )
        name = f"lime_{args.doc_id}.json"
        _dump_json(
            rd.artifact(name),
            {
                "doc_id": exp.doc_id,
                "selected": [[d, w] for d, w in exp.selected],
                "intercept": exp.intercept,
                "fidelity": exp.fidelity,
                "seed": seed,
                "params": exp.params,
            },
        )
        rd.record_stage(
            f"explain:lime:{args.doc_id}",
            {"doc_id": args.doc_id, "n_samples": args.n_samples, "seed": args.seed},
            [name],
            seed=seed,
        )
        print(f"lime fidelity {exp.fidelity:.4f}, top dims {[d for d, _ in exp.selected[:5]]}")
        return 0

    if args.method == "shap":
        if args.doc_id:
            idx = _doc_index(manifest, args.doc_id)
            seed = derive_seed(args.seed, f"explain:shap:{args.doc_id}")
            phi, base = kernel_shap(
                fn, X[idx], background, n_coalitions=args.n_coalitions, seed=seed
            )
            name = f"shap_{args.doc_id}.json"
            _dump_json(
                rd.artifact(name),
                {
                    "doc_id": args.doc_id,
                    "base_value": base,
                    "phi": phi.tolist(),
                    "n_coalitions": args.n_coalitions,
                    "seed": seed,
                },
            )
            rd.record_stage(
                f"explain:shap:{args.doc_id}",
                {"doc_id": args.doc_id, "n_coalitions": args.n_coalitions, "seed": args.seed},
                [name],
                seed=seed,
            )
            print(f"shap base {base:.4f}, sum(phi) {phi.sum():.4f}")
            return 0
        if not getattr(args, "global"):
            raise PipelineError("shap needs --doc-id or --global")
        pos_idx = np.flatnonzero(y == 1)
        if pos_idx.size == 0:
            raise PipelineError("no label-1 documents to explain globally")
        seed = derive_seed(args.seed, "explain:shap:global")
        phis = np.zeros((pos_idx.size, X.shape[1]))
        base = 0.0
        for j, i in enumerate(pos_idx):
            phis[j], base = kernel_shap(
                fn, X[i], background, n_coalitions=args.n_coalitions,
                seed=derive_seed(seed, f"doc:{manifest.doc_ids[i]}"),
            )
        summary = global_shap_summary(phis, np.ones(pos_idx.size, dtype=np.int64), base_value=base)
        _dump_json(
            rd.artifact("shap_global.json"),
            {
                "base_value": summary.base_value,
                "ranking": [[int(d), float(summary.mean_abs_phi[d])] for d in summary.ranking],
                "n_documents": int(pos_idx.size),
                "n_coalitions": args.n_coalitions,
                "seed": seed,
            },
        )
        rd.record_stage(
            "explain:shap:global",
            {"n_coalitions": args.n_coalitions, "seed": args.seed},
            ["shap_global.json"],
            seed=seed,
        )
        top = summary.ranking[:5]
        print(f"global shap over {pos_idx.size} war docs; top dims {top}")
        return 0
    raise PipelineError(f"unknown explain method {args.method!r}")


def _doc_index(manifest, doc_id: str) -> int:
    try:
        return manifest.doc_ids.index(doc_id)
    except ValueError:
        raise PipelineError(f"doc_id {doc_id!r} not in the corpus manifest") from None


def _stage_report(args) -> int:
    rd = _open_run(args)
    items = []
    for tag in MODEL_TAGS:
        report_path = rd.artifact(f"report_{tag}.json")
        metrics_path = rd.artifact(f"metrics_{tag}.json")
        if not (report_path.exists() and metrics_path.exists()):
            continue
        rd.verify_inputs([report_path.name, metrics_path.name])
        raw_report = json.loads(report_path.read_text(encoding="utf-8"))
        raw_metrics = json.loads(metrics_path.read_text(encoding="utf-8"))
        train_report = TrainReport(
            epochs=[EpochStats(**e) for e in raw_report["epochs"]],
            param_digest=raw_report["param_digest"],
            seeds=raw_report["seeds"],
        )
        test = raw_metrics["test"]
        tn, fp, fn_, tp = test["confusion"]
        metrics = MetricsReport(
            model=tag,
            accuracy=test["accuracy"],
            f1=test["f1"],
            tn=tn,
            fp=fp,
            fn=fn_,
            tp=tp,
            auc_roc=test["auc"],
        )
        items.append((tag, train_report, metrics))
    if not items:
        raise PipelineError("nothing to report: train and evaluate at least one model first")
    written = emit_curves_and_comparison(items, rd.path)
    rd.record_stage(
        "report",
        {"models": [tag for tag, _, _ in items]},
        [p.name for p in written],
    )
    print(f"report over {len(items)} model(s): {', '.join(p.name for p in written)}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser(cfg: dict[str, str]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warspeech",
        description="Speech-to-war-label pipeline: prepare, embed, resample, train, evaluate, explain, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--run-dir", default=_cfg(cfg, "run_dir", None), help="run directory (or WARSPEECH_RUN_DIR)")
        p.add_argument("--config", default=None, help="key = value config file; flags override")

    p = sub.add_parser("prepare", help="load, filter, clean, and label the corpus")
    common(p)
    p.add_argument("--speeches", required="speeches" not in cfg, default=_cfg(cfg, "speeches", None))
    p.add_argument("--wars", required="wars" not in cfg, default=_cfg(cfg, "wars", None))
    p.add_argument("--horizon-days", type=int, default=_cfg(cfg, "horizon_days", 365, int))
    p.set_defaults(fn=_stage_prepare)

    p = sub.add_parser("embed", help="hash cleaned text into fixed-length vectors")
    common(p)
    p.add_argument("--method", choices=["hashed"], default=_cfg(cfg, "method", "hashed"))
    p.add_argument("--dim", type=int, default=_cfg(cfg, "dim", 768, int))
    p.add_argument("--seed", type=int, default=_cfg(cfg, "seed", 0, int))
    p.set_defaults(fn=_stage_embed)

    p = sub.add_parser("import-embeddings", help="validate and adopt an external WEMB file")
    common(p)
    p.add_argument("--file", required=True)
    p.set_defaults(fn=_stage_import_embeddings)

    p = sub.add_parser("resample", help="record the SMOTE + undersampling configuration")
    common(p)
    p.add_argument("--k", type=int, default=_cfg(cfg, "k", 5, int))
    p.add_argument("--multiplier", type=float, default=_cfg(cfg, "multiplier", 4.0, float))
    p.add_argument("--ratio", type=float, default=_cfg(cfg, "ratio", 1.0, float))
    p.add_argument("--seed", type=int, default=_cfg(cfg, "seed", 0, int))
    p.add_argument(
        "--paper-order",
        action="store_true",
        default=_cfg(cfg, "paper_order", False, bool),
        help="resample the full dataset before splitting",
    )
    p.set_defaults(fn=_stage_resample)

    p = sub.add_parser("train", help="train one model on the embedded corpus")
    common(p)
    p.add_argument("--model", choices=sorted(MODEL_TAGS), required=True)
    p.add_argument("--epochs", type=int, default=_cfg(cfg, "epochs", 10, int))
    p.add_argument("--batch", type=int, default=_cfg(cfg, "batch", 32, int))
    p.add_argument("--timesteps", type=int, default=_cfg(cfg, "timesteps", 16, int))
    p.add_argument("--seed", type=int, default=_cfg(cfg, "seed", 0, int))
    p.add_argument("--loss", choices=["binary", "sparse"], default=_cfg(cfg, "loss", "binary"))
    p.add_argument("--lr", type=float, default=_cfg(cfg, "lr", None, float))
    p.set_defaults(fn=_stage_train)

    p = sub.add_parser("evaluate", help="test-split metrics for a trained model")
    common(p)
    p.add_argument("--model", choices=sorted(MODEL_TAGS), default="mlp")
    p.add_argument("--checkpoint", default=None, help="checkpoint file (defaults to the model's)")
    p.set_defaults(fn=_stage_evaluate)

    p = sub.add_parser("explain", help="attention, lime, or shap explanations")
    common(p)
    p.add_argument("--method", choices=["attention", "lime", "shap"], required=True)
    p.add_argument("--model", choices=sorted(MODEL_TAGS), default="lstm-attn")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--doc-id", default=None)
    p.add_argument("--global", action="store_true", help="rank dimensions over war documents")
    p.add_argument("--seed", type=int, default=_cfg(cfg, "seed", 0, int))
    p.add_argument("--bins", type=int, default=_cfg(cfg, "bins", 30, int))
    p.add_argument("--n-samples", type=int, default=_cfg(cfg, "n_samples", 1000, int))
    p.add_argument("--n-coalitions", type=int, default=_cfg(cfg, "n_coalitions", 512, int))
    p.set_defaults(fn=_stage_explain)

    p = sub.add_parser("report", help="curve tables and the cross-model comparison")
    common(p)
    p.set_defaults(fn=_stage_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg: dict[str, str] = {}
    try:
        if "--config" in argv:
            cfg = _load_config_file(argv[argv.index("--config") + 1])
    except IndexError:
        print("error: --config needs a file path", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    parser = _build_parser(cfg)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
