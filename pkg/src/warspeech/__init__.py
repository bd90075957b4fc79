"""Classifying presidential speeches by imminent war onset.

The pipeline: ingest and label speeches, clean transcripts, produce
fixed-length document vectors, rebalance the classes, train from-scratch
neural classifiers, evaluate them, and explain the predictions with
attention statistics, local surrogates, and Shapley attributions.
"""

from . import corpus, embed, evaluation, interpret, nn, resample
from .corpus import (
    ClassBalance,
    CorpusManifest,
    LabeledCorpus,
    SpeechRecord,
    WarEvent,
    clean_transcript,
    corpus_stats,
    filter_after_1800,
    label_war,
    load_corpus,
    prepare_corpus,
    read_manifest,
    write_manifest,
)
from .embed import (
    EmbeddingMatrix,
    embed_hashed_ngrams,
    import_embeddings,
    read_embeddings,
    write_embeddings,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    ParseError,
    PipelineError,
    ShapeError,
    StaleCacheError,
    ValidationError,
)
from .evaluation import MetricsReport, binary_metrics, evaluate_scores, roc_auc
from .interpret import (
    AttentionSummary,
    GlobalExplanation,
    LocalExplanation,
    attention_summary,
    exact_shapley,
    extract_attention,
    global_shap_summary,
    kernel_shap,
    lime_explain,
)
from .nn import (
    ModelSpec,
    OptimizerConfig,
    ParamStore,
    TrainConfig,
    TrainReport,
    init_params,
    predict_scores,
    split_dataset,
    train,
)
from .resample import ResampleConfig, resample_pipeline
from .seeds import derive_seed

__version__ = "0.1.0"

__all__ = [
    "corpus",
    "embed",
    "evaluation",
    "interpret",
    "nn",
    "resample",
    "ClassBalance",
    "CorpusManifest",
    "LabeledCorpus",
    "SpeechRecord",
    "WarEvent",
    "clean_transcript",
    "corpus_stats",
    "filter_after_1800",
    "label_war",
    "load_corpus",
    "prepare_corpus",
    "read_manifest",
    "write_manifest",
    "EmbeddingMatrix",
    "embed_hashed_ngrams",
    "import_embeddings",
    "read_embeddings",
    "write_embeddings",
    "AlignmentError",
    "ConfigError",
    "DataError",
    "ParseError",
    "PipelineError",
    "ShapeError",
    "StaleCacheError",
    "ValidationError",
    "MetricsReport",
    "binary_metrics",
    "evaluate_scores",
    "roc_auc",
    "AttentionSummary",
    "GlobalExplanation",
    "LocalExplanation",
    "attention_summary",
    "exact_shapley",
    "extract_attention",
    "global_shap_summary",
    "kernel_shap",
    "lime_explain",
    "ModelSpec",
    "OptimizerConfig",
    "ParamStore",
    "TrainConfig",
    "TrainReport",
    "init_params",
    "predict_scores",
    "split_dataset",
    "train",
    "ResampleConfig",
    "resample_pipeline",
    "derive_seed",
    "__version__",
]
