"""Real-transformer companion to the warspeech pipeline.

Produces document vectors from a locally available pretrained encoder
and writes them in the WEMB interchange format the pipeline imports;
optionally fine-tunes the encoder as a binary classifier and emits
metrics in the pipeline's evaluation schema.  The two packages share
nothing but those file formats.
"""

from .encode import EncoderConfig, encode_corpus
from .errors import ConfigError, DataError, EncoderUnavailable, ParseError
from .finetune import HyperParams, build_optimizer, finetune_classifier
from .manifest import Manifest, read_manifest
from .wemb import read_wemb, write_wemb

__all__ = [
    "ConfigError",
    "DataError",
    "EncoderConfig",
    "EncoderUnavailable",
    "HyperParams",
    "Manifest",
    "ParseError",
    "build_optimizer",
    "encode_corpus",
    "finetune_classifier",
    "read_manifest",
    "read_wemb",
    "write_wemb",
]
