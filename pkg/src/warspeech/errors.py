"""Exception types shared across the pipeline.

Every error the library raises deliberately derives from PipelineError so
the command-line driver can map failures to a nonzero exit with a readable
message instead of a traceback.
"""


class PipelineError(Exception):
    """Base class for all deliberate pipeline failures."""


class ParseError(PipelineError):
    """An input file could not be parsed (bad date, bad header, bad bytes)."""


class ValidationError(PipelineError):
    """Parsed data violates a corpus invariant (empty transcript, dup id)."""


class ConfigError(PipelineError):
    """A configuration value is outside its allowed range."""


class AlignmentError(PipelineError):
    """Row order or document ids disagree with the corpus manifest."""


class DataError(PipelineError):
    """Data values are unusable (non-finite, tampered artifact)."""


class ShapeError(PipelineError):
    """An array has the wrong dimensions for the requested operation."""


class StaleCacheError(PipelineError):
    """A backward pass was handed a cache from an outdated forward pass."""
